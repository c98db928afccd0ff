"""Acceptance suite: one test per shipping criterion, tolerances pinned.

Each test is self-contained, states its bound inline, and asserts the
runtime limit that is part of its criterion.  Slow-path criteria (the
end-to-end training run, the determinism check) drive the public API the
same way the command line does.
"""

import time

import numpy as np
import pytest

from stabl import cli
from stabl.diagnostics import (
    DETECTION_PROTOCOL_SEED,
    converged_pca_coder,
    detection_counts,
    pca_policy_sweep,
)
from stabl.environments import (
    make_allen_cahn,
    make_environment,
    make_toda_lattice,
    make_toy2d,
    make_tubular_reactor,
)
from stabl.linalg import eigenvalue_order
from stabl.manifold import arnoldi_unstable_basis, unstable_coder
from stabl.nets import MlpNetwork
from stabl.rom import assemble_rom_adjoint, assemble_rom_sysid
from stabl.training import (
    RewardSpec,
    TrainConfig,
    closed_loop_spectrum,
    default_blowup_threshold,
    evaluate_policy,
    logmean,
    normalized_reward,
    reward,
    termination_penalty,
    train,
    training_policy,
)

SQRT5 = np.sqrt(5.0)

DESK_SYSTEMS = (
    ("toy2d", make_toy2d, 1),
    ("allen_cahn-100", lambda: make_allen_cahn(100), 1),
    ("tubular_reactor-198", lambda: make_tubular_reactor(198), 2),
    ("toda_lattice-50", lambda: make_toda_lattice(50), 2),
)


def _sorted_eigs(values):
    values = np.asarray(values, dtype=complex)
    return values[eigenvalue_order(values)]


def _dense_unstable_eigenvalues(env, margin=1e-9):
    jacobian = np.column_stack(
        [env.jvp_state(env.xbar, env.ubar, e) for e in np.eye(env.nx)]
    )
    values = np.linalg.eigvals(jacobian)
    return _sorted_eigs(values[np.abs(values) >= 1.0 - margin])


def test_criterion_01_closed_loop_decoupling_is_exact(toy2d, toy2d_basis):
    start = time.monotonic()
    rng = np.random.default_rng(1)
    for _ in range(50):
        psi = rng.uniform(-2.1 * SQRT5, -0.1 * SQRT5)
        eigs = closed_loop_spectrum(toy2d, toy2d_basis.vectors, [[psi]]).eigenvalues
        expected = np.sort([0.9, 1.1 + psi / SQRT5])
        assert np.max(np.abs(eigs.imag)) <= 1e-10
        assert np.max(np.abs(np.sort(eigs.real) - expected)) <= 1e-10
    assert time.monotonic() - start < 1.0


def test_criterion_02_principal_direction_coder_cannot_stabilize(toy2d, toy2d_basis):
    start = time.monotonic()
    psi_grid = np.linspace(-10.0, 10.0, 400)
    pca = converged_pca_coder(toy2d, rng=DETECTION_PROTOCOL_SEED)
    pca_sweep = pca_policy_sweep(toy2d, pca, psi_grid)
    assert int(pca_sweep.stabilizing_mask().sum()) == 0

    eig_sweep = pca_policy_sweep(
        toy2d, unstable_coder(toy2d, toy2d_basis), psi_grid
    )
    stabilizing = np.flatnonzero(eig_sweep.stabilizing_mask())
    assert stabilizing.size > 0
    # The stabilizing gains form one contiguous interval of the grid.
    assert np.array_equal(
        stabilizing, np.arange(stabilizing[0], stabilizing[-1] + 1)
    )
    assert time.monotonic() - start < 5.0


def test_criterion_03_krylov_basis_matches_dense_oracle():
    start = time.monotonic()
    for name, factory, expected_count in DESK_SYSTEMS:
        env = factory()
        basis = arnoldi_unstable_basis(env, rng=np.random.default_rng(4))
        dense = _dense_unstable_eigenvalues(env)
        assert basis.nr == expected_count == dense.size, name
        mine = _sorted_eigs(basis.eigenvalues)
        rel = np.max(np.abs(mine - dense) / np.abs(dense))
        assert rel <= 1e-8, f"{name}: relative eigenvalue error {rel}"
    assert time.monotonic() - start < 30.0


def test_criterion_04_adjoint_and_sysid_routes_agree():
    start = time.monotonic()
    for name, factory, _ in DESK_SYSTEMS:
        env = factory()
        coder = unstable_coder(
            env, arnoldi_unstable_basis(env, rng=np.random.default_rng(4))
        )
        adjoint = assemble_rom_adjoint(env, coder)
        sysid = assemble_rom_sysid(env, coder, delta=1e-6)
        deviation = np.max(np.abs(adjoint.jx - sysid.jx))
        bound = 1e-12 if name == "toy2d" else 1e-4
        assert deviation <= bound, f"{name}: route deviation {deviation}"
    assert time.monotonic() - start < 10.0


def test_criterion_05_latent_stability_lifts_to_full_stability():
    start = time.monotonic()
    for name, factory, _ in DESK_SYSTEMS:
        env = factory()
        basis = arnoldi_unstable_basis(env, rng=np.random.default_rng(4))
        model = assemble_rom_adjoint(env, unstable_coder(env, basis))
        rng = np.random.default_rng(7)
        accepted = 0
        draws = 0
        while accepted < 50:
            draws += 1
            assert draws < 200_000, f"{name}: gain sampling stalled"
            gain = rng.standard_normal((env.nu, basis.nr))
            latent = model.jx + model.ju @ gain
            if np.max(np.abs(np.linalg.eigvals(latent))) >= 1.0:
                continue
            accepted += 1
            full = closed_loop_spectrum(env, basis.vectors, gain).eigenvalues
            radius = float(np.max(np.abs(full)))
            assert radius < 1.0, f"{name}: gain {accepted} radius {radius}"
    assert time.monotonic() - start < 30.0


def test_criterion_06_end_to_end_multifidelity_desk_run():
    start = time.monotonic()
    config = {
        "train.method": "mf-umpo", "train.seed": 0, "train.tf": 200,
        "train.lambda_u": 0.001, "train.max_steps": 8000,
        "train.pretrain_steps": 12000, "train.eval_interval": 500,
        "train.noise": 0.2, "train.init_noise": 0.1,
        "train.blowup_factor": 5,
        "train.actor_lr": 3e-4, "train.critic_lr": 3e-3,
        "net.actor": "linear", "net.action_scale": -1.0,
    }
    env = make_environment("allen_cahn", config)
    train_config = TrainConfig.from_config(config)
    result = train(env, train_config)
    assert result.status == "completed"
    assert result.total_steps <= 20_000

    spec = RewardSpec(
        train_config.lambda_u, train_config.tf,
        default_blowup_threshold(env, train_config.blowup_factor),
    )
    # (b) the trained policy contracts the disturbed state by >= 10x.
    final = evaluate_policy(env, training_policy(env, result), spec,
                            rng=np.random.default_rng(5))
    assert final.record.episode_length == 200
    assert not final.record.terminated_early
    assert final.final_distance <= 0.1 * final.post_disturbance_distance

    # (a) the pre-trained policy already survives a full episode when
    # lifted from the latent model to the full system.
    result.agent.restore(result.pretrain_blocks)
    pre = evaluate_policy(env, training_policy(env, result), spec,
                          rng=np.random.default_rng(5))
    assert pre.record.episode_length == 200
    assert not pre.record.terminated_early
    assert time.monotonic() - start < 600.0


def test_criterion_07_reward_and_metric_hand_values():
    tol = 1e-12
    spec = RewardSpec(lambda_u=7.0, tf=100, blowup_threshold=1e3)
    ubar = np.array([0.5])
    assert reward(spec, np.zeros(3), ubar, ubar) == 0.0
    assert reward(spec, np.array([1.0, 0.0]), ubar, ubar) == pytest.approx(-1.0, abs=tol)
    heavy = RewardSpec(lambda_u=1000.0, tf=100, blowup_threshold=1e3)
    assert reward(heavy, np.array([2.0, 0.0]), ubar + 1.0, ubar) == pytest.approx(
        -np.sqrt(1004.0), abs=tol
    )

    plain = RewardSpec(lambda_u=0.0, tf=100, blowup_threshold=1e3)
    assert termination_penalty(plain, np.array([2.0, 0.0]), ubar, ubar, ta=50) == \
        pytest.approx(-np.sqrt(200.0), abs=tol)
    assert termination_penalty(plain, np.zeros(2), ubar, ubar, ta=50) == 0.0
    assert termination_penalty(plain, np.array([1.0]), ubar, ubar, ta=99) == \
        pytest.approx(-1.0, abs=tol)

    assert normalized_reward(-100.0, 1, 0.0, 100) == pytest.approx(-10.0, abs=tol)
    assert normalized_reward(0.0, 3, 2.0, 50) == 0.0
    assert normalized_reward(-np.sqrt(501000.0), 2, 1000.0, 500) == \
        pytest.approx(-1.0, abs=tol)

    assert logmean([-1.0, -100.0]) == pytest.approx(-10.0, abs=tol)
    assert logmean([-5.0]) == pytest.approx(-5.0, abs=tol)
    assert logmean([-10.0, -10.0, -10.0]) == pytest.approx(-10.0, abs=tol)


def test_criterion_08_backward_pass_matches_central_differences():
    start = time.monotonic()

    def central_difference(net, params, x, seed_vec, h=1e-6):
        grad = np.empty_like(params)
        for i in range(params.size):
            up = params.copy()
            up[i] += h
            down = params.copy()
            down[i] -= h
            grad[i] = (
                seed_vec @ net.forward(up, x)[0]
                - seed_vec @ net.forward(down, x)[0]
            ) / (2.0 * h)
        return grad

    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        depth = int(rng.integers(0, 3))
        sizes = (
            (int(rng.integers(1, 5)),)
            + tuple(int(rng.integers(1, 7)) for _ in range(depth))
            + (int(rng.integers(1, 4)),)
        )
        hidden = str(rng.choice(["tanh", "elu"]))
        for final in ("identity", "tanh", "elu"):
            net = MlpNetwork(sizes, hidden_activation=hidden,
                             final_activation=final)
            params = 0.5 * rng.standard_normal(net.num_params)
            x = rng.standard_normal((1, sizes[0]))
            seed_vec = rng.standard_normal(sizes[-1])
            _, cache = net.forward_with_cache(params, x)
            param_grad, _ = net.backward(params, cache, seed_vec.reshape(1, -1))
            numeric = central_difference(net, params, x, seed_vec)
            scale = max(1.0, float(np.max(np.abs(numeric))))
            worst = max(worst, float(np.max(np.abs(param_grad - numeric)) / scale))
    assert worst <= 1e-6, f"worst relative gradient error {worst}"
    assert time.monotonic() - start < 30.0


def test_criterion_09_detection_cost_grows_as_coupling_weakens():
    start = time.monotonic()
    counts = detection_counts((0.01, 0.1, 1.0, 10.0))
    assert all(a >= b for a, b in zip(counts, counts[1:])), counts
    assert counts[0] / counts[-1] >= 5.0, counts
    assert time.monotonic() - start < 60.0


def test_criterion_10_training_runs_are_reproducible(tmp_path):
    argv_tail = [
        "--quiet", "--seed", "11", "--max-steps", "5000",
        "--set", "train.tf=50", "--set", "train.eval_interval=1000",
        "--set", "net.actor_hidden=8,4", "--set", "net.critic_hidden=16,8",
    ]

    def run(out_dir):
        assert cli.main(["train", "--env", "toy2d", "--method", "umpo",
                         "--out-dir", str(out_dir), *argv_tail]) == 0
        lines = (out_dir / "train_log.csv").read_text().splitlines()
        header = lines[0].split(",")
        keep = [i for i, column in enumerate(header) if column != "wall_time_s"]
        return "\n".join(
            ",".join(line.split(",")[i] for i in keep) for line in lines
        )

    first = run(tmp_path / "a")
    second = run(tmp_path / "b")
    assert first == second
    assert first.count("\n") >= 99  # 5000 steps of 50-step episodes
