"""Benchmark environments: fixed points, derivatives, blowup, wiring."""

import numpy as np
import pytest

from stabl.environments import (
    QueryCountingEnvironment,
    equilibrium_residual,
    finite_difference_vjp_oracle,
    make_allen_cahn,
    make_environment,
    make_toda_lattice,
    make_toy2d,
    make_tubular_reactor,
    newton_steady_state,
    second_difference_matrix,
)
from stabl.errors import NewtonNoConvergenceError, StateBlowupError, UsageError

SMALL_FACTORIES = (
    ("toy2d", make_toy2d),
    ("allen_cahn", lambda: make_allen_cahn(32)),
    ("tubular_reactor", lambda: make_tubular_reactor(32)),
    ("toda_lattice", lambda: make_toda_lattice(10)),
)


@pytest.mark.parametrize("name,factory", SMALL_FACTORIES)
def test_fixed_point_and_spec_consistency(name, factory):
    env = factory()
    assert env.name == name
    assert equilibrium_residual(env) <= 1e-12 * (1.0 + np.max(np.abs(env.xbar)))
    assert env.xbar.shape == (env.nx,)
    assert env.ubar.shape == (env.nu,)
    assert env.output_matrix.shape[1] == env.nx
    y = env.output(env.xbar)
    assert y.shape == (env.output_matrix.shape[0],)
    assert np.allclose(y, env.output_matrix @ env.xbar, atol=1e-14)


def test_toy2d_dynamics_exact():
    env = make_toy2d(epsilon=0.1)
    assert np.array_equal(env.xbar, np.zeros(2))
    assert np.array_equal(env.ubar, np.zeros(1))
    assert env.tau == 0.01
    nxt = env.step(np.array([1.0, 1.0]), np.array([2.0]))
    assert np.allclose(nxt, [0.9 * 1.0 + 2.0, 0.1 * 1.0 + 1.1 * 1.0], atol=1e-15)
    # Columns of the state Jacobian.
    j1 = env.jvp_state(env.xbar, env.ubar, np.array([1.0, 0.0]))
    j2 = env.jvp_state(env.xbar, env.ubar, np.array([0.0, 1.0]))
    assert np.allclose(np.column_stack([j1, j2]), [[0.9, 0.0], [0.1, 1.1]])
    assert np.allclose(
        env.jvp_control(env.xbar, env.ubar, np.array([1.0])), [1.0, 0.0]
    )


@pytest.mark.parametrize("name,factory", SMALL_FACTORIES)
def test_jvp_vjp_adjoint_consistency(name, factory):
    env = factory()
    rng = np.random.default_rng(11)
    x = env.xbar + 0.01 * rng.normal(size=env.nx)
    u = env.ubar + 0.01 * rng.normal(size=env.nu)
    v, z = rng.normal(size=env.nx), rng.normal(size=env.nx)
    w = rng.normal(size=env.nu)
    lhs = env.jvp_state(x, u, v) @ z
    rhs = v @ env.vjp_state(x, u, z)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)
    lhs_u = env.jvp_control(x, u, w) @ z
    rhs_u = w @ env.vjp_control(x, u, z)
    assert lhs_u == pytest.approx(rhs_u, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("name,factory", SMALL_FACTORIES)
def test_vjp_matches_finite_differences(name, factory):
    env = factory()
    rng = np.random.default_rng(5)
    x = env.xbar + 0.01 * rng.normal(size=env.nx)
    u = env.ubar + 0.01 * rng.normal(size=env.nu)
    z = rng.normal(size=env.nx)
    exact = env.vjp_state(x, u, z)
    approx = finite_difference_vjp_oracle(env, x, u, z)
    assert np.allclose(exact, approx, rtol=1e-5, atol=1e-7)


def test_state_blowup_error_paths():
    env = make_toy2d()
    with pytest.raises(StateBlowupError) as excinfo:
        env.step(np.array([1.7e308, 1.7e308]), np.zeros(1))
    assert excinfo.value.index == 1  # the 1.1-row overflows first
    with pytest.raises(StateBlowupError):
        env.step(np.array([np.nan, 0.0]), np.zeros(1))
    imex = make_allen_cahn(16)
    with pytest.raises(StateBlowupError):
        imex.step(np.full(16, 1.7e308), imex.ubar)


def test_query_counting_wrapper():
    inner = make_toy2d()
    env = QueryCountingEnvironment(inner)
    x, u = np.array([0.1, -0.2]), np.array([0.3])
    assert np.array_equal(env.step(x, u), inner.step(x, u))
    env.step(x, u)
    assert env.steps == 2
    v = np.array([1.0, 0.0])
    env.jvp_state(x, u, v)
    env.vjp_state(x, u, v)
    env.jvp_control(x, u, u)
    env.vjp_control(x, u, v)
    assert env.derivative_queries == 4
    assert env.nx == inner.nx and env.tau == inner.tau


def test_make_environment_names_and_config():
    assert make_environment("toy2d").name == "toy2d"
    with pytest.raises(UsageError, match="unknown environment"):
        make_environment("pendulum")
    env = make_environment("toy2d", {"env.toy2d.epsilon": 0.5})
    col = env.jvp_state(np.zeros(2), np.zeros(1), np.array([1.0, 0.0]))
    assert np.allclose(col, [0.9, 0.5])
    small = make_environment("allen_cahn", {"env.allen_cahn.grid_size": 16})
    assert small.nx == 16
    # Keys for other environments are ignored.
    assert make_environment("toy2d", {"env.allen_cahn.grid_size": 16}).nx == 2


def test_toda_lattice_particle_count_validation():
    with pytest.raises(UsageError, match="divisible by 10"):
        make_toda_lattice(8)
    assert make_toda_lattice(10).nx == 20


def test_newton_steady_state():
    env = make_toy2d()
    root = newton_steady_state(env, env.ubar, np.array([0.3, -0.2]))
    assert np.allclose(root, env.xbar, atol=1e-10)
    with pytest.raises(NewtonNoConvergenceError):
        newton_steady_state(env, env.ubar, np.array([0.3, -0.2]), max_iterations=0)


def test_second_difference_matrix():
    m = second_difference_matrix(4, 1.0)
    expected = np.array(
        [
            [-2.0, 1.0, 0.0, 0.0],
            [1.0, -2.0, 1.0, 0.0],
            [0.0, 1.0, -2.0, 1.0],
            [0.0, 0.0, 1.0, -2.0],
        ]
    )
    assert np.array_equal(m, expected)
    assert np.array_equal(second_difference_matrix(4, 0.5), expected / 0.25)
