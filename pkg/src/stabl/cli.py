"""Command line interface for the stabilization pipeline.

Subcommands cover the pipeline end to end: ``eigenspace`` (unstable basis
estimation), ``rom`` (latent model assembly), ``train`` (policy learning),
``evaluate`` (disturbance-protocol rollout of a checkpoint), ``diagnose``
(1-D coder sweeps and detection counts), and ``sweep`` (cartesian config
grids with concurrent workers).

Every invocation resolves a flat config (file + repeated ``--set key=value``
overrides), writes a ``manifest.json`` into its output directory before any
work starts, and finalizes the manifest with the outcome.  Exit codes:
0 success, 2 usage/config errors, 3 runtime divergence.
"""

import argparse
import itertools
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import diagnostics
from .config import apply_overrides, coerce_value, load_config
from .ddpg import DdpgAgent, load_checkpoint, save_blocks, save_checkpoint
from .environments import make_environment
from .errors import StablError, UsageError
from .manifold import UnstableBasis, arnoldi_unstable_basis, unstable_coder
from .rom import assemble_rom_adjoint, assemble_rom_sysid
from .training import (
    RewardSpec,
    TrainConfig,
    default_blowup_threshold,
    evaluate_policy,
    logmean,
    read_eval_log,
    train,
    write_eval_log,
    write_evaluation_csv,
    write_train_log,
)

PROG = "stabl"


# ---------------------------------------------------------------------------
# Manifest lifecycle
# ---------------------------------------------------------------------------

def manifest_path(out_dir):
    return os.path.join(out_dir, "manifest.json")


def write_manifest(out_dir, command, environment=None, method=None, seed=None,
                   config=None):
    """Record the run before it starts; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    name = os.path.basename(os.path.abspath(out_dir))
    payload = {
        "run_id": "-".join(
            str(part) for part in (command, environment, method, name)
            if part is not None),
        "command": command,
        "environment": environment,
        "method": method,
        "seed": seed,
        "out_dir": os.path.abspath(out_dir),
        "config": dict(config or {}),
        "status": "running",
        "error": None,
        "started_unix": time.time(),
    }
    path = manifest_path(out_dir)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def finalize_manifest(path, status, error=None):
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    payload["status"] = status
    payload["error"] = error
    payload["finished_unix"] = time.time()
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_manifest(out_dir):
    with open(manifest_path(out_dir), "r", encoding="utf-8") as handle:
        return json.load(handle)


# ---------------------------------------------------------------------------
# CSV writers for basis and latent models
# ---------------------------------------------------------------------------

def write_eigenspace_csv(path, basis):
    """Eigenvalue summary section followed by one row per state index."""
    lines = ["col_index,eig_real,eig_imag,residual"]
    for j in range(basis.nr):
        value = complex(basis.eigenvalues[j])
        lines.append(",".join([
            str(j), repr(value.real), repr(value.imag),
            repr(float(basis.residuals[j])),
        ]))
    lines.append("")
    header = ["state_index"] + [f"w_col_{j}" for j in range(basis.nr)]
    lines.append(",".join(header))
    for i in range(basis.vectors.shape[0]):
        lines.append(",".join(
            [str(i)] + [repr(float(v)) for v in basis.vectors[i]]))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def read_eigenspace_csv(path):
    """Inverse of :func:`write_eigenspace_csv`."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        first, second = text.strip().split("\n\n")
        eig_lines = first.splitlines()
        vec_lines = second.splitlines()
        if eig_lines[0] != "col_index,eig_real,eig_imag,residual":
            raise ValueError(f"unexpected header {eig_lines[0]!r}")
        eigenvalues, residuals = [], []
        for line in eig_lines[1:]:
            _, re_part, im_part, res = line.split(",")
            eigenvalues.append(complex(float(re_part), float(im_part)))
            residuals.append(float(res))
        rows = [
            [float(v) for v in line.split(",")[1:]] for line in vec_lines[1:]
        ]
        vectors = np.array(rows) if rows else np.zeros((0, 0))
    except (ValueError, IndexError) as exc:
        raise UsageError(f"malformed eigenspace CSV {path}: {exc}") from exc
    return UnstableBasis(vectors=vectors,
                         eigenvalues=np.array(eigenvalues, dtype=complex),
                         residuals=np.array(residuals))


def write_rom_csv(path, model):
    """Two ``row,col,value`` sections: the state block then the control block."""
    lines = []
    for matrix in (model.jx, model.ju):
        lines.append("row,col,value")
        for i in range(matrix.shape[0]):
            for j in range(matrix.shape[1]):
                lines.append(f"{i},{j},{repr(float(matrix[i, j]))}")
        lines.append("")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines[:-1]) + "\n")


def write_field_csv(path, states):
    """State trajectory as one row per time index (space-time field)."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    header = ",".join(["time_index"]
                      + [f"state_{j}" for j in range(states.shape[1])])
    lines = [header]
    for t, row in enumerate(states):
        lines.append(",".join([str(t)] + [repr(float(v)) for v in row]))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _resolve_config(args):
    config = load_config(args.config) if args.config else {}
    apply_overrides(config, args.set)
    return config


def _resolve_out_dir(args):
    return args.out_dir or os.environ.get("STABL_OUT_DIR") or os.getcwd()


def _resolve_seed(args, config, default=0):
    if args.seed is not None:
        return int(args.seed)
    return int(config.get("train.seed", default))


def _say(args, message):
    if not args.quiet:
        print(message)


def _basis_for(env, seed):
    """The unstable basis exactly as a training run with ``seed`` builds it."""
    return arnoldi_unstable_basis(env, rng=np.random.default_rng(seed + 4))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_eigenspace(args):
    config = _resolve_config(args)
    out_dir = _resolve_out_dir(args)
    seed = _resolve_seed(args, config)
    manifest = write_manifest(out_dir, "eigenspace", environment=args.env,
                              seed=seed, config=config)
    try:
        env = make_environment(args.env, config)
        basis = _basis_for(env, seed)
        write_eigenspace_csv(os.path.join(out_dir, "eigenspace.csv"), basis)
        _say(args, f"environment {env.name}: unstable eigenvalues "
                   f"{[format(v, '.6g') for v in basis.eigenvalues]}")
        print(basis.nr)
    except BaseException as exc:
        finalize_manifest(manifest, "failed", error=str(exc))
        raise
    finalize_manifest(manifest, "completed")
    return 0


def cmd_rom(args):
    config = _resolve_config(args)
    out_dir = _resolve_out_dir(args)
    seed = _resolve_seed(args, config)
    manifest = write_manifest(out_dir, "rom", environment=args.env, seed=seed,
                              config=config)
    try:
        env = make_environment(args.env, config)
        basis = _basis_for(env, seed)
        if basis.nr == 0:
            raise UsageError(
                f"{env.name} has no unstable directions; nothing to reduce")
        coder = unstable_coder(env, basis)
        if args.route == "adjoint":
            model = assemble_rom_adjoint(env, coder)
        else:
            model = assemble_rom_sysid(env, coder, delta=args.delta)
        write_rom_csv(os.path.join(out_dir, "rom.csv"), model)
        write_eigenspace_csv(os.path.join(out_dir, "eigenspace.csv"), basis)
        _say(args, f"latent model: {model.nr} states, {model.nu} controls "
                   f"({args.route} route)")
    except BaseException as exc:
        finalize_manifest(manifest, "failed", error=str(exc))
        raise
    finalize_manifest(manifest, "completed")
    return 0


def _run_training(env_name, config, seed, out_dir, pretrained_path=None,
                  quiet=True):
    """Train once and persist all artifacts; returns the TrainResult."""
    env = make_environment(env_name, config)
    train_config = TrainConfig.from_config(config, seed=seed)
    pretrained = load_checkpoint(pretrained_path) if pretrained_path else None
    result = train(env, train_config, pretrained_blocks=pretrained)

    write_train_log(os.path.join(out_dir, "train_log.csv"), result.train_rows)
    write_eval_log(os.path.join(out_dir, "eval_history.csv"), result.eval_rows)
    save_checkpoint(result.agent, os.path.join(out_dir, "checkpoint.txt"))
    save_blocks(result.final_blocks,
                os.path.join(out_dir, "checkpoint_final.txt"))
    if result.pretrain_blocks is not None:
        save_blocks(result.pretrain_blocks,
                    os.path.join(out_dir, "checkpoint_pretrain.txt"))
    if result.basis is not None:
        write_eigenspace_csv(os.path.join(out_dir, "eigenspace.csv"),
                             result.basis)
    if not quiet:
        last = result.eval_rows[-1] if result.eval_rows else None
        closing = (f", final eval distance {last['final_distance']:.3e}"
                   if last else "")
        print(f"{result.method} on {env.name}: {result.total_steps} steps, "
              f"{len(result.train_rows)} episodes{closing}")
    return result


def cmd_train(args):
    config = _resolve_config(args)
    if args.method is not None:
        config["train.method"] = args.method
    if args.max_steps is not None:
        config["train.max_steps"] = int(args.max_steps)
    if "train.method" not in config:
        raise UsageError("train requires --method or a train.method key")
    out_dir = _resolve_out_dir(args)
    seed = _resolve_seed(args, config)
    config["train.seed"] = seed
    if args.pretrained and config["train.method"] != "mf-umpo":
        raise UsageError("--pretrained only applies to --method mf-umpo")
    manifest = write_manifest(out_dir, "train", environment=args.env,
                              method=config["train.method"], seed=seed,
                              config=config)
    try:
        _run_training(args.env, config, seed, out_dir,
                      pretrained_path=args.pretrained, quiet=args.quiet)
    except BaseException as exc:
        finalize_manifest(manifest, "failed", error=str(exc))
        raise
    finalize_manifest(manifest, "completed")
    return 0


def _rebuild_agent(env, blocks, config):
    """Agent matching a checkpoint's architecture, for rollout only."""
    actor_net, _ = blocks["actor"]
    critic_net, _ = blocks["critic"]
    obs_dim = actor_net.layer_sizes[0]
    action_dim = actor_net.layer_sizes[-1]
    if critic_net.layer_sizes[0] != obs_dim + action_dim:
        raise UsageError(
            f"checkpoint networks disagree: actor maps {obs_dim}->{action_dim}"
            f" but critic reads {critic_net.layer_sizes[0]} inputs")
    if action_dim != env.nu:
        raise UsageError(
            f"checkpoint actor emits {action_dim} controls, "
            f"environment has {env.nu}")
    train_config = TrainConfig.from_config(config)
    agent = DdpgAgent(
        obs_dim, action_dim,
        actor_hidden=tuple(actor_net.layer_sizes[1:-1]),
        critic_hidden=tuple(critic_net.layer_sizes[1:-1]),
        actor_final_activation=actor_net.final_activation,
        action_scale=train_config.resolved_action_scale(env),
    )
    agent.restore(blocks)
    return agent, obs_dim, train_config


def cmd_evaluate(args):
    config = _resolve_config(args)
    out_dir = _resolve_out_dir(args)
    seed = _resolve_seed(args, config)
    manifest = write_manifest(out_dir, "evaluate", environment=args.env,
                              seed=seed, config=config)
    try:
        env = make_environment(args.env, config)
        blocks = load_checkpoint(args.checkpoint)
        agent, obs_dim, train_config = _rebuild_agent(env, blocks, config)

        if obs_dim == env.nx:
            observe = lambda x: x - env.xbar  # noqa: E731
        else:
            basis_path = args.basis or os.path.join(
                os.path.dirname(os.path.abspath(args.checkpoint)),
                "eigenspace.csv")
            if os.path.exists(basis_path):
                basis = read_eigenspace_csv(basis_path)
            else:
                basis = _basis_for(env, seed)
            if basis.nr != obs_dim:
                raise UsageError(
                    f"checkpoint expects {obs_dim} observations but the "
                    f"unstable basis has {basis.nr} columns")
            coder = unstable_coder(env, basis)
            observe = coder.encode

        def policy(x):
            return env.ubar + agent.policy_action(observe(x))

        spec = RewardSpec(
            train_config.lambda_u, train_config.tf,
            default_blowup_threshold(env, train_config.blowup_factor))
        evaluation = evaluate_policy(env, policy, spec,
                                     rng=np.random.default_rng(seed + 5))
        write_evaluation_csv(os.path.join(out_dir, "evaluation.csv"),
                             evaluation.outputs, evaluation.controls)
        record = evaluation.record
        write_eval_log(os.path.join(out_dir, "eval_summary.csv"), [{
            "step": 0,
            "episode_length": record.episode_length,
            "terminated_early": record.terminated_early,
            "accumulated_reward": record.accumulated_reward,
            "normalized_reward": record.normalized_reward,
            "final_distance": evaluation.final_distance,
        }])
        if args.field_out:
            write_field_csv(args.field_out, evaluation.states)
        _say(args, f"episode length {record.episode_length}"
                   f"{' (terminated early)' if record.terminated_early else ''}"
                   f", normalized reward {record.normalized_reward:.6f}")
        print(repr(evaluation.final_distance))
    except BaseException as exc:
        finalize_manifest(manifest, "failed", error=str(exc))
        raise
    finalize_manifest(manifest, "completed")
    return 0


def _parse_epsilons(value):
    if isinstance(value, (int, float)):
        return [float(value)]
    parts = [p.strip() for p in str(value).split(",") if p.strip()]
    if not parts:
        raise UsageError("diagnose.epsilons must list positive values")
    return [float(p) for p in parts]


def cmd_diagnose(args):
    config = _resolve_config(args)
    out_dir = _resolve_out_dir(args)
    protocol_seed = args.seed if args.seed is not None \
        else int(config.get("diagnose.seed", diagnostics.DETECTION_PROTOCOL_SEED))
    manifest = write_manifest(out_dir, "diagnose", environment=args.env,
                              seed=protocol_seed, config=config)
    try:
        env = make_environment(args.env, config)
        psi_grid = np.linspace(
            float(config.get("diagnose.psi_min", -10.0)),
            float(config.get("diagnose.psi_max", 10.0)),
            int(config.get("diagnose.psi_points", 400)))
        snapshots = int(config.get("diagnose.snapshots",
                                   diagnostics.CONVERGED_SNAPSHOT_COUNT))
        budget = int(config.get("diagnose.budget",
                                diagnostics.DEFAULT_SNAPSHOT_BUDGET))
        coder_kind = str(config.get("diagnose.coder", "pca"))

        if coder_kind == "pca":
            coder = diagnostics.converged_pca_coder(
                env, snapshots, np.random.default_rng(protocol_seed))
        elif coder_kind == "unstable":
            basis = _basis_for(env, protocol_seed)
            if basis.nr != 1:
                raise UsageError(
                    f"scalar sweep needs a 1-D unstable basis, got {basis.nr}")
            coder = unstable_coder(env, basis)
        else:
            raise UsageError(
                f"diagnose.coder must be 'pca' or 'unstable', got {coder_kind!r}")

        sweep = diagnostics.pca_policy_sweep(env, coder, psi_grid)
        header = ["psi", "lat_eig_mod"]
        header += [f"full_eig{j + 1}_mod" for j in range(env.nx)]
        lines = [",".join(header)]
        for i, psi in enumerate(sweep.psi):
            cells = [repr(float(psi)), repr(float(sweep.latent_moduli[i]))]
            cells += [repr(float(m)) for m in sweep.full_moduli[i]]
            lines.append(",".join(cells))
        with open(os.path.join(out_dir, "sweep.csv"), "w",
                  encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")

        epsilons = _parse_epsilons(
            config.get("diagnose.epsilons", "0.01, 0.1, 1, 10"))
        angles = diagnostics.angle_vs_epsilon(epsilons, snapshots,
                                              seed=protocol_seed)
        counts = diagnostics.detection_counts(epsilons, budget,
                                              seed=protocol_seed)
        lines = ["epsilon,angle_rad,samples_to_detect"]
        for (eps, angle), count in zip(angles, counts):
            lines.append(f"{repr(eps)},{repr(angle)},{count}")
        with open(os.path.join(out_dir, "detection.csv"), "w",
                  encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
        stabilizing = int(sweep.stabilizing_mask().sum())
        _say(args, f"{coder_kind} coder: {stabilizing}/{sweep.psi.size} "
                   f"stabilizing gains; detection counts {counts}")
    except BaseException as exc:
        finalize_manifest(manifest, "failed", error=str(exc))
        raise
    finalize_manifest(manifest, "completed")
    return 0


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def parse_grid_file(path):
    """Comma-separated value lists per config key; cartesian product."""
    if not os.path.exists(path):
        raise UsageError(f"grid file not found: {path}")
    axes = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(
                    f"{path}:{lineno}: expected 'key = v1, v2, ...'")
            key, _, values = line.partition("=")
            key = key.strip()
            choices = [coerce_value(v) for v in values.split(",") if v.strip()]
            if not key or not choices:
                raise UsageError(f"{path}:{lineno}: empty key or value list")
            axes[key] = choices
    if not axes:
        raise UsageError(f"grid file {path} defines no parameter axes")
    keys = sorted(axes)
    combos = [dict(zip(keys, values))
              for values in itertools.product(*(axes[k] for k in keys))]
    return combos


def _sweep_worker(env_name, base_config, combo, seed, run_dir):
    config = dict(base_config)
    config.update(combo)
    config["train.seed"] = int(config.get("train.seed", seed))
    manifest = write_manifest(
        run_dir, "train", environment=env_name,
        method=config.get("train.method"), seed=config["train.seed"],
        config=config)
    try:
        _run_training(env_name, config, config["train.seed"], run_dir,
                      quiet=True)
    except Exception as exc:  # recorded per run; the sweep continues
        finalize_manifest(manifest, "failed", error=str(exc))
        return False
    finalize_manifest(manifest, "completed")
    return True


def aggregate_sweep(out_dir):
    """Post-pass over run directories: logmean(Rn) per method.

    The normalized reward of each completed run's final evaluation episode
    is aggregated with the signed log-mean.  Returns rows sorted by method.
    """
    groups = {}
    for entry in sorted(os.listdir(out_dir)):
        run_dir = os.path.join(out_dir, entry)
        if not entry.startswith("run-") or not os.path.isdir(run_dir):
            continue
        manifest = read_manifest(run_dir)
        method = manifest.get("method") or "unknown"
        bucket = groups.setdefault(method, {"runs": 0, "failed": 0,
                                            "rewards": []})
        bucket["runs"] += 1
        if manifest.get("status") != "completed":
            bucket["failed"] += 1
            continue
        eval_rows = read_eval_log(os.path.join(run_dir, "eval_history.csv"))
        if eval_rows:
            bucket["rewards"].append(eval_rows[-1]["normalized_reward"])
    rows = []
    for method in sorted(groups):
        bucket = groups[method]
        aggregated = logmean(bucket["rewards"]) if bucket["rewards"] \
            else float("nan")
        rows.append({
            "method": method,
            "num_runs": bucket["runs"],
            "num_failed": bucket["failed"],
            "logmean_normalized_reward": aggregated,
        })
    return rows


def write_sweep_summary(path, rows):
    lines = ["method,num_runs,num_failed,logmean_normalized_reward"]
    for row in rows:
        lines.append(",".join([
            str(row["method"]), str(row["num_runs"]), str(row["num_failed"]),
            repr(float(row["logmean_normalized_reward"])),
        ]))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def cmd_sweep(args):
    config = _resolve_config(args)
    out_dir = _resolve_out_dir(args)
    seed = _resolve_seed(args, config)
    combos = parse_grid_file(args.grid)
    manifest = write_manifest(out_dir, "sweep", seed=seed, config=config)
    try:
        jobs = []
        skipped = 0
        for index, combo in enumerate(combos):
            run_dir = os.path.join(out_dir, f"run-{index:04d}")
            if args.resume and os.path.exists(manifest_path(run_dir)):
                if read_manifest(run_dir).get("status") == "completed":
                    skipped += 1
                    continue
            jobs.append((combo, run_dir))
        workers = max(1, args.workers)
        outcomes = []
        if jobs:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_sweep_worker, args.env, config, combo, seed,
                                run_dir)
                    for combo, run_dir in jobs
                ]
                outcomes = [future.result() for future in futures]
        rows = aggregate_sweep(out_dir)
        write_sweep_summary(os.path.join(out_dir, "sweep_summary.csv"), rows)
        failed = sum(1 for ok in outcomes if not ok)
        _say(args, f"{len(combos)} grid points: {len(jobs) - failed} trained, "
                   f"{failed} failed, {skipped} resumed")
        for row in rows:
            _say(args, f"  {row['method']}: logmean(Rn) = "
                       f"{row['logmean_normalized_reward']:.6f} over "
                       f"{row['num_runs'] - row['num_failed']} runs")
    except BaseException as exc:
        finalize_manifest(manifest, "failed", error=str(exc))
        raise
    finalize_manifest(manifest, "completed")
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Stabilize unstable dynamics by learning feedback "
                    "policies on the manifold of unstable directions.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="flat 'section.key = value' config file")
    common.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="config override (repeatable; wins over file)")
    common.add_argument("--seed", type=int, default=None,
                        help="master seed (subsystem streams use fixed offsets)")
    common.add_argument("--out-dir", default=None,
                        help="output directory (default: $STABL_OUT_DIR or cwd)")
    common.add_argument("--quiet", action="store_true",
                        help="suppress informational output")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigenspace", parents=[common],
                       help="estimate the left unstable eigenspace")
    p.add_argument("--env", required=True)
    p.set_defaults(handler=cmd_eigenspace)

    p = sub.add_parser("rom", parents=[common],
                       help="assemble the latent model on the unstable basis")
    p.add_argument("--env", required=True)
    p.add_argument("--route", choices=("adjoint", "sysid"), default="adjoint")
    p.add_argument("--delta", type=float, default=None,
                   help="probe size for the sysid route")
    p.set_defaults(handler=cmd_rom)

    p = sub.add_parser("train", parents=[common], help="train a policy")
    p.add_argument("--env", required=True)
    p.add_argument("--method",
                   choices=("direct", "umpo", "umpo-ma", "mf-umpo"),
                   default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--pretrained", default=None, metavar="CHECKPOINT",
                   help="mf-umpo: start fine-tuning from this checkpoint")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", parents=[common],
                       help="run the disturbance protocol on a checkpoint")
    p.add_argument("--env", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--basis", default=None,
                   help="eigenspace CSV (default: next to the checkpoint)")
    p.add_argument("--field-out", default=None,
                   help="also write the full state trajectory CSV here")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("diagnose", parents=[common],
                       help="1-D coder gain sweeps and detection counts")
    p.add_argument("--env", default="toy2d")
    p.set_defaults(handler=cmd_diagnose)

    p = sub.add_parser("sweep", parents=[common],
                       help="cartesian config grid with concurrent workers")
    p.add_argument("--env", required=True)
    p.add_argument("--grid", required=True,
                   help="file of 'key = v1, v2, ...' axes")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--resume", action="store_true",
                   help="skip grid points whose manifest is completed")
    p.set_defaults(handler=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except StablError as exc:
        print(f"{PROG}: runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
