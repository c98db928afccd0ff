"""Figure builders, one per figure kind.

Each builder takes already-parsed data (from :mod:`plotkit.io`) and returns
a matplotlib Figure.  Builders never touch the filesystem; saving is the
runner's job.
"""

import numpy as np

from . import style

style.configure()

import matplotlib.pyplot as plt  # noqa: E402  (after backend selection)

__all__ = [
    "rewards_figure",
    "sweep_figure",
    "field_figure",
    "outputs_figure",
    "angles_figure",
]

_LOG_FLOOR = 1e-300


def rewards_figure(runs, title=None):
    """Reward magnitude against wall time for one or more training runs.

    ``runs`` is a list of ``(label, columns)`` pairs where ``columns`` is a
    train-log column dict.  Empty runs still get a legend entry so that a
    header-only log renders an (empty) set of axes without error.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, columns in runs:
        magnitude = np.maximum(np.abs(columns["normalized_reward"]),
                               _LOG_FLOOR)
        ax.plot(columns["wall_time_s"], magnitude, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("wall time (s)")
    ax.set_ylabel("|normalized reward|")
    ax.set_title(title or "training reward")
    if runs:
        ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return fig


def sweep_figure(data, title=None):
    """Latent and full closed-loop eigenvalue moduli across a gain sweep."""
    psi, latent, full = data
    fig, (ax_lat, ax_full) = plt.subplots(
        2, 1, figsize=(6.4, 6.0), sharex=True)
    ax_lat.plot(psi, latent, color="tab:blue")
    ax_lat.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax_lat.set_ylabel("latent eigenvalue modulus")
    ax_lat.set_title(title or "feedback gain sweep")
    for j in range(full.shape[1]):
        ax_full.plot(psi, full[:, j], linewidth=0.9)
    ax_full.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax_full.set_xlabel("gain")
    ax_full.set_ylabel("closed-loop eigenvalue moduli")
    fig.tight_layout()
    return fig


def field_figure(data, title=None):
    """Space-time heatmap of a state trajectory."""
    time_index, states = data
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    extent = None
    if time_index.size:
        extent = (float(time_index[0]), float(time_index[-1]),
                  0.0, float(states.shape[1]))
    image = ax.imshow(states.T, aspect="auto", origin="lower",
                      extent=extent, cmap="viridis",
                      interpolation="nearest")
    fig.colorbar(image, ax=ax, label="state value")
    ax.set_xlabel("time index")
    ax.set_ylabel("state index")
    ax.set_title(title or "state field")
    fig.tight_layout()
    return fig


def outputs_figure(data, title=None):
    """Observed outputs and applied controls over a rollout."""
    time_index, outputs, controls = data
    fig, (ax_out, ax_ctrl) = plt.subplots(
        2, 1, figsize=(6.4, 6.0), sharex=True)
    for j in range(outputs.shape[1]):
        ax_out.plot(time_index, outputs[:, j], label=f"output {j}")
    ax_out.set_ylabel("output")
    ax_out.set_title(title or "closed-loop rollout")
    ax_out.legend(loc="best", fontsize="small")
    for j in range(controls.shape[1]):
        ax_ctrl.step(time_index, controls[:, j], where="post",
                     label=f"control {j}")
    ax_ctrl.set_xlabel("time index")
    ax_ctrl.set_ylabel("control")
    ax_ctrl.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return fig


def angles_figure(columns, title=None):
    """Subspace angle and snapshots-to-detect against coupling strength."""
    epsilon = columns["epsilon"]
    fig, (ax_angle, ax_count) = plt.subplots(
        2, 1, figsize=(6.4, 6.0), sharex=True)
    ax_angle.plot(epsilon, columns["angle_rad"], marker="o",
                  color="tab:blue")
    ax_angle.set_xscale("log")
    ax_angle.set_ylabel("subspace angle (rad)")
    ax_angle.set_title(title or "detection difficulty")
    ax_count.plot(epsilon, columns["samples_to_detect"], marker="o",
                  color="tab:orange")
    ax_count.set_xscale("log")
    ax_count.set_xlabel("coupling strength")
    ax_count.set_ylabel("snapshots to detect")
    fig.tight_layout()
    return fig
