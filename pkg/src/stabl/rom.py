"""Latent linear models on a coder's subspace.

Projecting the step map onto a coder basis W around the steady state gives
the latent model

    z+ = jx z + ju (u - ubar),      jx = W^T J_x W,  ju = W^T J_u,

which is exact for the linearized dynamics when span(W) is a left invariant
subspace.  Two assembly routes are provided: a derivative-based one using
jvp queries at the steady state, and a system-identification one probing the
nonlinear step map with finite perturbations.  The routes agree to first
order and cross-check each other.
"""

from dataclasses import dataclass

import numpy as np

from .environments import LinearEnvironment
from .manifold import LinearCoder


@dataclass
class LatentModel:
    """Latent step matrices plus the coder that defines the subspace."""

    jx: np.ndarray
    ju: np.ndarray
    coder: LinearCoder

    @property
    def nr(self):
        return self.jx.shape[0]

    @property
    def nu(self):
        return self.ju.shape[1]


def assemble_rom_adjoint(env, coder):
    """Latent model from exact derivative queries at the steady state.

    Costs nr state-Jacobian products and nu control-Jacobian products.
    """
    w = coder.basis
    nr = w.shape[1]
    nu = env.nu
    xbar, ubar = env.xbar, env.ubar
    jx = np.empty((nr, nr))
    for j in range(nr):
        jx[:, j] = w.T @ env.jvp_state(xbar, ubar, w[:, j])
    ju = np.empty((nr, nu))
    eye = np.eye(nu)
    for j in range(nu):
        ju[:, j] = w.T @ env.jvp_control(xbar, ubar, eye[:, j])
    return LatentModel(jx=jx, ju=ju, coder=coder)


def assemble_rom_sysid(env, coder, delta=None):
    """Latent model from forward probes of the step map.

    Each column is a finite-difference quotient of encoded steps around the
    steady state; costs nr + nu forward evaluations.  ``delta`` must be a
    positive probe size (default sqrt(eps) * (1 + ||xbar||_inf)).
    """
    if delta is None:
        delta = np.sqrt(np.finfo(float).eps) * (
            1.0 + float(np.max(np.abs(env.xbar), initial=0.0))
        )
    if delta <= 0.0:
        raise ValueError(f"probe size must be positive, got {delta}")
    w = coder.basis
    nr = w.shape[1]
    nu = env.nu
    xbar, ubar = env.xbar, env.ubar
    jx = np.empty((nr, nr))
    for j in range(nr):
        jx[:, j] = coder.encode(env.step(xbar + delta * w[:, j], ubar)) / delta
    ju = np.empty((nr, nu))
    eye = np.eye(nu)
    for j in range(nu):
        ju[:, j] = coder.encode(env.step(xbar, ubar + delta * eye[:, j])) / delta
    return LatentModel(jx=jx, ju=ju, coder=coder)


def rom_step(model, z, u):
    """One latent step; cost nr*(nr + nu) multiplies, independent of nx."""
    return model.jx @ np.asarray(z, dtype=float) + model.ju @ np.atleast_1d(
        np.asarray(u, dtype=float)
    )


def rom_as_environment(model, name=None, tau=0.01):
    """Wrap a latent model as a stand-alone environment.

    The latent steady state is (0, 0) (states and controls are deviations),
    outputs are the latent coordinates themselves, and the derivative maps
    are exact because the model is linear.
    """
    if name is None:
        name = "rom"
    nr_expected = int(np.sum(np.abs(np.linalg.eigvals(model.jx)) >= 1.0 - 1e-9))
    return LinearEnvironment(
        model.jx, model.ju, name=name, tau=tau,
        output_matrix=np.eye(model.nr), nr_expected=nr_expected,
    )


def route_deviation(env, coder, delta=1e-6):
    """Max entrywise gap between the two assembly routes (diagnostic)."""
    adjoint = assemble_rom_adjoint(env, coder)
    sysid = assemble_rom_sysid(env, coder, delta=delta)
    gap_jx = np.max(np.abs(adjoint.jx - sysid.jx), initial=0.0)
    gap_ju = np.max(np.abs(adjoint.ju - sysid.ju), initial=0.0)
    return max(float(gap_jx), float(gap_ju))
