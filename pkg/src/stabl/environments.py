"""Discrete-time benchmark environments.

Every environment is a map x+ = f(x, u) together with exact directional
derivatives (Jacobian-vector and vector-Jacobian products) at arbitrary
(x, u).  The PDE/ODE benchmarks discretize their continuous dynamics with an
IMEX Euler step: linear state terms are treated implicitly through a
precomputed LU factorization of (I - tau*A_lin), nonlinear terms and control
inputs explicitly,

    (I - tau*A_lin) x+ = x + tau * g(x, u).

The derivative maps are hand-derived from that update and cross-checked
against central finite differences in the test suite.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NewtonNoConvergenceError, StateBlowupError, UsageError
from .linalg import solve_linear

# Arguments of exponentials are clamped here to keep the forward map finite.
EXP_CLAMP = 50.0
# Beyond this the state is considered lost and step() refuses to continue.
EXP_BLOWUP = 500.0


@dataclass
class EnvironmentSpec:
    """Static description of an environment.

    ``output_matrix`` maps states to the low-dimensional outputs used for
    reporting; ``nr_expected`` is the anticipated number of unstable modes of
    the linearization at (xbar, ubar).
    """

    name: str
    nx: int
    nu: int
    tau: float
    xbar: np.ndarray
    ubar: np.ndarray
    output_matrix: np.ndarray
    nr_expected: int = 0


class Environment:
    """Dynamics plus derivative maps around arbitrary points.

    Subclasses must implement ``step``; the derivative maps fall back to
    central finite differences of ``step`` so user-defined environments only
    need the forward model.  The built-in benchmarks override all four with
    analytic expressions.
    """

    def __init__(self, spec):
        self.spec = spec

    # Convenience pass-throughs; the spec object remains the source of truth.
    @property
    def name(self):
        return self.spec.name

    @property
    def nx(self):
        return self.spec.nx

    @property
    def nu(self):
        return self.spec.nu

    @property
    def tau(self):
        return self.spec.tau

    @property
    def xbar(self):
        return self.spec.xbar

    @property
    def ubar(self):
        return self.spec.ubar

    @property
    def output_matrix(self):
        return self.spec.output_matrix

    @property
    def nr_expected(self):
        return self.spec.nr_expected

    def step(self, x, u):
        raise NotImplementedError

    def output(self, x):
        return self.output_matrix @ x

    def jvp_state(self, x, u, v):
        h = fd_step_size(x)
        v = np.asarray(v, dtype=float)
        return (self.step(x + h * v, u) - self.step(x - h * v, u)) / (2.0 * h)

    def vjp_state(self, x, u, z):
        return finite_difference_vjp_oracle(self, x, u, z)

    def jvp_control(self, x, u, w):
        h = fd_step_size(u)
        w = np.asarray(w, dtype=float)
        return (self.step(x, u + h * w) - self.step(x, u - h * w)) / (2.0 * h)

    def vjp_control(self, x, u, z):
        z = np.asarray(z, dtype=float)
        h = fd_step_size(u)
        out = np.zeros(self.nu)
        for i in range(self.nu):
            e = np.zeros(self.nu)
            e[i] = h
            out[i] = z @ (self.step(x, u + e) - self.step(x, u - e)) / (2.0 * h)
        return out


def fd_step_size(x):
    """Central-difference step scaled to the magnitude of the base point."""
    x = np.asarray(x, dtype=float)
    scale = np.max(np.abs(x)) if x.size else 0.0
    return np.sqrt(np.finfo(float).eps) * (1.0 + scale)


def finite_difference_vjp_oracle(env, x, u, z, h=None):
    """Adjoint product J_x^T z from central differences of <z, f(x, u)>.

    Costs 2 * nx calls to ``step``; used as the independent check for the
    analytic adjoints and as the fallback for user-defined environments.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if h is None:
        h = fd_step_size(x)
    out = np.zeros(env.nx)
    for i in range(env.nx):
        e = np.zeros(env.nx)
        e[i] = h
        out[i] = z @ (env.step(x + e, u) - env.step(x - e, u)) / (2.0 * h)
    return out


def _check_state(x, name="state"):
    x = np.asarray(x, dtype=float)
    bad = ~np.isfinite(x)
    if bad.any():
        index = int(np.argmax(bad))
        raise StateBlowupError(f"non-finite {name} at entry {index}", index=index)
    return x


def _clamped_exp(arg, what):
    """exp with argument clamped to +-EXP_CLAMP; blow up past +-EXP_BLOWUP.

    Returns (value, active) where ``active`` marks entries whose derivative
    through the argument is still live (not clamped).
    """
    arg = np.asarray(arg, dtype=float)
    bad = ~np.isfinite(arg) | (np.abs(arg) > EXP_BLOWUP)
    if bad.any():
        index = int(np.argmax(bad))
        raise StateBlowupError(
            f"{what}: exponential argument out of range at entry {index}",
            index=index,
        )
    clipped = np.clip(arg, -EXP_CLAMP, EXP_CLAMP)
    active = np.abs(arg) < EXP_CLAMP
    return np.exp(clipped), active


class LinearEnvironment(Environment):
    """Exact linear map x+ = A x + B u with steady state (0, 0)."""

    def __init__(self, a, b, name="linear", tau=0.01, output_matrix=None,
                 nr_expected=None):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        nx, nu = a.shape[0], b.shape[1]
        if output_matrix is None:
            output_matrix = np.eye(nx)
        if nr_expected is None:
            nr_expected = int(np.sum(np.abs(np.linalg.eigvals(a)) >= 1.0 - 1e-9))
        super().__init__(EnvironmentSpec(
            name=name, nx=nx, nu=nu, tau=tau,
            xbar=np.zeros(nx), ubar=np.zeros(nu),
            output_matrix=np.asarray(output_matrix, dtype=float),
            nr_expected=nr_expected,
        ))
        self.a = a
        self.b = b

    def step(self, x, u):
        x = _check_state(x, "input state")
        u = np.atleast_1d(np.asarray(u, dtype=float))
        # Overflow surfaces as the non-finite check inside _check_state; the
        # intermediate warnings are noise.
        with np.errstate(over="ignore", invalid="ignore"):
            return _check_state(self.a @ x + self.b @ u)

    def jvp_state(self, x, u, v):
        return self.a @ np.asarray(v, dtype=float)

    def vjp_state(self, x, u, z):
        return self.a.T @ np.asarray(z, dtype=float)

    def jvp_control(self, x, u, w):
        return self.b @ np.atleast_1d(np.asarray(w, dtype=float))

    def vjp_control(self, x, u, z):
        return self.b.T @ np.asarray(z, dtype=float)


def make_toy2d(epsilon=0.1, tau=0.01):
    """Two-dimensional unstable linear map with one-way coupling.

    The state matrix has eigenvalues {0.9, 1.1}; ``epsilon`` couples the
    stable coordinate into the unstable one and controls how far the left
    unstable eigenvector tilts away from the second axis.
    """
    a = np.array([[0.9, 0.0], [epsilon, 1.1]])
    b = np.array([[1.0], [0.0]])
    return LinearEnvironment(a, b, name="toy2d", tau=tau, nr_expected=1)


class ImexEnvironment(Environment):
    """Shared machinery for the IMEX-Euler benchmarks.

    Subclasses provide the dense linear operator ``a_lin`` plus the explicit
    term g(x, u) and its derivative actions.  The update and its exact
    derivatives are

        x+      = M^-1 (x + tau g(x, u)),        M = I - tau A_lin
        J_x v   = M^-1 (v + tau g_x v)
        J_x^T z = (I + tau g_x^T) M^-T z
        J_u w   = M^-1 (tau g_u w)
        J_u^T z = tau g_u^T M^-T z.
    """

    def __init__(self, spec, a_lin):
        super().__init__(spec)
        self.a_lin = np.asarray(a_lin, dtype=float)
        m = np.eye(self.nx) - self.tau * self.a_lin
        self._lu = scipy.linalg.lu_factor(m)

    # --- hooks -----------------------------------------------------------
    def explicit_term(self, x, u):
        raise NotImplementedError

    def explicit_jvp_state(self, x, u, v):
        raise NotImplementedError

    def explicit_vjp_state(self, x, u, z):
        raise NotImplementedError

    def explicit_jvp_control(self, x, u, w):
        raise NotImplementedError

    def explicit_vjp_control(self, x, u, z):
        raise NotImplementedError

    # --- IMEX update and derivatives --------------------------------------
    def _solve(self, rhs, transpose=False):
        return scipy.linalg.lu_solve(self._lu, rhs, trans=1 if transpose else 0)

    def step(self, x, u):
        x = _check_state(x, "input state")
        u = np.atleast_1d(np.asarray(u, dtype=float))
        # Overflow surfaces as the non-finite checks; the intermediate
        # warnings are noise.  The rhs is checked before the solve because
        # LAPACK wrappers reject non-finite input with their own exception.
        with np.errstate(over="ignore", invalid="ignore"):
            rhs = _check_state(x + self.tau * self.explicit_term(x, u))
            return _check_state(self._solve(rhs))

    def jvp_state(self, x, u, v):
        v = np.asarray(v, dtype=float)
        return self._solve(v + self.tau * self.explicit_jvp_state(x, u, v))

    def vjp_state(self, x, u, z):
        w = self._solve(np.asarray(z, dtype=float), transpose=True)
        return w + self.tau * self.explicit_vjp_state(x, u, w)

    def jvp_control(self, x, u, w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        return self._solve(self.tau * self.explicit_jvp_control(x, u, w))

    def vjp_control(self, x, u, z):
        w = self._solve(np.asarray(z, dtype=float), transpose=True)
        return self.tau * self.explicit_vjp_control(x, u, w)


def second_difference_matrix(m, h):
    """Standard central Laplacian stencil on m interior nodes, spacing h."""
    lap = np.zeros((m, m))
    np.fill_diagonal(lap, -2.0)
    idx = np.arange(m - 1)
    lap[idx, idx + 1] = 1.0
    lap[idx + 1, idx] = 1.0
    return lap / h**2


class AllenCahn(ImexEnvironment):
    """Reaction-diffusion rod with distributed control.

    Continuous dynamics on (0, 1) with homogeneous Dirichlet walls:

        dv/dt = kappa * v_zz + alpha1 * v^3 + alpha2 * v - u(t),

    sampled with the IMEX step (diffusion implicit, reaction and control
    explicit).  The destabilizing cubic makes the Newton equilibrium for
    ubar = 1 carry exactly one unstable mode at the default parameters.
    Outputs accumulate the first third of the rod and the remainder.
    """

    def __init__(self, grid_size=100, kappa=0.2, alpha1=2.5, alpha2=0.0,
                 tau=0.01, ubar=1.0):
        n = int(grid_size)
        if n < 3:
            raise UsageError(f"allen_cahn needs grid_size >= 3, got {n}")
        self.kappa = float(kappa)
        self.alpha1 = float(alpha1)
        self.alpha2 = float(alpha2)
        h = 1.0 / (n + 1)
        a_lin = self.kappa * second_difference_matrix(n, h)
        first = n // 3
        c = np.zeros((2, n))
        c[0, :first] = 1.0
        c[1, first:] = 1.0
        spec = EnvironmentSpec(
            name="allen_cahn", nx=n, nu=1, tau=float(tau),
            xbar=np.zeros(n), ubar=np.array([float(ubar)]),
            output_matrix=c, nr_expected=1,
        )
        super().__init__(spec, a_lin)
        spec.xbar = newton_steady_state(self, spec.ubar, np.zeros(n))

    def explicit_term(self, x, u):
        return self.alpha1 * x**3 + self.alpha2 * x - u[0]

    def explicit_jvp_state(self, x, u, v):
        return (3.0 * self.alpha1 * x**2 + self.alpha2) * v

    def explicit_vjp_state(self, x, u, z):
        # The reaction Jacobian is diagonal, hence self-adjoint.
        return (3.0 * self.alpha1 * x**2 + self.alpha2) * z

    def explicit_jvp_control(self, x, u, w):
        return np.full(self.nx, -w[0])

    def explicit_vjp_control(self, x, u, z):
        return np.array([-np.sum(z)])


class TubularReactor(ImexEnvironment):
    """Non-adiabatic tubular reactor with Arrhenius kinetics.

    Two fields on (0, 1), species concentration c and temperature T, stacked
    as x = [c; T] on m = nx/2 interior nodes each:

        dc/dt = (1/Pe) c_zz - c_z - D c exp(gamma - gamma/T)
        dT/dt = (1/Pe) T_zz - T_z - beta (T - T_ref u2)
                + B D c exp(gamma - gamma/T)

    with Robin inflow conditions  phi_z(0) = Pe (phi(0) - u)  feeding the two
    controls (u1 the feed concentration, u2 the coolant temperature) and
    zero-gradient outflow at z = 1.  Diffusion/advection/linear cooling are
    implicit (advection first-order upwind, diffusion second-order central);
    the Arrhenius source and the boundary/control terms are explicit.
    """

    def __init__(self, grid_size=198, peclet=5.0, damkohler=0.167, gamma=25.0,
                 beta=2.5, t_ref=1.0, heat_release=0.5, tau=0.01,
                 ubar=(1.0, 1.0)):
        n = int(grid_size)
        if n < 6 or n % 2:
            raise UsageError(f"tubular_reactor needs even grid_size >= 6, got {n}")
        m = n // 2
        self.m = m
        self.peclet = float(peclet)
        self.damkohler = float(damkohler)
        self.gamma = float(gamma)
        self.beta = float(beta)
        self.t_ref = float(t_ref)
        self.heat_release = float(heat_release)
        h = 1.0 / (m + 1)

        # Single-field advection-diffusion with the wall values eliminated:
        # ghost(0) = rho * (phi_1 + Pe h u), rho = 1/(1 + Pe h), from the
        # Robin condition; ghost(m+1) = phi_m from the outflow condition.
        rho = 1.0 / (1.0 + self.peclet * h)
        lap = second_difference_matrix(m, h)
        lap[0, 0] += rho / h**2          # ghost share of the inflow node
        lap[-1, -1] += 1.0 / h**2        # reflected outflow node
        adv = np.zeros((m, m))
        np.fill_diagonal(adv, -1.0)
        idx = np.arange(m - 1)
        adv[idx + 1, idx] = 1.0
        adv /= h
        adv[0, 0] += rho / h             # ghost share of the upwind stencil
        field_op = lap / self.peclet + adv
        # Boundary elimination routes each control onto the inflow node.
        b_inflow = rho * self.peclet * h * (1.0 / (self.peclet * h**2) + 1.0 / h)

        a_lin = np.zeros((n, n))
        a_lin[:m, :m] = field_op
        a_lin[m:, m:] = field_op
        a_lin[m:, m:] -= self.beta * np.eye(m)

        b_expl = np.zeros((n, 2))
        b_expl[0, 0] = b_inflow
        b_expl[m, 1] = b_inflow
        b_expl[m:, 1] += self.beta * self.t_ref
        self.b_expl = b_expl

        c_out = np.zeros((2, n))
        c_out[0, 0] = 1.0
        c_out[1, m] = 1.0
        spec = EnvironmentSpec(
            name="tubular_reactor", nx=n, nu=2, tau=float(tau),
            xbar=np.zeros(n), ubar=np.asarray(ubar, dtype=float),
            output_matrix=c_out, nr_expected=2,
        )
        super().__init__(spec, a_lin)
        guess = np.concatenate([np.full(m, 1.0), np.full(m, 1.0)])
        spec.xbar = newton_steady_state(self, spec.ubar, guess)

    def _arrhenius(self, temp):
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = self.gamma - self.gamma / temp
        return _clamped_exp(arg, "tubular_reactor")

    def explicit_term(self, x, u):
        conc, temp = x[:self.m], x[self.m:]
        rate_exp, _ = self._arrhenius(temp)
        rate = self.damkohler * conc * rate_exp
        out = np.concatenate([-rate, self.heat_release * rate])
        return out + self.b_expl @ u

    def _rate_partials(self, x):
        conc, temp = x[:self.m], x[self.m:]
        rate_exp, active = self._arrhenius(temp)
        d_conc = self.damkohler * rate_exp
        d_temp = self.damkohler * conc * rate_exp * active * (
            self.gamma / temp**2
        )
        return d_conc, d_temp

    def explicit_jvp_state(self, x, u, v):
        d_conc, d_temp = self._rate_partials(x)
        d_rate = d_conc * v[:self.m] + d_temp * v[self.m:]
        return np.concatenate([-d_rate, self.heat_release * d_rate])

    def explicit_vjp_state(self, x, u, z):
        d_conc, d_temp = self._rate_partials(x)
        s = -z[:self.m] + self.heat_release * z[self.m:]
        return np.concatenate([d_conc * s, d_temp * s])

    def explicit_jvp_control(self, x, u, w):
        return self.b_expl @ w

    def explicit_vjp_control(self, x, u, z):
        return self.b_expl.T @ z


class TodaLattice(ImexEnvironment):
    """Damped Toda-type particle chain with exponential springs.

    Particles carry positions q and velocities v, x = [q; v]:

        m_j dv_j/dt = -gamma_j v_j - F_j(q) + (B u)_j,   dq_j/dt = v_j,

    where F_j = exp(k_j (q_j - q_{j+1})) - exp(k_{j-1} (q_{j-1} - q_j)), the
    first particle sees the constant 1 instead of a left spring and the last
    is anchored to a wall through exp(k_l q_l).  Negative spring exponents at
    the two cluster boundaries make the origin a saddle.  The three controls
    force the particles of one cluster each; outputs are the mean cluster
    velocities.  Velocity coupling and damping are implicit, spring forces
    and controls explicit.
    """

    def __init__(self, particles=50, tau=0.1):
        ell = int(particles)
        if ell < 10 or ell % 10:
            raise UsageError(
                f"toda_lattice needs particles divisible by 10, got {ell}"
            )
        self.ell = ell
        c1, c2 = 3 * ell // 10, 8 * ell // 10
        masses = np.tile([2.0, 1.0, 3.0, 5.0, 4.0], ell // 5)
        damping = np.empty(ell)
        damping[:c1] = 0.1
        damping[c1:c2 - 1] = 0.15
        damping[c2 - 1] = 0.1
        damping[c2:] = 0.5
        stiffness = np.empty(ell)
        stiffness[:c1 - 1] = 2.0
        stiffness[c1 - 1] = -1.0
        stiffness[c1:c2 - 1] = 5.0
        stiffness[c2 - 1] = -2.0
        stiffness[c2:] = 1.0
        self.masses = masses
        self.stiffness = stiffness

        n = 2 * ell
        a_lin = np.zeros((n, n))
        a_lin[:ell, ell:] = np.eye(ell)
        a_lin[ell:, ell:] = -np.diag(damping / masses)

        clusters = np.zeros((ell, 3))
        clusters[:c1, 0] = 1.0
        clusters[c1:c2, 1] = 1.0
        clusters[c2:, 2] = 1.0
        self.b_force = clusters
        sizes = clusters.sum(axis=0)

        c_out = np.zeros((3, n))
        c_out[:, ell:] = (clusters / sizes).T
        spec = EnvironmentSpec(
            name="toda_lattice", nx=n, nu=3, tau=float(tau),
            xbar=np.zeros(n), ubar=np.zeros(3),
            output_matrix=c_out, nr_expected=2,
        )
        super().__init__(spec, a_lin)

    def _springs(self, q):
        k = self.stiffness
        inter, inter_active = _clamped_exp(
            k[:-1] * (q[:-1] - q[1:]), "toda_lattice"
        )
        wall, wall_active = _clamped_exp(k[-1] * q[-1], "toda_lattice")
        return inter, inter_active, float(wall), bool(wall_active)

    def _forces(self, q):
        inter, _, wall, _ = self._springs(q)
        forces = np.empty(self.ell)
        forces[0] = inter[0] - 1.0
        forces[1:-1] = inter[1:] - inter[:-1]
        forces[-1] = wall - inter[-1]
        return forces

    def explicit_term(self, x, u):
        ell = self.ell
        accel = (-self._forces(x[:ell]) + self.b_force @ u) / self.masses
        return np.concatenate([np.zeros(ell), accel])

    def _force_jvp(self, q, dq):
        k = self.stiffness
        inter, inter_active, wall, wall_active = self._springs(q)
        d_inter = k[:-1] * inter * inter_active * (dq[:-1] - dq[1:])
        d_wall = k[-1] * wall * wall_active * dq[-1]
        out = np.empty(self.ell)
        out[0] = d_inter[0]
        out[1:-1] = d_inter[1:] - d_inter[:-1]
        out[-1] = d_wall - d_inter[-1]
        return out

    def _force_vjp(self, q, y):
        # Adjoint of q -> F(q): y pairs with dF, accumulated back onto dq.
        k = self.stiffness
        inter, inter_active, wall, wall_active = self._springs(q)
        t = (y[:-1] - y[1:]) * k[:-1] * inter * inter_active
        out = np.zeros(self.ell)
        out[:-1] += t
        out[1:] -= t
        out[-1] += y[-1] * k[-1] * wall * wall_active
        return out

    def explicit_jvp_state(self, x, u, v):
        ell = self.ell
        accel = -self._force_jvp(x[:ell], v[:ell]) / self.masses
        return np.concatenate([np.zeros(ell), accel])

    def explicit_vjp_state(self, x, u, z):
        ell = self.ell
        grad_q = self._force_vjp(x[:ell], -z[ell:] / self.masses)
        return np.concatenate([grad_q, np.zeros(ell)])

    def explicit_jvp_control(self, x, u, w):
        ell = self.ell
        return np.concatenate([np.zeros(ell), (self.b_force @ w) / self.masses])

    def explicit_vjp_control(self, x, u, z):
        ell = self.ell
        return self.b_force.T @ (z[ell:] / self.masses)


def make_allen_cahn(grid_size=100, **kwargs):
    return AllenCahn(grid_size=grid_size, **kwargs)


def make_tubular_reactor(grid_size=198, **kwargs):
    return TubularReactor(grid_size=grid_size, **kwargs)


def make_toda_lattice(particles=50, **kwargs):
    return TodaLattice(particles=particles, **kwargs)


_FACTORIES = {
    "toy2d": make_toy2d,
    "allen_cahn": make_allen_cahn,
    "tubular_reactor": make_tubular_reactor,
    "toda_lattice": make_toda_lattice,
}


def make_environment(name, config=None):
    """Build a benchmark environment, honoring ``env.<name>.*`` config keys."""
    if name not in _FACTORIES:
        raise UsageError(
            f"unknown environment {name!r}; available: {sorted(_FACTORIES)}"
        )
    kwargs = {}
    if config:
        prefix = f"env.{name}."
        for key, value in config.items():
            if key.startswith(prefix):
                kwargs[key[len(prefix):]] = value
    if name == "toy2d" and "grid_size" in kwargs:
        kwargs.pop("grid_size")
    return _FACTORIES[name](**kwargs)


def newton_steady_state(env, ubar, x_guess, max_iterations=50):
    """Newton iteration for f(x, ubar) = x.

    The Jacobian is assembled column-wise from ``jvp_state``.  Converges when
    ||f(x, ubar) - x||_inf <= 1e-12 * (1 + ||x||_inf); raises
    ``NewtonNoConvergenceError`` after ``max_iterations``.
    """
    x = np.array(x_guess, dtype=float)
    ubar = np.atleast_1d(np.asarray(ubar, dtype=float))
    n = env.nx
    for _ in range(max_iterations):
        residual = env.step(x, ubar) - x
        if np.max(np.abs(residual)) <= 1e-12 * (1.0 + np.max(np.abs(x))):
            return x
        jac = np.empty((n, n))
        eye = np.eye(n)
        for j in range(n):
            jac[:, j] = env.jvp_state(x, ubar, eye[:, j])
        x = x + solve_linear(jac - np.eye(n), -residual)
    raise NewtonNoConvergenceError(
        f"no steady state after {max_iterations} Newton iterations"
    )


def equilibrium_residual(env):
    """||f(xbar, ubar) - xbar||_inf, normalized check value for tests."""
    r = env.step(env.xbar, env.ubar) - env.xbar
    return float(np.max(np.abs(r)))


class QueryCountingEnvironment(Environment):
    """Proxy that counts forward/derivative queries of a wrapped environment."""

    def __init__(self, env):
        super().__init__(env.spec)
        self.env = env
        self.steps = 0
        self.derivative_queries = 0

    def step(self, x, u):
        self.steps += 1
        return self.env.step(x, u)

    def jvp_state(self, x, u, v):
        self.derivative_queries += 1
        return self.env.jvp_state(x, u, v)

    def vjp_state(self, x, u, z):
        self.derivative_queries += 1
        return self.env.vjp_state(x, u, z)

    def jvp_control(self, x, u, w):
        self.derivative_queries += 1
        return self.env.jvp_control(x, u, w)

    def vjp_control(self, x, u, z):
        self.derivative_queries += 1
        return self.env.vjp_control(x, u, z)
