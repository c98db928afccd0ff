"""Unstable eigenspace extraction and linear encode/decode pairs."""

import numpy as np
import pytest

from stabl.environments import (
    LinearEnvironment,
    make_allen_cahn,
    make_toda_lattice,
    make_toy2d,
    make_tubular_reactor,
)
from stabl.errors import RankDeficientError, SubspaceExhaustedError
from stabl.linalg import dense_eigendecompose, subspace_angles
from stabl.manifold import (
    arnoldi_unstable_basis,
    invariant_subspace_residual,
    pca_basis,
    unstable_coder,
)


def dense_jacobian(env):
    eye = np.eye(env.nx)
    cols = [env.jvp_state(env.xbar, env.ubar, eye[:, j]) for j in range(env.nx)]
    return np.column_stack(cols)


def test_toy2d_unstable_basis_exact(toy2d, toy2d_basis):
    basis = toy2d_basis
    assert basis.vectors.shape == (2, 1)
    assert np.allclose(basis.eigenvalues, [1.1], atol=1e-12)
    assert np.allclose(
        basis.vectors[:, 0], np.array([1.0, 2.0]) / np.sqrt(5), atol=1e-12
    )
    assert basis.residuals.max() <= 1e-10
    assert invariant_subspace_residual(toy2d, basis) <= 1e-12


def test_basis_sign_convention_is_seed_independent(toy2d):
    for seed in (0, 1, 2, 99):
        basis = arnoldi_unstable_basis(toy2d, rng=np.random.default_rng(seed))
        assert np.allclose(
            basis.vectors[:, 0], np.array([1.0, 2.0]) / np.sqrt(5), atol=1e-12
        )


@pytest.mark.parametrize(
    "factory",
    [make_toy2d, lambda: make_allen_cahn(32), lambda: make_tubular_reactor(32),
     lambda: make_toda_lattice(10)],
    ids=["toy2d", "allen_cahn32", "tubular_reactor32", "toda_lattice10"],
)
def test_basis_matches_dense_left_eigenspace(factory):
    env = factory()
    basis = arnoldi_unstable_basis(env, rng=np.random.default_rng(4))
    spec = dense_eigendecompose(dense_jacobian(env), left=True)
    unstable = np.abs(spec.eigenvalues) > 1.0 + 1e-9
    assert basis.vectors.shape == (env.nx, int(unstable.sum()))
    if not unstable.any():
        return
    got = np.sort_complex(basis.eigenvalues)
    want = np.sort_complex(spec.eigenvalues[unstable])
    assert np.allclose(got, want, rtol=1e-8, atol=1e-10)
    dense_span = spec.left[:, unstable].real
    if np.linalg.matrix_rank(dense_span, tol=1e-8) < unstable.sum():
        dense_span = np.column_stack(
            [spec.left[:, unstable].real, spec.left[:, unstable].imag]
        )
    assert subspace_angles(basis.vectors, dense_span).max() <= 1e-8
    assert basis.residuals.max() <= 1e-8


def test_stable_system_yields_empty_basis():
    env = LinearEnvironment(a=0.5 * np.eye(3), b=np.eye(3)[:, :1], name="stable3")
    basis = arnoldi_unstable_basis(env)
    assert basis.vectors.shape == (3, 0)
    assert basis.eigenvalues.shape == (0,)


def test_arnoldi_exhaustion_errors():
    with pytest.raises(SubspaceExhaustedError):
        arnoldi_unstable_basis(make_toy2d(), max_restarts=0)
    # A complex pair cannot fit in a one-dimensional subspace.
    with pytest.raises(SubspaceExhaustedError):
        arnoldi_unstable_basis(make_tubular_reactor(32), max_subspace=1, max_restarts=1)


def test_unstable_coder_round_trip(toy2d, toy2d_basis):
    coder = unstable_coder(toy2d, toy2d_basis)
    assert coder.nr == 1
    assert np.array_equal(coder.center_x, toy2d.xbar)
    assert np.array_equal(coder.center_u, toy2d.ubar)
    z = np.array([2.5])
    assert np.allclose(coder.encode(coder.decode(z)), z, atol=1e-12)
    x = np.array([0.3, 0.7])
    projected = coder.decode(coder.encode(x))
    # Projection is idempotent and stays on the basis line through the center.
    assert np.allclose(coder.decode(coder.encode(projected)), projected, atol=1e-12)
    d = projected - toy2d.xbar
    assert abs(d[0] * coder.basis[1, 0] - d[1] * coder.basis[0, 0]) <= 1e-12


def test_pca_basis_leading_direction_and_sign():
    rng = np.random.default_rng(0)
    snaps = np.outer([0.0, -1.0], rng.normal(size=40))
    snaps += 1e-6 * rng.normal(size=snaps.shape)
    coder = pca_basis(snaps, 1, center_x=np.zeros(2), center_u=np.zeros(1))
    # Dominant variance direction, sign-normalized to a positive leading entry
    # even though the snapshots point the other way.
    assert coder.basis[1, 0] > 0.999999
    assert abs(coder.basis[0, 0]) <= 1e-5
    assert coder.encode(np.array([0.3, 0.7]))[0] == pytest.approx(0.7, abs=1e-5)


def test_pca_basis_rank_errors():
    flat = np.outer([1.0, 0.0], np.ones(5))
    with pytest.raises(RankDeficientError) as excinfo:
        pca_basis(flat, 2, center_x=np.zeros(2))
    assert excinfo.value.rank == 1
    with pytest.raises(RankDeficientError):
        pca_basis(np.zeros((2, 10)), 3, center_x=np.zeros(2))
