"""Dense linear algebra helpers: ordering, solves, bases, angles."""

import numpy as np
import pytest

from stabl.errors import RankDeficientError, SingularSystemError
from stabl.linalg import (
    dense_eigendecompose,
    eigenvalue_order,
    orthonormalize,
    pseudoinverse_transpose,
    solve_linear,
    spectral_radius,
    subspace_angles,
)


def test_eigenvalue_order_modulus_then_real_then_imag():
    values = np.array([1.0, -2.0, 1.0j, 2.0, -1.0j, 1.0 + 1.0j])
    expected = np.array([2.0, -2.0, 1.0 + 1.0j, 1.0, 1.0j, -1.0j])
    assert np.array_equal(values[eigenvalue_order(values)], expected)


def test_dense_eigendecompose_known_2x2():
    a = np.array([[0.9, 0.0], [0.1, 1.1]])
    spec = dense_eigendecompose(a, right=True, left=True)
    assert np.allclose(spec.eigenvalues, [1.1, 0.9], atol=1e-14)
    for lam, v, w in zip(spec.eigenvalues, spec.right.T, spec.left.T):
        assert np.linalg.norm(a @ v - lam * v) <= 1e-12
        assert np.linalg.norm(a.T @ w.conj() - lam * w.conj()) <= 1e-12
    # Leading left eigenvector spans (1, 2)/sqrt(5); leading right spans e2.
    w = spec.left[:, 0].real
    assert abs(abs(w @ np.array([1.0, 2.0]) / np.sqrt(5)) - 1.0) <= 1e-12
    v = spec.right[:, 0].real
    assert abs(abs(v[1]) - 1.0) <= 1e-12 and abs(v[0]) <= 1e-12


def test_dense_eigendecompose_conjugate_pair_adjacent():
    r, theta = 1.5, 0.3
    rot = r * np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    spec = dense_eigendecompose(rot)
    expected = r * np.exp(1j * np.array([theta, -theta]))
    assert np.allclose(spec.eigenvalues, expected, atol=1e-12)
    assert spec.eigenvalues[0].imag > 0 > spec.eigenvalues[1].imag
    assert spec.spectral_radius == pytest.approx(r, abs=1e-12)
    assert spectral_radius(rot) == pytest.approx(r, abs=1e-12)


def test_dense_eigendecompose_input_validation():
    with pytest.raises(ValueError):
        dense_eigendecompose(np.ones((2, 3)))
    with pytest.raises(ValueError):
        dense_eigendecompose(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        dense_eigendecompose(np.ones(4))


def test_solve_linear_diagonal():
    x = solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 8.0]))
    assert np.array_equal(x, np.array([1.0, 2.0]))


def test_solve_linear_singular_reports_condition():
    with pytest.raises(SingularSystemError) as excinfo:
        solve_linear(np.ones((2, 2)), np.array([1.0, 2.0]))
    assert excinfo.value.condition > 1e12


def test_orthonormalize_keeps_orthonormal_input():
    theta = 0.7
    q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    assert np.allclose(orthonormalize(q), q, atol=1e-14)
    assert np.array_equal(orthonormalize(np.eye(4)[:, :2]), np.eye(4)[:, :2])


def test_orthonormalize_preserves_span():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(5, 3))
    q = orthonormalize(a)
    assert np.allclose(q.T @ q, np.eye(3), atol=1e-12)
    assert subspace_angles(a, q).max() <= 1e-10


def test_orthonormalize_rank_deficient():
    col = np.arange(1.0, 5.0).reshape(-1, 1)
    with pytest.raises(RankDeficientError) as excinfo:
        orthonormalize(np.hstack([col, 2.0 * col]))
    assert excinfo.value.rank == 1
    with pytest.raises(RankDeficientError):
        orthonormalize(np.ones((2, 3)))  # more columns than rows


def test_subspace_angles_hand_values():
    e2 = np.array([[0.0], [1.0]])
    slanted = np.array([[1.0], [2.0]]) / np.sqrt(5)
    angle = subspace_angles(e2, slanted)
    assert angle.shape == (1,)
    assert angle[0] == pytest.approx(np.arccos(2.0 / np.sqrt(5)), abs=1e-12)
    assert subspace_angles(e2, e2)[0] <= 1e-12
    e1 = np.array([[1.0], [0.0]])
    assert subspace_angles(e1, e2)[0] == pytest.approx(np.pi / 2, abs=1e-12)


def test_subspace_angles_empty_inputs():
    assert subspace_angles(np.zeros((3, 0)), np.eye(3)).shape == (0,)


def test_pseudoinverse_transpose_right_inverse():
    rng = np.random.default_rng(3)
    w = rng.normal(size=(6, 2))
    m = pseudoinverse_transpose(w)
    assert np.allclose(w.T @ m, np.eye(2), atol=1e-12)
    q = orthonormalize(w)
    assert np.allclose(pseudoinverse_transpose(q), q, atol=1e-12)


def test_pseudoinverse_transpose_rank_deficient():
    col = np.ones((4, 1))
    with pytest.raises(RankDeficientError):
        pseudoinverse_transpose(np.hstack([col, 3.0 * col]))
