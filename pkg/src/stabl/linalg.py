"""Dense linear algebra helpers used throughout the package.

All routines operate on plain float64 numpy arrays.  Eigenvalue and
factorization work is delegated to LAPACK (via numpy/scipy); this module owns
the ordering conventions, the error reporting, and the residual checks that
the rest of the package relies on.

Ordering convention: eigenvalues are always sorted by descending modulus,
with ties broken by descending real part, then descending imaginary part.
Conjugate pairs of a real matrix therefore stay adjacent, the member with
positive imaginary part first.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EigNoConvergenceError, RankDeficientError, SingularSystemError

# Relative tolerances carry an absolute floor so checks near zero stay sane.
ABS_FLOOR = 1e-14


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(a)


def eigenvalue_order(values):
    """Indices sorting eigenvalues by descending modulus, real, imaginary."""
    values = np.asarray(values)
    # lexsort uses the last key as the primary one.
    return np.lexsort((-values.imag, -values.real, -np.abs(values)))


@dataclass
class Spectrum:
    """Eigenvalues (and optional eigenvectors) in the package ordering.

    ``right`` and ``left`` hold eigenvectors as columns, ordered consistently
    with ``eigenvalues``.  Left vectors w satisfy w^H A = lambda w^H.
    """

    eigenvalues: np.ndarray
    right: np.ndarray | None = None
    left: np.ndarray | None = None

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def moduli(self):
        return np.abs(self.eigenvalues)

    @property
    def spectral_radius(self):
        return float(self.moduli.max()) if len(self) else 0.0


def dense_eigendecompose(a, right=False, left=False):
    """Full eigendecomposition of a square matrix.

    Raises ``EigNoConvergenceError`` if the QR iteration fails (LAPACK
    non-convergence), which for finite input essentially never happens.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    try:
        if right or left:
            out = scipy.linalg.eig(a, left=left, right=True)
        else:
            out = (np.linalg.eigvals(a),)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigNoConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    if left and right:
        values, vl, vr = out
    elif left:
        values, vl, vr = out
    elif right:
        values, vr = out
        vl = None
    else:
        values, vr, vl = out[0], None, None
    order = eigenvalue_order(values)
    return Spectrum(
        eigenvalues=values[order],
        right=vr[:, order] if right else None,
        left=vl[:, order] if left else None,
    )


def spectral_radius(a):
    """Largest eigenvalue modulus of a square matrix."""
    return dense_eigendecompose(a).spectral_radius


def solve_linear(m, rhs):
    """Solve m @ x = rhs with a residual check.

    Raises ``SingularSystemError`` (with an estimated condition number) for
    singular systems and for solves whose residual exceeds
    1e-10 * (||m|| ||x|| + ||rhs||).
    """
    m = _as_matrix(m)
    rhs_arr = np.asarray(rhs, dtype=float)
    try:
        x = np.linalg.solve(m, rhs_arr)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"singular system: {exc}", condition=float(np.linalg.cond(m))
        ) from exc
    residual = np.linalg.norm(m @ x - rhs_arr)
    bound = 1e-10 * (
        np.linalg.norm(m) * np.linalg.norm(x) + np.linalg.norm(rhs_arr)
    )
    if residual > max(bound, ABS_FLOOR):
        raise SingularSystemError(
            f"ill-conditioned solve: residual {residual:.3e} exceeds {bound:.3e}",
            condition=float(np.linalg.cond(m)),
        )
    return x


def orthonormalize(columns):
    """Orthonormal basis with the same span and column order as the input.

    Uses Householder QR with the sign convention diag(R) >= 0, so an already
    orthonormal input is returned unchanged up to rounding.  Raises
    ``RankDeficientError`` (reporting the numerical rank) when the columns are
    dependent to tolerance 1e-12.
    """
    a = _as_matrix(a=columns, name="columns")
    n, k = a.shape
    if k == 0:
        return a.copy()
    if k > n:
        raise RankDeficientError(f"{k} columns in dimension {n}", rank=n)
    q, r = np.linalg.qr(a)
    diag = np.diag(r).copy()
    scale = max(np.max(np.abs(diag)), ABS_FLOOR)
    rank = int(np.sum(np.abs(diag) > 1e-12 * scale))
    if rank < k:
        raise RankDeficientError(
            f"columns have numerical rank {rank} < {k}", rank=rank
        )
    signs = np.where(diag < 0.0, -1.0, 1.0)
    return q * signs


def subspace_angles(u, v):
    """Principal angles between the column spans of u and v.

    Returned in ascending order, each in [0, pi/2].  Inputs need not be
    orthonormal; empty inputs give an empty result.
    """
    u = _as_matrix(u, "u")
    v = _as_matrix(v, "v")
    if u.shape[1] == 0 or v.shape[1] == 0:
        return np.zeros(0)
    angles = scipy.linalg.subspace_angles(u, v)
    return np.sort(np.clip(angles, 0.0, np.pi / 2.0))


def pseudoinverse_transpose(w):
    """Moore-Penrose pseudoinverse of w^T for a tall full-column-rank w.

    For orthonormal w this equals w itself.  Raises ``RankDeficientError``
    when w does not have full column rank.
    """
    w = _as_matrix(w, "w")
    if w.shape[1] == 0:
        return w.copy()
    sv = np.linalg.svd(w, compute_uv=False)
    rank = int(np.sum(sv > 1e-12 * max(sv[0], ABS_FLOOR)))
    if rank < w.shape[1]:
        raise RankDeficientError(
            f"basis has numerical rank {rank} < {w.shape[1]}", rank=rank
        )
    return np.linalg.pinv(w.T)
