"""Unstable eigenspace estimation and linear state coders.

The left unstable eigenspace of the step Jacobian J_x at the steady state is
the span of the eigenvectors of J_x^T with eigenvalue modulus >= 1.  It is
computed matrix-free from adjoint queries z -> J_x^T z with a restarted
Arnoldi iteration: converged unstable Ritz vectors are locked (deflated) and
the iteration restarts on the orthogonal complement until the dominant
remaining eigenvalue is certified stable.  A PCA coder over state snapshots
is provided as the data-driven alternative; the two are compared by the
diagnostics module.
"""

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficientError, SubspaceExhaustedError
from .linalg import dense_eigendecompose, eigenvalue_order, orthonormalize

# Eigenvalues with modulus >= 1 - UNSTABLE_MARGIN count as unstable.
UNSTABLE_MARGIN = 1e-9


@dataclass
class UnstableBasis:
    """Orthonormal basis of the left unstable eigenspace.

    ``vectors`` has one column per basis direction; ``eigenvalues`` holds the
    matching unstable eigenvalues (conjugate pairs adjacent, each pair
    realized by the two columns spanning its real/imaginary parts) and
    ``residuals`` the per-eigenpair norms ||J_x^T w - lambda w||.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray
    residuals: np.ndarray

    @property
    def nr(self):
        return self.vectors.shape[1]


@dataclass
class LinearCoder:
    """Affine encoder/decoder pair built on an orthonormal basis.

    encode(x) = W^T (x - center_x); decode(z) = center_x + W z.  With
    orthonormal columns the decoder is the pseudoinverse of the encoder, so
    encode(decode(z)) = z.
    """

    basis: np.ndarray
    center_x: np.ndarray
    center_u: np.ndarray

    @property
    def nr(self):
        return self.basis.shape[1]

    def encode(self, x):
        return self.basis.T @ (np.asarray(x, dtype=float) - self.center_x)

    def decode(self, z):
        return self.center_x + self.basis @ np.asarray(z, dtype=float)


def encode(coder, x):
    return coder.encode(x)


def decode(coder, z):
    return coder.decode(z)


def _arnoldi_cycle(operator, start, locked, max_steps):
    """One Arnoldi sweep of the operator deflated against ``locked``.

    Returns (V, H, k, breakdown) with V holding k orthonormal Krylov vectors,
    H the (k+1) x k Hessenberg section, and breakdown set when the Krylov
    space closed early (residual column vanished).  Re-orthogonalization runs
    the Gram-Schmidt pass twice against both the locked and current vectors.
    """
    n = start.shape[0]
    v = start.copy()
    for _ in range(2):
        if locked.shape[1]:
            v -= locked @ (locked.T @ v)
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        return np.zeros((n, 0)), np.zeros((1, 0)), 0, True
    basis = [v / norm]
    h = np.zeros((max_steps + 1, max_steps))
    for j in range(max_steps):
        w = operator(basis[j])
        scale = max(np.linalg.norm(w), 1.0)
        vmat = np.column_stack(basis)
        # Locked directions must be removed inside the same pass as the basis
        # ones: the basis columns carry round-off leaks of the (dominant)
        # locked directions, and a small subdiagonal would otherwise amplify
        # the re-injected leak geometrically across steps.
        for _ in range(2):
            if locked.shape[1]:
                w -= locked @ (locked.T @ w)
            coeffs = vmat.T @ w
            w -= vmat @ coeffs
            h[: j + 1, j] += coeffs
        norm = np.linalg.norm(w)
        if norm <= 1e-13 * scale:
            return vmat, h[: j + 2, : j + 1], j + 1, True
        h[j + 1, j] = norm
        basis.append(w / norm)
    return np.column_stack(basis[:max_steps]), h, max_steps, False


def _fold_complex(columns):
    """Real column block spanning a (possibly complex) eigenvector."""
    out = []
    for col in columns:
        out.append(np.real(col))
        if np.abs(np.imag(col)).max() > 1e-13 * max(np.abs(col).max(), 1e-300):
            out.append(np.imag(col))
    return out


def arnoldi_unstable_basis(env, margin=UNSTABLE_MARGIN, max_subspace=None,
                           max_restarts=12, tol=1e-10, rng=None):
    """Left unstable eigenspace of the step Jacobian at (xbar, ubar).

    Uses only adjoint queries ``vjp_state``; the subspace dimension is not
    assumed, only bootstrapped from ``nr_expected`` for the sweep width.  A
    stable system yields an empty basis (this is not an error).  Raises
    ``SubspaceExhaustedError`` when the sweep budget ends with unstable Ritz
    values still unresolved.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = env.nx
    xbar, ubar = env.xbar, env.ubar

    def operator(z):
        return env.vjp_state(xbar, ubar, z)

    if max_subspace is None:
        max_subspace = max(20, 2 * max(env.nr_expected, 1) + 10)
    width = min(max_subspace, n)
    # Clustered spectra need deeper sweeps than the default before the Ritz
    # residuals reach tol; the width doubles whenever a sweep stalls.
    width_cap = min(n, max(8 * width, 160))

    locked = np.zeros((n, 0))
    carry = None
    for _ in range(max_restarts):
        if locked.shape[1] >= n:
            break
        sweep = min(width, n - locked.shape[1])
        start = carry if carry is not None else rng.standard_normal(n)
        vmat, h, k, breakdown = _arnoldi_cycle(operator, start, locked, sweep)
        if k == 0:
            break
        if not breakdown and k == n - locked.shape[1]:
            # The sweep saturated the deflated space, so its orthonormal basis
            # is complete and the projected operator can be certified densely.
            # The Hessenberg recursion is not trusted here: on tight eigenvalue
            # clusters round-off re-seeds the recursion past its exact closure
            # and the Ritz residuals stall above tol.
            aq = np.column_stack([operator(vmat[:, j]) for j in range(k)])
            if locked.shape[1]:
                aq -= locked @ (locked.T @ aq)
            values, vectors = np.linalg.eig(vmat.T @ aq)
            residuals = np.linalg.norm(
                aq @ vectors - (vmat @ vectors) * values, axis=0
            )
        else:
            values, vectors = np.linalg.eig(h[:k, :k])
            beta = 0.0 if breakdown else float(h[k, k - 1])
            residuals = np.abs(beta) * np.abs(vectors[-1, :])
        unstable = np.abs(values) >= 1.0 - margin
        converged = residuals <= tol * np.maximum(1.0, np.abs(values))

        locked_any = False
        for i in eigenvalue_order(values):
            if unstable[i] and converged[i] and values[i].imag >= 0.0:
                for col in _fold_complex([vmat @ vectors[:, i]]):
                    c = col.astype(float)
                    for _ in range(2):
                        if locked.shape[1]:
                            c -= locked @ (locked.T @ c)
                    norm = np.linalg.norm(c)
                    if norm > 1e-8:
                        locked = np.column_stack([locked, c / norm])
                        locked_any = True

        if not unstable.any():
            # Certify the count: the dominant remaining Ritz value must be
            # both stable and converged before the deflated sweep is trusted.
            dominant = int(np.argmax(np.abs(values)))
            if converged[dominant] or breakdown:
                break
            carry = np.real(vmat @ vectors[:, dominant])
            width = min(2 * width, width_cap)
            continue
        if locked_any:
            # Re-sweep the deflated operator to look for further directions.
            carry = None
            continue
        # Unstable Ritz values exist but none converged: restart from their
        # span and widen the sweep.
        lead = next(i for i in eigenvalue_order(values) if unstable[i])
        carry = np.real(vmat @ vectors[:, lead])
        width = min(2 * width, width_cap)
    else:
        raise SubspaceExhaustedError(
            f"unstable subspace not resolved within {max_restarts} sweeps "
            f"(final width {width})"
        )

    if locked.shape[1] == 0:
        return UnstableBasis(
            vectors=np.zeros((n, 0)),
            eigenvalues=np.zeros(0, dtype=complex),
            residuals=np.zeros(0),
        )
    return _finalize_basis(operator, locked, margin)


def _finalize_basis(operator, locked, margin):
    """Re-extract eigen directions from the locked span and order columns.

    The projected operator on the locked span carries exactly the captured
    eigenvalues; columns are rebuilt from its eigenvectors so that column i
    corresponds to eigenvalue i (conjugate pairs share their two columns).
    """
    for _ in range(3):
        q = orthonormalize(locked)
        aq = np.column_stack([operator(q[:, j]) for j in range(q.shape[1])])
        small = q.T @ aq
        spec = dense_eigendecompose(small, right=True)
        keep = np.abs(spec.eigenvalues) >= 1.0 - margin
        if keep.all():
            break
        # A stable direction leaked into the locked span; prune and retry.
        cols = [
            spec.right[:, i]
            for i in range(len(spec)) if keep[i] and spec.eigenvalues[i].imag >= 0
        ]
        if not cols:
            n = locked.shape[0]
            return UnstableBasis(
                vectors=np.zeros((n, 0)),
                eigenvalues=np.zeros(0, dtype=complex),
                residuals=np.zeros(0),
            )
        locked = np.column_stack([q @ c for c in _fold_complex(cols)])

    ordered = []
    for i in range(len(spec)):
        lam = spec.eigenvalues[i]
        if lam.imag < 0:
            continue
        ordered.extend(_fold_complex([q @ spec.right[:, i]]))
    vectors = orthonormalize(np.column_stack(ordered))
    # Deterministic sign: largest-magnitude entry of each column positive
    # (sign flips preserve the span, orthonormality, and the eigenvalues of
    # the projected operator).
    for j in range(vectors.shape[1]):
        lead = np.argmax(np.abs(vectors[:, j]))
        if vectors[lead, j] < 0:
            vectors[:, j] = -vectors[:, j]
    aq = np.column_stack([operator(vectors[:, j]) for j in range(vectors.shape[1])])
    small = vectors.T @ aq
    spec = dense_eigendecompose(small, right=True)
    eigenvalues = spec.eigenvalues
    residuals = np.array([
        np.linalg.norm(aq @ spec.right[:, i] - eigenvalues[i] * (vectors @ spec.right[:, i]))
        for i in range(len(spec))
    ])
    return UnstableBasis(vectors=vectors, eigenvalues=eigenvalues, residuals=residuals)


def unstable_coder(env, basis):
    """LinearCoder for an unstable basis, centered at the steady state."""
    return LinearCoder(basis=basis.vectors, center_x=env.xbar, center_u=env.ubar)


def invariant_subspace_residual(env, basis):
    """Relative residual of W^T J_x = (W^T J_x W) W^T at the steady state.

    Zero exactly when span(W) is invariant under J_x^T.  Assembled from nr
    adjoint queries.
    """
    w = basis.vectors
    if w.shape[1] == 0:
        return 0.0
    aw = np.column_stack([
        env.vjp_state(env.xbar, env.ubar, w[:, j]) for j in range(w.shape[1])
    ])
    wtj = aw.T                      # rows of W^T J_x
    projected = (w.T @ aw).T        # (W^T J_x W)
    defect = wtj - projected @ w.T
    return float(np.linalg.norm(defect) / max(np.linalg.norm(wtj), 1e-300))


def pca_basis(snapshots, nr, center_x, center_u=None):
    """Leading principal directions of state snapshots.

    ``snapshots`` holds one state per column; they are centered at
    ``center_x`` (the steady state, not the sample mean) before the SVD.
    Raises ``RankDeficientError`` when the snapshots do not support ``nr``
    directions.
    """
    snapshots = np.asarray(snapshots, dtype=float)
    center_x = np.asarray(center_x, dtype=float)
    if snapshots.ndim != 2:
        raise ValueError("snapshots must be a 2-D array of state columns")
    if nr < 1 or nr > min(snapshots.shape):
        raise RankDeficientError(
            f"cannot extract {nr} directions from shape {snapshots.shape}",
            rank=min(snapshots.shape),
        )
    centered = snapshots - center_x[:, None]
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * max(s[0], 1e-300)))
    if rank < nr:
        raise RankDeficientError(
            f"snapshots have numerical rank {rank} < {nr}", rank=rank
        )
    basis = u[:, :nr].copy()
    # Deterministic sign: largest-magnitude entry of each column positive.
    for j in range(nr):
        lead = np.argmax(np.abs(basis[:, j]))
        if basis[lead, j] < 0:
            basis[:, j] = -basis[:, j]
    if center_u is None:
        center_u = np.zeros(0)
    return LinearCoder(basis=basis, center_x=center_x,
                       center_u=np.asarray(center_u, dtype=float))
