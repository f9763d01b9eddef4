"""Dense symmetric-matrix algebra for small m.

Matrices are plain float64 numpy arrays of shape (m, m); symmetry is a
structural convention of the callers (everything here symmetrizes its
output, nothing checks the input numerically).  Persistence uses the
packed upper-triangle layout of :func:`sym_pack`.

The eigensolver is a cyclic Jacobi iteration: unconditionally stable for
symmetric input, deterministic for a fixed sweep order, and free of
external dependencies.  It is only meant for m <= 6; nothing here is
tuned for large matrices.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

__all__ = [
    "EigenPair",
    "eig_sym",
    "loewner_leq",
    "pinv_sym",
    "frob_norm",
    "frob_dist",
    "sym_pack",
    "sym_unpack",
]


@dataclass(frozen=True)
class EigenPair:
    """Eigendecomposition A = V diag(values) V^T, values sorted descending."""

    values: np.ndarray
    vectors: np.ndarray


def _as_sym(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    return a


def sym_pack(a):
    """Upper triangle, row-major: (m,m) -> (m(m+1)/2,)."""
    a = _as_sym(a)
    iu = np.triu_indices(a.shape[0])
    return a[iu].copy()


def sym_unpack(p, m):
    """Inverse of :func:`sym_pack`."""
    p = np.asarray(p, dtype=float)
    if p.shape != (m * (m + 1) // 2,):
        raise InvalidInput(f"packed length {p.shape} does not match m={m}")
    a = np.zeros((m, m))
    iu = np.triu_indices(m)
    a[iu] = p
    a.T[iu] = p
    return a


def _jacobi(a, tol=1e-14, max_sweeps=60):
    # Cyclic-by-row Jacobi. Rotations are applied until the off-diagonal
    # Frobenius mass falls below tol relative to the matrix norm.
    m = a.shape[0]
    A = 0.5 * (a + a.T)
    V = np.eye(m)
    if m == 1:
        return A.diagonal().copy(), V
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(m), V
    for _ in range(max_sweeps):
        # off-diagonal mass summed directly; the subtraction form
        # sum(A*A) - sum(diag^2) cancels and stalls near sqrt(eps)*|A|
        off2 = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                off2 += 2.0 * A[p, q] * A[p, q]
        if np.sqrt(off2) <= tol * scale:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if abs(apq) <= 1e-30 * scale:
                    continue
                # Stable rotation angle (Golub & Van Loan 8.4).
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot_p = c * A[:, p] - s * A[:, q]
                rot_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = c * A[p, :] - s * A[q, :]
                rot_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rot_p, rot_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                rot_p = c * V[:, p] - s * V[:, q]
                rot_q = s * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = rot_p, rot_q
    return A.diagonal().copy(), V


def eig_sym(a) -> EigenPair:
    """Full eigendecomposition of a symmetric matrix.

    Returns eigenvalues sorted descending (stable ties) and the matching
    orthonormal eigenvector columns.  Deterministic for fixed input.
    """
    a = _as_sym(a)
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    w, v = _jacobi(a)
    order = np.argsort(-w, kind="stable")
    return EigenPair(values=w[order], vectors=v[:, order])


def loewner_leq(a, b, tol=0.0) -> bool:
    """a <= b in the Loewner sense, up to a relative eigenvalue tolerance.

    True iff lambda_min(b - a) >= -tol * max(1, ||b - a||_F).
    """
    a = _as_sym(a)
    b = _as_sym(b)
    if a.shape != b.shape:
        raise InvalidInput(f"dimension mismatch {a.shape} vs {b.shape}")
    d = b - a
    w = eig_sym(d).values
    return bool(w[-1] >= -tol * max(1.0, float(np.linalg.norm(d))))


def pinv_sym(a, eps_rel=1e-12):
    """Moore-Penrose pseudo-inverse of a symmetric PSD matrix.

    Eigenvalues <= eps_rel * lambda_max are treated as exact zeros, so the
    zero matrix maps to the zero matrix.
    """
    a = _as_sym(a)
    ep = eig_sym(a)
    lam_max = float(ep.values[0]) if ep.values.size else 0.0
    cut = eps_rel * max(lam_max, 0.0)
    keep = ep.values > cut
    inv = np.where(keep, 1.0 / np.where(keep, ep.values, 1.0), 0.0)
    out = (ep.vectors * inv) @ ep.vectors.T
    return 0.5 * (out + out.T)


def frob_norm(a) -> float:
    """Frobenius norm of the full symmetric matrix (off-diagonals twice)."""
    return float(np.linalg.norm(_as_sym(a)))


def frob_dist(a, b) -> float:
    a = _as_sym(a)
    b = _as_sym(b)
    if a.shape != b.shape:
        raise InvalidInput(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))
