"""Spectral normalization of bound-admissible SPD tensors.

An admissible tensor Y (Reuss <= Y <= Voigt in the Loewner sense) maps to

    Ytilde = L+ (Y_V - Y) L+^T,

whose spectrum lies in [0, 1]; the inverse map Y = Y_V - L Ytilde L^T
recovers Y exactly on the retained eigenspace.  Ytilde factors further as
Q diag(xi_lambda) Q^T with Q parameterized by unconstrained numbers in
[0, 1], which is what lets a sigmoid output head cover exactly the set of
admissible tensors and nothing else.

Orthogonal parameterization: Q = exp(S(a)) with skew-symmetric S and
entries a_k = pi * (2 xi_k - 1).  The exponential with ||S||_2 <= pi is
onto SO(m), and SO(m) suffices because Q Lambda Q^T is invariant under
column sign flips.  Closed forms for m = 2 and m = 3 (Rodrigues); general
m falls back to scipy.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .bounds import BoundsPair
from .errors import BoundViolation, InvalidInput
from .spdcore import eig_sym, loewner_leq

__all__ = [
    "NormalizedTarget",
    "normalize",
    "denormalize",
    "param_to_q",
    "q_to_param",
    "reconstruct",
    "phi_loss",
    "phi_sq",
    "rel_frob_error",
]


@dataclass(frozen=True)
class NormalizedTarget:
    """Normalized tensor plus its factored parameterization.

    y_tilde is r x r where r is the retained rank of the bound gap;
    xi_lambda holds the r eigenvalues (in [0,1], descending), xi_q the
    r(r-1)/2 orthogonal parameters.
    """

    y_tilde: np.ndarray
    xi_lambda: np.ndarray
    xi_q: np.ndarray


def _pair_index(m):
    # row-major upper-triangle pair order: (0,1), (0,2), ..., (m-2,m-1)
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


def _skew(a, m):
    s = np.zeros((m, m))
    for k, (i, j) in enumerate(_pair_index(m)):
        s[i, j] = -a[k]
        s[j, i] = a[k]
    return s


def _rodrigues_coeffs(t):
    """A = sin(r)/r, B = (1-cos(r))/r^2 as functions of t = r^2."""
    if t < 1e-8:
        a = 1.0 - t / 6.0 + t * t / 120.0
        b = 0.5 - t / 24.0 + t * t / 720.0
    else:
        r = np.sqrt(t)
        a = np.sin(r) / r
        b = (1.0 - np.cos(r)) / t
    return a, b


def param_to_q(xi_q, m):
    """Map xi in [0,1]^{m(m-1)/2} to an orthogonal m x m matrix.

    Out-of-range components are clipped and a warning is emitted; that
    situation signals a bug in an upstream activation, not a user error.
    """
    xi = np.asarray(xi_q, dtype=float)
    n_pair = m * (m - 1) // 2
    if xi.shape != (n_pair,):
        raise InvalidInput(f"expected {n_pair} parameters for m={m}, got {xi.shape}")
    if np.any(xi < 0.0) or np.any(xi > 1.0):
        warnings.warn("orthogonal parameters outside [0,1] were clipped", stacklevel=2)
        xi = np.clip(xi, 0.0, 1.0)
    a = np.pi * (2.0 * xi - 1.0)
    if m == 1:
        return np.eye(1)
    if m == 2:
        c, s = np.cos(a[0]), np.sin(a[0])
        return np.array([[c, -s], [s, c]])
    s = _skew(a, m)
    if m == 3:
        t = float(a @ a)
        ca, cb = _rodrigues_coeffs(t)
        return np.eye(3) + ca * s + cb * (s @ s)
    from scipy.linalg import expm

    return expm(s)


def _log_so3(q):
    # principal log of a 3x3 rotation, returned as the skew matrix
    tr = np.clip((np.trace(q) - 1.0) * 0.5, -1.0, 1.0)
    theta = float(np.arccos(tr))
    if theta < 1e-8:
        return 0.5 * (q - q.T)
    if theta < np.pi - 1e-6:
        return (theta / (2.0 * np.sin(theta))) * (q - q.T)
    # angle at (or numerically at) pi: extract the axis from Q + I
    mm = 0.5 * (q + np.eye(3))
    i = int(np.argmax(np.diag(mm)))
    n = mm[:, i] / np.sqrt(max(mm[i, i], 1e-300))
    n = n / np.linalg.norm(n)
    w = theta * n
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def q_to_param(q):
    """Inverse of :func:`param_to_q` modulo column sign flips.

    A det = -1 input has its last column flipped first; Q Lambda Q^T is
    unchanged by that. Entries of the principal log are bounded by pi, so
    the returned parameters always land in [0, 1].
    """
    q = np.asarray(q, dtype=float)
    m = q.shape[0]
    if q.ndim != 2 or q.shape[1] != m:
        raise InvalidInput(f"expected a square matrix, got {q.shape}")
    if m == 1:
        return np.zeros(0)
    if np.linalg.det(q) < 0.0:
        q = q.copy()
        q[:, -1] = -q[:, -1]
    if m == 2:
        ang = float(np.arctan2(q[1, 0], q[0, 0]))
        return np.clip(np.array([(ang / np.pi + 1.0) * 0.5]), 0.0, 1.0)
    if m == 3:
        s = _log_so3(q)
    else:
        from scipy.linalg import logm

        l = logm(q)
        l = np.real(l)
        s = 0.5 * (l - l.T)
    a = np.array([s[j, i] for (i, j) in _pair_index(m)])
    a = np.clip(a, -np.pi, np.pi)
    return np.clip((a / np.pi + 1.0) * 0.5, 0.0, 1.0)


def reconstruct(xi_q, xi_lambda, m):
    """Q diag(xi_lambda) Q^T from the two parameter blocks."""
    lam = np.asarray(xi_lambda, dtype=float)
    if lam.shape != (m,):
        raise InvalidInput(f"expected {m} eigenvalues, got {lam.shape}")
    q = param_to_q(xi_q, m)
    return (q * lam) @ q.T


def normalize(y, b: BoundsPair, tol=1e-8) -> NormalizedTarget:
    """Map an admissible tensor into the normalized representation.

    Eigenvalues of the image are clipped to [0, 1]; inputs violating the
    bounds beyond `tol` raise BoundViolation carrying the offending
    eigenvalue margin.
    """
    y = np.asarray(y, dtype=float)
    if b.rank == 0:
        return NormalizedTarget(np.zeros((0, 0)), np.zeros(0), np.zeros(0))
    if not loewner_leq(b.y_reuss, y, tol):
        lo = eig_sym(y - b.y_reuss).values[-1]
        raise BoundViolation(f"tensor below the lower bound, margin {lo!r}", margin=float(lo))
    if not loewner_leq(y, b.y_voigt, tol):
        hi = eig_sym(b.y_voigt - y).values[-1]
        raise BoundViolation(f"tensor above the upper bound, margin {hi!r}", margin=float(hi))
    yt = b.l_pinv @ (b.y_voigt - y) @ b.l_pinv.T
    yt = 0.5 * (yt + yt.T)
    ep = eig_sym(yt)
    lam = np.clip(ep.values, 0.0, 1.0)
    y_tilde = (ep.vectors * lam) @ ep.vectors.T
    return NormalizedTarget(
        y_tilde=0.5 * (y_tilde + y_tilde.T),
        xi_lambda=lam,
        xi_q=q_to_param(ep.vectors),
    )


def denormalize(nt, b: BoundsPair):
    """Inverse map Y = Y_V - L Ytilde L^T.

    Accepts a NormalizedTarget or a bare r x r matrix.  For a rank-0
    bounds pair (identical phases) the only admissible tensor is the bound
    itself, which is returned.
    """
    y_tilde = nt.y_tilde if isinstance(nt, NormalizedTarget) else np.asarray(nt, dtype=float)
    if b.rank == 0:
        if y_tilde.size != 0:
            raise InvalidInput("nonempty target for a rank-0 bounds pair")
        return b.y_voigt.copy()
    if y_tilde.shape != (b.rank, b.rank):
        raise InvalidInput(f"target shape {y_tilde.shape} does not match rank {b.rank}")
    y = b.y_voigt - b.l_factor @ y_tilde @ b.l_factor.T
    return 0.5 * (y + y.T)


def phi_loss(y_tilde_true, y_tilde_pred) -> float:
    """phi = ||Ytilde - Ytilde_hat||_F / sqrt(m); in [0,1] for admissible pairs."""
    a = np.asarray(y_tilde_true, dtype=float)
    c = np.asarray(y_tilde_pred, dtype=float)
    if a.shape != c.shape:
        raise InvalidInput(f"dimension mismatch {a.shape} vs {c.shape}")
    m = a.shape[0]
    if m == 0:
        return 0.0
    return float(np.linalg.norm(a - c) / np.sqrt(m))


def phi_sq(y_tilde_true, y_tilde_pred) -> float:
    """Squared variant used as the (smooth) training objective."""
    p = phi_loss(y_tilde_true, y_tilde_pred)
    return p * p


def rel_frob_error(y_true, y_pred) -> float:
    """||y_pred - y_true||_F / ||y_true||_F."""
    a = np.asarray(y_true, dtype=float)
    c = np.asarray(y_pred, dtype=float)
    if a.shape != c.shape:
        raise InvalidInput(f"dimension mismatch {a.shape} vs {c.shape}")
    denom = float(np.linalg.norm(a))
    if denom == 0.0:
        raise InvalidInput("reference tensor is zero")
    return float(np.linalg.norm(c - a) / denom)
