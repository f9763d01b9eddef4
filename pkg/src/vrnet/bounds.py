"""Voigt/Reuss bounds, Hill average, and the normalization context.

For piecewise-constant phases the arithmetic mean of the phase property
matrices is a rigorous upper bound and the harmonic mean a rigorous lower
bound in the Loewner sense.  ``make_bounds`` additionally factors the gap
D = Y_V - Y_R as L L^T (eigenvalue square root with relative truncation),
which is everything downstream normalization needs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BoundViolation, InvalidInput
from .spdcore import eig_sym, loewner_leq

__all__ = [
    "PhaseSystem",
    "BoundsPair",
    "voigt_bound",
    "reuss_bound",
    "hill_average",
    "make_bounds",
    "bounds_from_matrices",
    "two_phase_isotropic",
]


@dataclass(frozen=True)
class PhaseSystem:
    """Volume fractions plus one SPD property matrix per phase."""

    fractions: np.ndarray
    properties: np.ndarray  # (n_phases, m, m)

    def __post_init__(self):
        f = np.asarray(self.fractions, dtype=float)
        p = np.asarray(self.properties, dtype=float)
        if f.ndim != 1 or f.size < 1:
            raise InvalidInput("fractions must be a non-empty 1d array")
        if p.ndim != 3 or p.shape[0] != f.size or p.shape[1] != p.shape[2]:
            raise InvalidInput(f"properties shape {p.shape} inconsistent with {f.size} phases")
        if np.any(f <= 0.0) or np.any(f > 1.0):
            raise InvalidInput("fractions must lie in (0, 1]")
        if abs(float(f.sum()) - 1.0) > 1e-12:
            raise InvalidInput(f"fractions sum to {f.sum()!r}, expected 1")
        for i in range(p.shape[0]):
            if not np.all(np.isfinite(p[i])):
                raise InvalidInput(f"phase {i} has non-finite entries")
            if eig_sym(p[i]).values[-1] <= 0.0:
                raise InvalidInput(f"phase {i} property matrix is not SPD")
        object.__setattr__(self, "fractions", f)
        object.__setattr__(self, "properties", p)

    @property
    def dim(self):
        return self.properties.shape[1]

    @property
    def n_phases(self):
        return self.fractions.size


@dataclass(frozen=True)
class BoundsPair:
    """Precomputed normalization context for one sample.

    l_factor is m x r with L L^T = Y_V - Y_R (to truncation); l_pinv is its
    left inverse on the retained eigenspace.  rank == 0 marks the degenerate
    single-material case where both bounds coincide.
    """

    y_voigt: np.ndarray
    y_reuss: np.ndarray
    l_factor: np.ndarray
    l_pinv: np.ndarray
    rank: int

    @property
    def dim(self):
        return self.y_voigt.shape[0]


def _inv_spd(a):
    # Inverse via the symmetric eigendecomposition; keeps the result
    # exactly symmetric, which plain LU inversion does not.
    ep = eig_sym(a)
    if ep.values[-1] <= 0.0:
        raise InvalidInput("matrix is singular or indefinite")
    out = (ep.vectors / ep.values) @ ep.vectors.T
    return 0.5 * (out + out.T)


def voigt_bound(ps: PhaseSystem):
    """Arithmetic fraction-weighted mean of the phase matrices."""
    return np.einsum("i,ijk->jk", ps.fractions, ps.properties)


def reuss_bound(ps: PhaseSystem):
    """Inverse of the fraction-weighted mean of phase inverses."""
    acc = np.zeros((ps.dim, ps.dim))
    for c, k in zip(ps.fractions, ps.properties):
        acc += c * _inv_spd(k)
    return _inv_spd(acc)


def hill_average(ps: PhaseSystem):
    """Midpoint of the two bounds; admissible by construction."""
    return 0.5 * (voigt_bound(ps) + reuss_bound(ps))


def bounds_from_matrices(y_voigt, y_reuss, eps_rel=1e-12) -> BoundsPair:
    """Build the L / L+ factorization from explicit bound matrices.

    Eigenvalues of D = Y_V - Y_R at or below eps_rel * lambda_max are
    truncated; a negative eigenvalue beyond that tolerance means the
    inputs are not actually ordered and raises BoundViolation.
    """
    y_voigt = np.asarray(y_voigt, dtype=float)
    y_reuss = np.asarray(y_reuss, dtype=float)
    d = y_voigt - y_reuss
    ep = eig_sym(d)
    lam_max = float(ep.values[0]) if ep.values.size else 0.0
    if lam_max <= 0.0:
        # identical phases: zero gap, empty factor
        if lam_max < -eps_rel:
            raise BoundViolation(
                f"bound gap has negative eigenvalue {lam_max!r}", margin=lam_max
            )
        m = y_voigt.shape[0]
        return BoundsPair(y_voigt, y_reuss, np.zeros((m, 0)), np.zeros((0, m)), 0)
    cut = eps_rel * lam_max
    if ep.values[-1] < -cut:
        raise BoundViolation(
            f"bound gap has eigenvalue {ep.values[-1]!r} below -{cut!r}",
            margin=float(ep.values[-1]),
        )
    keep = ep.values > cut
    r = int(np.count_nonzero(keep))
    q = ep.vectors[:, keep]
    sq = np.sqrt(ep.values[keep])
    l_factor = q * sq
    l_pinv = (q / sq).T
    return BoundsPair(y_voigt, y_reuss, l_factor, l_pinv, r)


def make_bounds(ps: PhaseSystem, eps_rel=1e-12) -> BoundsPair:
    return bounds_from_matrices(voigt_bound(ps), reuss_bound(ps), eps_rel)


def two_phase_isotropic(dim, kappa_matrix, kappa_inclusion, vf_inclusion) -> PhaseSystem:
    """Two isotropic phases; phase order (matrix, inclusion) as in the solver."""
    if not (0.0 < vf_inclusion < 1.0):
        raise InvalidInput(f"inclusion fraction {vf_inclusion!r} outside (0,1)")
    eye = np.eye(dim)
    return PhaseSystem(
        fractions=np.array([1.0 - vf_inclusion, vf_inclusion]),
        properties=np.stack([kappa_matrix * eye, kappa_inclusion * eye]),
    )


def audit_bounds(kappa, ps_or_pair, tol=1e-8) -> bool:
    """Two-sided Loewner check of a tensor against its bounds."""
    if isinstance(ps_or_pair, BoundsPair):
        yv, yr = ps_or_pair.y_voigt, ps_or_pair.y_reuss
    else:
        yv, yr = voigt_bound(ps_or_pair), reuss_bound(ps_or_pair)
    return loewner_leq(yr, kappa, tol) and loewner_leq(kappa, yv, tol)


__all__.append("audit_bounds")
