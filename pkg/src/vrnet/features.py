"""Compact geometric descriptors of periodic binary grids.

Layout of schema "axial-s2-v1" (length 18 in 2D, 26 in 3D):

    [0]                  volume fraction
    [1 .. 6d]            two-point correlation S2 of the inclusion phase,
                         lags (1, 2, 4, 8, 16, 32) along each axis,
                         circular (lag taken modulo the extent)
    [6d+1 .. 7d]         band features: fraction of complete matrix-phase
                         lines running parallel to each axis
    [7d+1 .. 8d]         directional variances: mean over lines parallel
                         to each axis of the within-line indicator
                         variance p (1 - p)
    [8d+1]               interface density: phase-changing faces / volume

All features are translation invariant by construction (everything is
circular).  Standardization is the surrogate's job; values here are raw.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .microgen import VoxelGrid, volume_fraction

__all__ = ["FeatureVector", "SCHEMA_ID", "LAGS", "extract_features", "assemble_input", "feature_length"]

SCHEMA_ID = "axial-s2-v1"
LAGS = (1, 2, 4, 8, 16, 32)


def feature_length(dim):
    return 2 + 8 * dim


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema: str = SCHEMA_ID

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise InvalidInput("feature vector has non-finite entries")
        object.__setattr__(self, "values", v)


def _two_point(ind):
    # circular autocorrelation via FFT; s2[tau] = mean_x chi(x) chi(x+tau)
    f = np.fft.rfftn(ind)
    return np.fft.irfftn(np.abs(f) ** 2, s=ind.shape, axes=range(len(ind.shape))) / ind.size


def extract_features(g: VoxelGrid) -> FeatureVector:
    cells = g.cells
    vf = volume_fraction(g)
    if vf <= 0.0 or vf >= 1.0:
        raise InvalidInput("descriptors need both phases present")
    d = g.dim
    ind = cells.astype(float)
    s2 = _two_point(ind)
    origin = s2[(0,) * d]
    assert abs(origin - vf) <= 1e-12 * max(1.0, vf), "S2(0) must equal the volume fraction"
    vals = [vf]
    for axis in range(d):
        n = cells.shape[axis]
        for lag in LAGS:
            idx = [0] * d
            idx[axis] = lag % n
            vals.append(float(s2[tuple(idx)]))
    for axis in range(d):
        # complete uninterrupted matrix lines parallel to this axis
        vals.append(float(np.mean(np.all(cells == 0, axis=axis))))
    for axis in range(d):
        p = np.mean(ind, axis=axis)
        vals.append(float(np.mean(p * (1.0 - p))))
    faces = 0
    for axis in range(d):
        faces += int(np.count_nonzero(cells != np.roll(cells, -1, axis=axis)))
    vals.append(faces / cells.size)
    return FeatureVector(np.array(vals))


def assemble_input(fv: FeatureVector, contrast) -> np.ndarray:
    """Geometric features plus log10 of the phase contrast."""
    contrast = float(contrast)
    if contrast <= 0.0:
        raise InvalidInput(f"contrast must be positive, got {contrast!r}")
    return np.concatenate([fv.values, [np.log10(contrast)]])
