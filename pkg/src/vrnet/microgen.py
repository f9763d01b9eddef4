"""Periodic binary microstructures: RSA inclusions and analytic oracles.

Grids are stored as uint8 arrays with 1 marking the inclusion phase; all
geometry predicates are evaluated modulo the grid extents (minimal-image
distances), so every generated structure tiles periodically.

Randomness comes from a counter-based Philox generator seeded through
numpy's SeedSequence, which makes generation reproducible across runs and
platforms; reference outputs are published in the README.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GenerationIncomplete, InvalidInput

__all__ = [
    "VoxelGrid",
    "GenSpec",
    "generate_rsa",
    "make_laminate",
    "make_checkerboard",
    "volume_fraction",
    "rng_from_seed",
]

KINDS_2D = ("disks", "rectangles")
KINDS_3D = ("spheres", "ellipsoids")

# placements tried before generation is declared incomplete
ATTEMPT_BUDGET = 10_000
# achieved volume fraction must land this close to the drawn target
VF_TOLERANCE = 0.02


def rng_from_seed(seed):
    """Counter-based generator; the single PRNG entry point of the package."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class VoxelGrid:
    """Periodic binary raster; cells[i, j(, k)] in {0, 1}, 1 = inclusion."""

    cells: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if c.ndim not in (2, 3):
            raise InvalidInput(f"grid must be 2d or 3d, got {c.ndim}d")
        if np.any(c > 1):
            raise InvalidInput("grid cells must be 0 or 1")
        object.__setattr__(self, "cells", c)

    @property
    def dim(self):
        return self.cells.ndim

    @property
    def shape(self):
        return self.cells.shape


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one RSA generation run.

    Sizes are fractions of the smallest grid extent (an inclusion of size
    s has diameter s * min(shape)); they must stay below 1 so the
    minimal-image test is unambiguous.
    """

    dim: int
    shape: tuple
    kinds: tuple = ("disks",)
    vf_range: tuple = (0.18, 0.84)
    size_range: tuple = (0.08, 0.35)
    overlap: bool = True
    rotate: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidInput(f"dim must be 2 or 3, got {self.dim}")
        shape = tuple(int(n) for n in self.shape)
        if len(shape) != self.dim or any(n < 2 for n in shape):
            raise InvalidInput(f"shape {shape} inconsistent with dim {self.dim}")
        allowed = KINDS_2D if self.dim == 2 else KINDS_3D
        kinds = tuple(self.kinds)
        if not kinds or any(k not in allowed for k in kinds):
            raise InvalidInput(f"kinds {kinds} must be a non-empty subset of {allowed}")
        lo, hi = self.vf_range
        if not (0.0 < lo <= hi < 1.0):
            raise InvalidInput(f"volume fraction range {self.vf_range} outside (0,1)")
        slo, shi = self.size_range
        if not (0.0 < slo <= shi < 1.0):
            raise InvalidInput(f"size range {self.size_range} outside (0,1)")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "kinds", kinds)


def volume_fraction(g: VoxelGrid) -> float:
    return float(np.count_nonzero(g.cells)) / g.cells.size


def _wrapped_deltas(shape):
    # per-axis minimal-image offsets from a float center, broadcastable
    axes = []
    for a, n in enumerate(shape):
        idx = np.arange(n, dtype=float)
        s = [1] * len(shape)
        s[a] = n
        axes.append(idx.reshape(s))
    return axes


def _delta(coords, center, n):
    return (coords - center + 0.5 * n) % n - 0.5 * n


def _rot2(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _random_frame3(rng):
    # Haar-ish orthonormal frame; sign-fixed QR of a Gaussian matrix
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    return q * np.sign(np.diagonal(r))


def _rasterize(kind, shape, rng, rotate, size_lo, size_hi):
    grids = _wrapped_deltas(shape)
    ref = min(shape)
    center = [rng.uniform(0.0, n) for n in shape]
    d = [_delta(grids[a], center[a], shape[a]) for a in range(len(shape))]
    if kind in ("disks", "spheres"):
        radius = 0.5 * ref * rng.uniform(size_lo, size_hi)
        rr = sum(x * x for x in d)
        return rr <= radius * radius
    if kind == "rectangles":
        half = np.array([0.5 * ref * rng.uniform(size_lo, size_hi) for _ in range(2)])
        ang = rng.uniform(0.0, np.pi) if rotate else 0.0
        rot = _rot2(-ang)
        u = rot[0, 0] * d[0] + rot[0, 1] * d[1]
        v = rot[1, 0] * d[0] + rot[1, 1] * d[1]
        return (np.abs(u) <= half[0]) & (np.abs(v) <= half[1])
    if kind == "ellipsoids":
        semi = np.array([0.5 * ref * rng.uniform(size_lo, size_hi) for _ in range(3)])
        frame = _random_frame3(rng) if rotate else np.eye(3)
        acc = 0.0
        for row in range(3):
            u = (frame[0, row] * d[0] + frame[1, row] * d[1] + frame[2, row] * d[2]) / semi[row]
            acc = acc + u * u
        return acc <= 1.0
    raise InvalidInput(f"unknown inclusion kind {kind!r}")


def generate_rsa(spec: GenSpec) -> VoxelGrid:
    """Random sequential adsorption onto a periodic voxel grid.

    Deterministic for a fixed spec (seed included).  Placements that would
    overshoot the drawn volume-fraction target by more than the tolerance
    are rejected; if the attempt budget runs out farther than the
    tolerance below the target, GenerationIncomplete is raised with the
    achieved fraction attached.
    """
    rng = rng_from_seed(spec.seed)
    target = float(rng.uniform(*spec.vf_range))
    cells = np.zeros(spec.shape, dtype=np.uint8)
    total = cells.size
    filled = 0
    slo, shi = spec.size_range
    for _ in range(ATTEMPT_BUDGET):
        if filled / total >= target:
            break
        kind = spec.kinds[int(rng.integers(len(spec.kinds)))]
        mask = _rasterize(kind, spec.shape, rng, spec.rotate, slo, shi)
        fresh = mask & (cells == 0)
        n_new = int(np.count_nonzero(fresh))
        if n_new == 0:
            continue
        if not spec.overlap and n_new != int(np.count_nonzero(mask)):
            continue
        if (filled + n_new) / total > target + VF_TOLERANCE:
            continue
        cells[fresh] = 1
        filled += n_new
    achieved = filled / total
    if abs(achieved - target) > VF_TOLERANCE:
        raise GenerationIncomplete(
            f"reached vf {achieved:.4f} of target {target:.4f} within the attempt budget",
            achieved=achieved,
            target=target,
        )
    return VoxelGrid(cells)


def make_laminate(shape, normal_axis, fraction) -> VoxelGrid:
    """Inclusion slab of round(fraction * extent) voxels normal to one axis."""
    shape = tuple(int(n) for n in shape)
    if normal_axis < 0 or normal_axis >= len(shape):
        raise InvalidInput(f"axis {normal_axis} out of range for shape {shape}")
    n = shape[normal_axis]
    k = int(round(fraction * n))
    if k <= 0 or k >= n:
        raise InvalidInput(f"fraction {fraction!r} gives a degenerate {k}-voxel slab")
    cells = np.zeros(shape, dtype=np.uint8)
    sel = [slice(None)] * len(shape)
    sel[normal_axis] = slice(0, k)
    cells[tuple(sel)] = 1
    return VoxelGrid(cells)


def make_checkerboard(shape) -> VoxelGrid:
    """Two-cell-per-period checkerboard; each cell spans half the extent."""
    shape = tuple(int(n) for n in shape)
    if any(n % 2 for n in shape):
        raise InvalidInput(f"checkerboard needs even extents, got {shape}")
    idx = np.indices(shape)
    parity = sum(idx[a] // (shape[a] // 2) for a in range(len(shape))) % 2
    return VoxelGrid((parity == 0).astype(np.uint8))
