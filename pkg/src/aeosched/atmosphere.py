"""Cloud and turbulence grids and the capture suitability test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import GroundPoint

CN2_RANGE = (1e-17, 1e-13)


class GridDomainError(ValueError):
    """A lookup fell outside a grid; the scenario generator sized the grid wrong."""


@dataclass(frozen=True)
class QualityThresholds:
    delta_max: float = 0.25
    cn2_max: float = 5e-15

    def __post_init__(self):
        if not 0.0 < self.delta_max <= 1.0:
            raise ValueError("delta_max must lie in (0, 1]")
        if not self.cn2_max > 0.0:
            raise ValueError("cn2_max must be positive")


@dataclass(frozen=True, eq=False)
class _Grid:
    cell_size_km: float
    origin: GroundPoint  # lower-left corner (min along-track, min cross-track)
    altitude_km: float
    cells: np.ndarray  # shape (n_along, n_cross), row-major

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x0, x1, y0, y1) of the covered ground area, km."""
        x0, y0 = self.origin.along_track_km, self.origin.cross_track_km
        nx, ny = self.cells.shape
        return x0, x0 + nx * self.cell_size_km, y0, y0 + ny * self.cell_size_km

    def cell_index(self, p: GroundPoint) -> tuple[int, int]:
        # floor indexing: a point on a shared edge belongs to the upper cell
        i = math.floor((p.along_track_km - self.origin.along_track_km) / self.cell_size_km)
        j = math.floor((p.cross_track_km - self.origin.cross_track_km) / self.cell_size_km)
        nx, ny = self.cells.shape
        if not (0 <= i < nx and 0 <= j < ny):
            raise GridDomainError(f"point {p} outside grid extent {self.extent}")
        return i, j

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.cell_size_km == other.cell_size_km
            and self.origin == other.origin
            and self.altitude_km == other.altitude_km
            and self.cells.dtype == other.cells.dtype
            and np.array_equal(self.cells, other.cells)
        )


@dataclass(frozen=True, eq=False)
class CloudGrid(_Grid):
    @property
    def coverage_fraction(self) -> float:
        return float(np.count_nonzero(self.cells)) / self.cells.size


@dataclass(frozen=True, eq=False)
class TurbulenceGrid(_Grid):
    def exceed_fraction(self, cn2_max: float) -> float:
        return float(np.count_nonzero(self.cells > cn2_max)) / self.cells.size


def _dilate4(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def grow_clusters(
    shape: tuple[int, int],
    fraction: float,
    rng: np.random.Generator,
    mean_cluster_cells: int = 64,
    accept_prob: float = 0.5,
) -> np.ndarray:
    """Boolean mask with exactly ``round(fraction * size)`` true cells grown as 4-connected blobs.

    Seeds are scattered uniformly, then every round each empty cell adjacent
    to a cloud joins it with probability ``accept_prob``. The last round draws
    exactly the number of cells still missing.
    """
    n = shape[0] * shape[1]
    k = int(round(fraction * n))
    mask = np.zeros(shape, dtype=bool)
    if k == 0:
        return mask
    n_seeds = max(1, min(k, int(round(k / mean_cluster_cells))))
    mask.flat[rng.choice(n, size=n_seeds, replace=False)] = True
    count = n_seeds
    while count < k:
        frontier = np.flatnonzero(_dilate4(mask) & ~mask)
        need = k - count
        take = frontier[rng.random(frontier.size) < accept_prob]
        if take.size >= need:
            take = rng.choice(frontier, size=need, replace=False)
        mask.flat[take] = True
        count += take.size
    return mask


def generate_cloud_grid(
    origin: GroundPoint,
    shape: tuple[int, int],
    rng: np.random.Generator,
    p_clouds: float,
    cell_size_km: float = 2.0,
    altitude_km: float = 10.0,
) -> CloudGrid:
    cells = grow_clusters(shape, p_clouds, rng)
    return CloudGrid(cell_size_km, origin, altitude_km, cells)


def generate_turbulence_grid(
    origin: GroundPoint,
    shape: tuple[int, int],
    rng: np.random.Generator,
    p_exceed: float,
    cn2_max: float = 5e-15,
    cell_size_km: float = 10.0,
    altitude_km: float = 20.0,
) -> TurbulenceGrid:
    """Independent log-uniform C_n^2 cells; exactly ``round(p_exceed * size)`` exceed ``cn2_max``."""
    n = shape[0] * shape[1]
    k = int(round(p_exceed * n))
    lo, hi = math.log10(CN2_RANGE[0]), math.log10(CN2_RANGE[1])
    mid = math.log10(cn2_max)
    exceed = np.zeros(n, dtype=bool)
    exceed[rng.permutation(n)[:k]] = True
    u = rng.random(n)
    # below: [lo, mid) ; above: (mid, hi]
    logv = np.where(exceed, hi - (hi - mid) * u, lo + (mid - lo) * u)
    cells = (10.0 ** logv).reshape(shape)
    return TurbulenceGrid(cell_size_km, origin, altitude_km, cells)


def _axis_overlap(lo: float, hi: float, origin: float, size: float, n: int):
    # index range and per-cell overlap length of [lo, hi] with a regular 1-D grid
    if lo < origin or hi > origin + n * size:
        raise GridDomainError("footprint extends outside the grid")
    i0 = max(0, math.floor((lo - origin) / size))
    i1 = min(n, math.ceil((hi - origin) / size))
    edges = origin + size * np.arange(i0, i1 + 1)
    ov = np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo)
    return i0, i1, np.clip(ov, 0.0, None)


def cloud_fraction(grid: CloudGrid, target: GroundPoint, target_size_km: float) -> float:
    """Area fraction of the square footprint centred on ``target`` that lies under cloudy cells."""
    half = 0.5 * target_size_km
    x, y = target.along_track_km, target.cross_track_km
    nx, ny = grid.cells.shape
    i0, i1, ox = _axis_overlap(x - half, x + half, grid.origin.along_track_km, grid.cell_size_km, nx)
    j0, j1, oy = _axis_overlap(y - half, y + half, grid.origin.cross_track_km, grid.cell_size_km, ny)
    covered = ox @ grid.cells[i0:i1, j0:j1].astype(float) @ oy
    return float(min(1.0, max(0.0, covered / (target_size_km * target_size_km))))


def cn2_at(grid: TurbulenceGrid, target: GroundPoint) -> float:
    i, j = grid.cell_index(target)
    return float(grid.cells[i, j])


def suitability(cn2: float, delta: float, thr: QualityThresholds) -> int:
    """1 when turbulence is at most the limit and cloud cover is strictly below it."""
    return int(cn2 <= thr.cn2_max and delta < thr.delta_max)


def line_of_sight_point(
    target: GroundPoint, sat_along_km: float, layer_altitude_km: float, sat_altitude_km: float
) -> GroundPoint:
    """Ground projection of where the target-to-satellite ray crosses a layer."""
    k = layer_altitude_km / sat_altitude_km
    return GroundPoint(
        target.along_track_km + k * (sat_along_km - target.along_track_km),
        target.cross_track_km - k * target.cross_track_km,
    )
