"""Vehicle-pair speed-deviation metric and field comparison.

Each traced path carries the speed sequence V_p = (origin speed,
crossing speeds...); the metric pools the signed successive differences
over all paths.  Summary statistics (Table-style rows) are computed on
absolute deviations; histograms keep the sign so the spread around zero
stays visible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .pde import EulerianField
from .tracker import WavePath

__all__ = [
    "DeviationSet",
    "DeviationStats",
    "Histogram",
    "deviation_set",
    "summary_stats",
    "histogram",
    "field_rmse",
]


@dataclass(frozen=True)
class DeviationSet:
    """Signed deviations v_{p,i+1} - v_{p,i} with (path, step) provenance."""

    values: np.ndarray
    path_ids: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DeviationStats:
    mean: float
    median: float
    q1: float
    q3: float
    max: float
    min: float

    def as_row(self) -> Tuple[float, float, float, float, float, float]:
        return (self.mean, self.median, self.q1, self.q3, self.max, self.min)


@dataclass(frozen=True)
class Histogram:
    """Density-normalized bins over signed deviations (integral 1)."""

    bin_centers: np.ndarray
    density: np.ndarray
    bin_width: float


def deviation_set(paths: Sequence[WavePath]) -> DeviationSet:
    """Pool successive speed differences along every path, order kept.

    Paths with fewer than two points (origin plus at least one crossing)
    contribute nothing; an empty pool is legal.
    """
    vals: List[float] = []
    pids: List[int] = []
    idxs: List[int] = []
    for pid, path in enumerate(paths):
        speeds = path.speeds
        for j in range(speeds.size - 1):
            vals.append(float(speeds[j + 1] - speeds[j]))
            pids.append(pid)
            idxs.append(j)
    return DeviationSet(
        values=np.array(vals, dtype=float),
        path_ids=np.array(pids, dtype=int),
        indices=np.array(idxs, dtype=int),
    )


def summary_stats(devs: DeviationSet) -> DeviationStats:
    """Table-row statistics of |deviation|; quartiles by linear interpolation."""
    if len(devs) == 0:
        raise ValueError("cannot summarize an empty deviation set")
    a = np.abs(devs.values)
    q1, med, q3 = np.percentile(a, [25.0, 50.0, 75.0])
    return DeviationStats(
        mean=float(np.mean(a)),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        max=float(np.max(a)),
        min=float(np.min(a)),
    )


def histogram(devs: DeviationSet, bin_width: float = 0.1) -> Histogram:
    """Center-aligned density histogram of the signed deviations.

    Bin centers sit on multiples of the width (a lone zero value lands
    in a bin centered at 0 with density 1/width); the densities
    integrate to one.
    """
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    if len(devs) == 0:
        raise ValueError("cannot bin an empty deviation set")
    x = devs.values
    lo = int(np.round(np.min(x) / bin_width))
    hi = int(np.round(np.max(x) / bin_width))
    edges = (np.arange(lo, hi + 2) - 0.5) * bin_width
    density, _ = np.histogram(x, bins=edges, density=True)
    centers = np.arange(lo, hi + 1) * bin_width
    return Histogram(bin_centers=centers, density=density, bin_width=bin_width)


def field_rmse(a: EulerianField, b: EulerianField, component: str = "v") -> float:
    """Space-time RMSE between two fields on identical grids.

    The mean runs over every (time, cell) sample of the chosen
    component ("v" or "rho").
    """
    if component not in ("v", "rho"):
        raise ValueError("component must be 'v' or 'rho'")
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if a.rho.shape != b.rho.shape or not np.allclose(a.times, b.times, atol=1e-9):
        raise ValueError("fields sampled at different times")
    fa = a.v if component == "v" else a.rho
    fb = b.v if component == "v" else b.rho
    return float(np.sqrt(np.mean((fa - fb) ** 2)))
