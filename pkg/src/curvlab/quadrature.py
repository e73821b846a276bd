"""Sample sets and periodic quadrature on torus cells.

The trapezoid rule on a full lattice period is spectrally accurate for smooth
periodic integrands, so grid doubling gives an honest error estimate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy.stats import qmc

from .errors import NotTorusModel
from .geometry import ManifoldModel


@dataclass
class ScanGrid:
    points: np.ndarray  # (npts, 2n)
    weights: Optional[np.ndarray] = None
    kind: str = "sampled"

    def __len__(self):
        return self.points.shape[0]


def _require_torus(model: ManifoldModel):
    if not model.supports_quadrature:
        raise NotTorusModel(f"{model.name} has no periodic cell; global quadrature needs a torus model")


def axis_resolutions(model: ManifoldModel, resolution) -> list[int]:
    """Points per real axis; ``resolution`` is an int or one int per real coordinate."""
    dim = 2 * model.n
    if np.ndim(resolution) == 0:
        return [int(resolution)] * dim
    res = [int(r) for r in resolution]
    if len(res) != dim:
        raise ValueError(f"expected {dim} per-axis resolutions")
    return res


def torus_axes(model: ManifoldModel, resolution) -> list[np.ndarray]:
    _require_torus(model)
    periods = model.chart.cell_periods()
    return [np.arange(N) * (p / N) for N, p in zip(axis_resolutions(model, resolution), periods)]


def cell_volume(model: ManifoldModel) -> float:
    """Coordinate (Lebesgue) volume of the periodic cell."""
    return float(np.prod(model.chart.cell_periods()))


def tensor_grid(model: ManifoldModel, resolution: int) -> ScanGrid:
    """Full tensor trapezoid grid with N points per real axis; weights sum to the cell volume."""
    axes = torus_axes(model, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    w = np.full(pts.shape[0], cell_volume(model) / pts.shape[0])
    return ScanGrid(points=pts, weights=w, kind="tensor")


def iter_tensor_grid(model: ManifoldModel, resolution, chunk: int = 1 << 18) -> Iterator[np.ndarray]:
    """Tensor grid points in lexicographic order, yielded in chunks (bounded memory)."""
    axes = torus_axes(model, resolution)
    dim = len(axes)
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape))
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.stack(np.unravel_index(flat, shape), axis=-1)
        yield np.stack([axes[d][idx[:, d]] for d in range(dim)], axis=-1)


def sampled_grid(model: ManifoldModel, count: int, seed: int = 0) -> ScanGrid:
    """Low-discrepancy (scrambled Halton) points inside the chart domain."""
    from .models import sample_points

    chart = model.chart
    n = model.n
    if chart.kind == "periodic":
        u = qmc.Halton(d=2 * n, scramble=True, seed=seed).random(count)
        return ScanGrid(points=u * np.asarray(chart.periods), kind="halton")
    if chart.kind == "box":
        u = qmc.Halton(d=2 * n, scramble=True, seed=seed).random(count)
        lo, hi = np.asarray(chart.lower), np.asarray(chart.upper)
        mid, half = (lo + hi) / 2, (hi - lo) / 2 * 0.9
        return ScanGrid(points=mid + half * (2 * u - 1), kind="halton")
    return ScanGrid(points=sample_points(model, count, np.random.default_rng(seed)), kind="random")


def make_grid(model: ManifoldModel, resolution: int = 4, samples: int = 16, seed: int = 0) -> ScanGrid:
    if model.supports_quadrature:
        return tensor_grid(model, resolution)
    return sampled_grid(model, samples, seed)


def pairwise_sum(values: np.ndarray) -> float:
    """Tree summation with a fixed association order (reproducible rounding)."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return 0.0
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0])


def orbit_axis(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Orbit representatives of the grid (Z/N)^2 under the rotation (x, y) -> (-y, x).

    This is the action of ``z -> i z`` on one complex coordinate of the unit
    lattice.  Returns representative index pairs (r, 2) and orbit sizes.
    """
    N = resolution
    seen = np.zeros((N, N), bool)
    reps, sizes = [], []
    for i, j in itertools.product(range(N), repeat=2):
        if seen[i, j]:
            continue
        orbit = set()
        a, b = i, j
        for _ in range(4):
            orbit.add((a, b))
            a, b = (-b) % N, a
        for a, b in orbit:
            seen[a, b] = True
        reps.append((i, j))
        sizes.append(len(orbit))
    return np.asarray(reps), np.asarray(sizes, dtype=float)


def richardson_error(fine: float, coarse: float, floor: float = 0.0) -> float:
    """Grid-doubling error estimate; spectral convergence makes |Q_N - Q_{N/2}| an upper bound."""
    return abs(fine - coarse) + floor


def rounding_floor(scale: float, count: int) -> float:
    return 64 * np.finfo(float).eps * abs(scale) * math.log2(max(count, 2))
