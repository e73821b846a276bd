"""Charts, metric laws, metric jets and Chern curvature.

Conventions used everywhere in the package:

* A point of a chart with complex dimension n is a real array of length 2n laid
  out as ``(x_1, ..., x_n, y_1, ..., y_n)`` with ``z_j = x_j + i y_j``.
* ``g[i, j]`` stores ``g_{i jbar} = <d/dz_i, d/dz_j>``; the inner product of two
  (1,0)-vectors is ``<X, Y> = sum g_{i jbar} X^i conj(Y^j)``.
* ``dg[i, j, k] = d g_{i jbar} / dz_k``, ``dbg[i, j, l] = d g_{i jbar} / dzbar_l``
  and ``ddg[i, j, k, l] = d^2 g_{i jbar} / dz_k dzbar_l``.
* Chern curvature ``R_{i jbar k lbar} = -ddg[i,j,k,l] + g^{p qbar} dg[i,q,k] dbg[p,j,l]``.
  With this sign the Fubini-Study metric has ``R_{1 1bar 1 1bar} = 2`` at the
  chart origin, i.e. positive holomorphic sectional curvature.

Every array may carry leading batch dimensions.  When a metric law does not
depend on the point, the batch dimensions collapse to ``()`` and downstream
results broadcast against the requested points.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets as jm
from .errors import NonPositiveMetric, OutOfDomain, RankDeficientSeed
from .jets import Jet

KAHLER_TOL = 1e-9


# --------------------------------------------------------------------------
# charts and models


@dataclass(frozen=True)
class Chart:
    """Coordinate domain of a model.

    ``kind`` is ``"box"`` (``lower <= t <= upper`` componentwise), ``"periodic"``
    (fundamental cell ``[0, period)`` per real axis), ``"annulus"``
    (``r_min <= |z| < r_max``) or ``"product"`` (``parts`` hold the factor charts).
    """

    n: int
    kind: str
    lower: Optional[tuple] = None
    upper: Optional[tuple] = None
    periods: Optional[tuple] = None
    r_min: float = 0.0
    r_max: float = math.inf
    parts: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("complex dimension must be >= 1")
        if self.kind == "box":
            lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
            if lo.shape != (2 * self.n,) or np.any(hi <= lo):
                raise ValueError("box chart needs 2n bounds with upper > lower")
        elif self.kind == "periodic":
            p = np.asarray(self.periods, float)
            if p.shape != (2 * self.n,) or np.any(p <= 0):
                raise ValueError("periodic chart needs 2n positive lattice periods")
        elif self.kind == "annulus":
            if not 0 <= self.r_min < self.r_max:
                raise ValueError("annulus needs 0 <= r_min < r_max")
        elif self.kind == "product":
            if sum(p.n for p in self.parts) != self.n:
                raise ValueError("product chart dimension mismatch")
        else:
            raise ValueError(f"unknown chart kind {self.kind!r}")

    def contains(self, points) -> np.ndarray:
        t = np.asarray(points, float)
        if self.kind == "box":
            return np.all((t >= np.asarray(self.lower)) & (t <= np.asarray(self.upper)), axis=-1)
        if self.kind == "periodic":
            return np.all(np.isfinite(t), axis=-1)
        if self.kind == "annulus":
            r = np.sqrt(np.sum(t * t, axis=-1))
            return (r >= self.r_min * (1 - 1e-12)) & (r < self.r_max)
        ok = np.ones(t.shape[:-1], bool)
        for part, sub in zip(self.parts, split_point(t, [p.n for p in self.parts])):
            ok &= part.contains(sub)
        return ok

    @property
    def is_periodic(self) -> bool:
        if self.kind == "product":
            return all(p.is_periodic for p in self.parts)
        return self.kind == "periodic"

    def cell_periods(self) -> np.ndarray:
        if not self.is_periodic:
            raise ValueError("chart has no periodic cell")
        if self.kind == "periodic":
            return np.asarray(self.periods, float)
        subs = [p.cell_periods() for p in self.parts]
        xs = np.concatenate([s[: p.n] for s, p in zip(subs, self.parts)])
        ys = np.concatenate([s[p.n:] for s, p in zip(subs, self.parts)])
        return np.concatenate([xs, ys])


def split_point(t: np.ndarray, dims: list[int]) -> list[np.ndarray]:
    """Split (..., 2n) real coordinates into per-factor (..., 2n_f) blocks."""
    n = sum(dims)
    out, off = [], 0
    for d in dims:
        out.append(np.concatenate([t[..., off:off + d], t[..., n + off:n + off + d]], axis=-1))
        off += d
    return out


def to_complex(t) -> np.ndarray:
    t = np.asarray(t, float)
    n = t.shape[-1] // 2
    return t[..., :n] + 1j * t[..., n:]


def to_real(z) -> np.ndarray:
    z = np.asarray(z, complex)
    return np.concatenate([z.real, z.imag], axis=-1)


@dataclass(frozen=True)
class MetricLaw:
    """How a model's metric is produced from coordinates.

    ``fn(x, y)`` receives two length-n lists of coordinates (jets or arrays).  For
    ``kind="kahler_potential"`` it returns the real potential; for
    ``kind="explicit_hermitian"`` it returns an n-by-n nested list of entries
    ``g_{i jbar}``.
    """

    kind: str
    fn: Callable
    is_kahler_claimed: bool = False

    def __post_init__(self):
        if self.kind not in ("kahler_potential", "explicit_hermitian"):
            raise ValueError(f"unknown metric law kind {self.kind!r}")


@dataclass(frozen=True)
class ManifoldModel:
    name: str
    chart: Chart
    law: Optional[MetricLaw]
    params: dict = field(default_factory=dict, compare=False)
    factors: tuple = ()

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def is_kahler_claimed(self) -> bool:
        if self.factors:
            return all(f.is_kahler_claimed for f in self.factors)
        return self.law.is_kahler_claimed

    @property
    def supports_quadrature(self) -> bool:
        return self.chart.is_periodic


# --------------------------------------------------------------------------
# Wirtinger extraction


@functools.lru_cache(maxsize=None)
def _wirtinger_matrix(n: int, order: int, pattern: tuple) -> np.ndarray:
    """Matrix taking Taylor coefficients (over 2n real vars) to Wirtinger derivatives.

    ``pattern`` is a tuple of ``"z"``/``"b"`` (d/dz or d/dzbar per slot); the rows
    are indexed by the flattened complex index tuple.
    """
    alg = jm.algebra(2 * n, order)
    rank = len(pattern)
    idx, fac = alg.tensor_map(rank)
    mat = np.zeros((n**rank, alg.ncoef), dtype=complex)
    half = {"z": (0.5, -0.5j), "b": (0.5, 0.5j)}
    for row, cidx in enumerate(itertools.product(range(n), repeat=rank)):
        for choice in itertools.product((0, 1), repeat=rank):
            w = 1.0 + 0j
            real_idx = []
            for slot, (i, c) in enumerate(zip(cidx, choice)):
                w *= half[pattern[slot]][c]
                real_idx.append(i + c * n)
            real_idx = tuple(real_idx)
            mat[row, idx[real_idx]] += w * fac[real_idx]
    return mat


def wirtinger(jet: Jet, n: int, pattern: tuple) -> np.ndarray:
    """Wirtinger derivatives of a scalar jet, shape (*batch, n, ..., n)."""
    mat = _wirtinger_matrix(n, jet.alg.order, tuple(pattern))
    batch = jet.batch_shape
    flat = mat @ jet.c.reshape(jet.alg.ncoef, -1)
    out = flat.reshape((n,) * len(pattern) + batch)
    return np.moveaxis(out, tuple(range(len(pattern))), tuple(range(-len(pattern), 0)))


# --------------------------------------------------------------------------
# metric jets


@dataclass
class MetricJet:
    g: np.ndarray
    ginv: np.ndarray
    dg: np.ndarray
    dbg: np.ndarray
    ddg: np.ndarray

    @property
    def n(self) -> int:
        return self.g.shape[-1]

    @property
    def cometric(self) -> np.ndarray:
        """``g^{i jbar}`` indexed ``[i, j]`` (satisfies ``g^{i jbar} g_{k jbar} = delta``)."""
        return np.swapaxes(self.ginv, -1, -2)


def _check_domain(model: ManifoldModel, t: np.ndarray):
    if not np.all(model.chart.contains(t)):
        raise OutOfDomain(f"point outside the chart domain of {model.name}")


def _validate_metric(g: np.ndarray, name: str):
    if not np.allclose(g, np.conj(np.swapaxes(g, -1, -2)), rtol=1e-10, atol=1e-12):
        raise NonPositiveMetric(f"{name}: metric is not Hermitian")
    w = np.linalg.eigvalsh(g)
    if np.any(w <= 0):
        raise NonPositiveMetric(f"{name}: metric has a non-positive eigenvalue ({w.min():.3g})")


def _entries_to_arrays(entries, n: int, parts: tuple):
    """Evaluate Wirtinger patterns on an n-by-n nested list of jets/constants."""
    outs = []
    for pattern in parts:
        vals = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                e = entries[i][j]
                if isinstance(e, Jet):
                    vals[i][j] = wirtinger(e, n, pattern) if pattern else e.value
                else:
                    vals[i][j] = np.zeros((n,) * len(pattern)) if pattern else np.asarray(e, complex)
        shape = np.broadcast_shapes(*[np.shape(v)[: np.ndim(v) - len(pattern)]
                                      for row in vals for v in row])
        arr = np.empty(shape + (n, n) + (n,) * len(pattern), dtype=complex)
        for i in range(n):
            for j in range(n):
                v = np.asarray(vals[i][j])
                arr[(Ellipsis, i, j) + (slice(None),) * len(pattern)] = np.broadcast_to(
                    v, shape + (n,) * len(pattern))
        outs.append(arr)
    return outs


def _single_jet(model: ManifoldModel, t: np.ndarray) -> MetricJet:
    n = model.n
    law = model.law
    if law.kind == "kahler_potential":
        seeds = Jet.seed(t, 4)
        phi = law.fn(seeds[:n], seeds[n:])
        if not isinstance(phi, Jet):
            phi = Jet.constant(jm.algebra(2 * n, 4), phi)
        g = wirtinger(phi, n, ("z", "b"))
        dg = wirtinger(phi, n, ("z", "b", "z"))
        dbg = wirtinger(phi, n, ("z", "b", "b"))
        ddg = wirtinger(phi, n, ("z", "b", "z", "b"))
    else:
        seeds = Jet.seed(t, 2)
        entries = law.fn(seeds[:n], seeds[n:])
        g, dg, dbg, ddg = _entries_to_arrays(entries, n, ((), ("z",), ("b",), ("z", "b")))
    # Hermitian symmetrisation removes round-off asymmetry only
    g = 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))
    _validate_metric(g, model.name)
    return MetricJet(g=g, ginv=np.linalg.inv(g), dg=dg, dbg=dbg, ddg=ddg)


def _block_assemble(parts: list[MetricJet], dims: list[int]) -> MetricJet:
    n = sum(dims)
    shape = np.broadcast_shapes(*[p.g.shape[:-2] for p in parts])
    g = np.zeros(shape + (n, n), complex)
    dg = np.zeros(shape + (n, n, n), complex)
    dbg = np.zeros(shape + (n, n, n), complex)
    ddg = np.zeros(shape + (n, n, n, n), complex)
    off = 0
    for p, d in zip(parts, dims):
        s = slice(off, off + d)
        g[..., s, s] = p.g
        dg[..., s, s, s] = p.dg
        dbg[..., s, s, s] = p.dbg
        ddg[..., s, s, s, s] = p.ddg
        off += d
    return MetricJet(g=g, ginv=np.linalg.inv(g), dg=dg, dbg=dbg, ddg=ddg)


def metric_jet(model: ManifoldModel, point) -> MetricJet:
    """Metric, inverse and first/mixed-second Wirtinger derivatives at ``point``.

    ``point`` has shape (..., 2n).  Derivatives come from truncated Taylor jets
    over the real coordinates (order 4 for potentials, order 2 for explicit laws).
    """
    t = np.asarray(point, float)
    if t.shape[-1] != 2 * model.n:
        raise ValueError(f"expected points with {2 * model.n} real coordinates")
    _check_domain(model, t)
    if model.factors:
        dims = [f.n for f in model.factors]
        parts = [metric_jet(f, sub) for f, sub in zip(model.factors, split_point(t, dims))]
        return _block_assemble(parts, dims)
    return _single_jet(model, t)


def metric_value(model: ManifoldModel, point) -> np.ndarray:
    """Only the metric matrix; cheaper than :func:`metric_jet`."""
    t = np.asarray(point, float)
    _check_domain(model, t)
    n = model.n
    if model.factors:
        dims = [f.n for f in model.factors]
        blocks = [metric_value(f, sub) for f, sub in zip(model.factors, split_point(t, dims))]
        shape = np.broadcast_shapes(*[b.shape[:-2] for b in blocks])
        g = np.zeros(shape + (n, n), complex)
        off = 0
        for b, d in zip(blocks, dims):
            g[..., off:off + d, off:off + d] = b
            off += d
        return g
    law = model.law
    if law.kind == "kahler_potential":
        seeds = Jet.seed(t, 2)
        phi = law.fn(seeds[:n], seeds[n:])
        g = wirtinger(phi, n, ("z", "b"))
    else:
        x = [t[..., i] for i in range(n)]
        y = [t[..., n + i] for i in range(n)]
        entries = law.fn(x, y)
        shape = t.shape[:-1]
        g = np.empty(shape + (n, n), complex)
        for i in range(n):
            for j in range(n):
                g[..., i, j] = np.broadcast_to(entries[i][j], shape)
    g = 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))
    _validate_metric(g, model.name)
    return g


# --------------------------------------------------------------------------
# curvature


@dataclass
class CurvatureTensor:
    """Chern curvature components ``R[i, j, k, l] = R_{i jbar k lbar}`` with the metric they belong to."""

    R: np.ndarray
    g: np.ndarray

    @property
    def n(self) -> int:
        return self.g.shape[-1]

    @property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    def __call__(self, X, Y, Z, W) -> np.ndarray:
        """R(X, Ybar, Z, Wbar)."""
        return np.einsum("...ijkl,...i,...j,...k,...l->...", self.R, X, np.conj(Y), Z, np.conj(W))

    def in_frame(self, E: np.ndarray) -> np.ndarray:
        """Components R(e_a, ebar_b, e_c, ebar_d) in the frame whose columns are ``E``."""
        Ec = np.conj(E)
        return np.einsum("...ijkl,...ia,...jb,...kc,...ld->...abcd", self.R, E, Ec, E, Ec)

    def conjugation_defect(self) -> float:
        """max |R_{i jbar k lbar} - conj(R_{j ibar l kbar})|."""
        return float(np.max(np.abs(self.R - np.conj(np.transpose(self.R, _swap_axes(self.R))))))

    def kahler_defect(self) -> float:
        """max deviation from R_{i jbar k lbar} = R_{k jbar i lbar} = R_{i lbar k jbar}."""
        R = self.R
        nd = R.ndim
        b = tuple(range(nd - 4))
        i, j, k, l = nd - 4, nd - 3, nd - 2, nd - 1
        first = np.transpose(R, b + (k, j, i, l))
        second = np.transpose(R, b + (i, l, k, j))
        return float(max(np.max(np.abs(R - first)), np.max(np.abs(R - second))))


def _swap_axes(R: np.ndarray) -> tuple:
    nd = R.ndim
    b = tuple(range(nd - 4))
    return b + (nd - 3, nd - 4, nd - 1, nd - 2)


def chern_curvature(jet: MetricJet) -> CurvatureTensor:
    quad = np.einsum("...pq,...iqk,...pjl->...ijkl", jet.cometric, jet.dg, jet.dbg)
    return CurvatureTensor(R=quad - jet.ddg, g=jet.g)


def kahler_check(model: ManifoldModel, sample) -> tuple[bool, float]:
    """Closedness of the Kähler form at sample points: ``d_k g_{i jbar} = d_i g_{k jbar}``."""
    jet = metric_jet(model, sample)
    dg = jet.dg
    worst = float(np.max(np.abs(dg - np.swapaxes(dg, -1, -3)))) if dg.size else 0.0
    return worst < KAHLER_TOL, worst


# --------------------------------------------------------------------------
# frames


@dataclass
class UnitaryFrame:
    """Columns of ``E`` are g-orthonormal (1,0)-vectors at one point."""

    E: np.ndarray
    g: np.ndarray

    def defect(self) -> float:
        gram = np.swapaxes(self.E, -1, -2) @ self.g @ np.conj(self.E)
        return float(np.max(np.abs(gram - np.eye(self.E.shape[-1]))))


def inner(g, X, Y) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", X, g, np.conj(Y))


def norm_sq(g, X) -> np.ndarray:
    return inner(g, X, X).real


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """A g-unitary frame (batched) from the Cholesky factor of conj(g)."""
    L = np.linalg.cholesky(np.conj(g))
    eye = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    Linv = np.linalg.solve(L, eye)
    return np.conj(np.swapaxes(Linv, -1, -2))


def gram_schmidt_frame(g, seed) -> UnitaryFrame:
    """Modified Gram-Schmidt of the seed's columns in the g inner product."""
    if isinstance(g, MetricJet):
        g = g.g
    g = np.asarray(g, complex)
    seed = np.array(seed, dtype=complex)
    n = g.shape[-1]
    k = seed.shape[-1]
    scale = max(1.0, float(np.max(np.abs(seed))))
    E = np.zeros_like(seed)
    for a in range(k):
        v = seed[:, a].copy()
        for _ in range(2):
            for b in range(a):
                v = v - inner(g, v, E[:, b]) * E[:, b]
        nrm = math.sqrt(max(norm_sq(g, v), 0.0))
        if nrm < 1e-12 * scale:
            raise RankDeficientSeed(f"seed column {a} is dependent on the previous ones")
        E[:, a] = v / nrm
    if k != n:
        return UnitaryFrame(E=E, g=g)
    return UnitaryFrame(E=E, g=g)
