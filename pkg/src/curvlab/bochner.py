"""Integral Bochner identities and Stokes checks on torus models.

Everything here is a quadrature over the periodic cell with the trapezoid rule,
whose error for smooth periodic integrands decays faster than any power of the
resolution.  Grid doubling therefore gives a usable error estimate.

Volume element: ``dV = det(g) dx dy`` (the constant 2^n relating it to
``omega^n / n!`` is common to every integral and dropped).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets as jm
from .errors import NotKahler, WrongDimension
from .forms import (ExtForm, FormField, beta_form, form_inner_11, multi_indices,
                    omega_form, top_form_unit, trace_11)
from .functionals import scalar_curvature
from .geometry import ManifoldModel, MetricJet, chern_curvature, kahler_check, metric_jet
from .jets import Jet
from .models import perturbed_torus_scale
from .quadrature import (_require_torus, cell_volume, iter_tensor_grid, orbit_axis, pairwise_sum,
                         rounding_floor, torus_axes)

CHUNK = 1 << 15


# --------------------------------------------------------------------------
# first-order-plus-mixed Wirtinger jets


@dataclass
class WJet:
    """Scalar field with value, d/dz_k, d/dzbar_l and d_k dbar_l at a batch of points."""

    val: np.ndarray  # (B,)
    d: np.ndarray  # (B, n)
    db: np.ndarray  # (B, n)
    dd: np.ndarray  # (B, n, n), [k, l] = d_k dbar_l

    def __add__(self, o: "WJet") -> "WJet":
        return WJet(self.val + o.val, self.d + o.d, self.db + o.db, self.dd + o.dd)

    def __sub__(self, o: "WJet") -> "WJet":
        return WJet(self.val - o.val, self.d - o.d, self.db - o.db, self.dd - o.dd)

    def scale(self, c) -> "WJet":
        return WJet(c * self.val, c * self.d, c * self.db, c * self.dd)

    def __mul__(self, o: "WJet") -> "WJet":
        a, b = self, o
        av, bv = a.val[:, None], b.val[:, None]
        dd = (av[..., None] * b.dd + bv[..., None] * a.dd
              + a.d[:, :, None] * b.db[:, None, :] + b.d[:, :, None] * a.db[:, None, :])
        return WJet(a.val * b.val, av * b.d + bv * a.d, av * b.db + bv * a.db, dd)


@dataclass
class MetricDerivs:
    G: np.ndarray  # (B, n, n)
    dG: np.ndarray  # (B, n, n, k)
    dbG: np.ndarray  # (B, n, n, l)
    ddG: np.ndarray  # (B, n, n, k, l)


def _trig_tables(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """d_z^a d_zbar^b (cos 2 pi x + cos 2 pi y) for a, b <= 2, shape (3, 3, *x.shape)."""
    ex, ey = np.exp(2j * np.pi * x), np.exp(2j * np.pi * y)
    pi = np.pi
    T = np.empty((3, 3) + np.shape(x), complex)
    for a in range(3):
        for b in range(3):
            T[a, b] = 0.5 * ((1j * pi) ** (a + b) * ex + (-1j * pi) ** (a + b) / ex
                             + pi**a * (-pi) ** b * ey + (-pi) ** a * pi**b / ey)
    return T


def _perturbed_derivs(eps: float, c: float, tables: list[np.ndarray], shape: tuple) -> MetricDerivs:
    """Closed-form metric derivatives of the perturbed torus from per-coordinate tables."""
    n = len(tables)
    B = int(np.prod(shape))

    def entry(A, Bc):
        out = tables[0][A[0], Bc[0]]
        for m in range(1, n):
            out = out * tables[m][A[m], Bc[m]]
        return np.broadcast_to(eps * out, shape).reshape(B)

    def unit(*idx):
        v = [0] * n
        for i in idx:
            v[i] += 1
        return v

    G = np.empty((B, n, n), complex)
    dG = np.empty((B, n, n, n), complex)
    dbG = np.empty((B, n, n, n), complex)
    ddG = np.empty((B, n, n, n, n), complex)
    for i, j in itertools.product(range(n), repeat=2):
        G[:, i, j] = entry(unit(i), unit(j)) + (c if i == j else 0.0)
        for k in range(n):
            dG[:, i, j, k] = entry(unit(i, k), unit(j))
            dbG[:, i, j, k] = entry(unit(i), unit(j, k))
            for l in range(n):
                ddG[:, i, j, k, l] = entry(unit(i, k), unit(j, l))
    return MetricDerivs(G, dG, dbG, ddG)


def _jet_derivs(model: ManifoldModel, pts: np.ndarray) -> MetricDerivs:
    jet = metric_jet(model, pts)
    B = pts.shape[0]
    n = model.n

    def bc(a, tail):
        return np.broadcast_to(a, (B,) + (n,) * tail)

    return MetricDerivs(bc(jet.g, 2), bc(jet.dg, 3), bc(jet.dbg, 3), bc(jet.ddg, 4))


def _is_fast(model: ManifoldModel) -> bool:
    return model.name == "perturbed_torus" and not model.factors


# --------------------------------------------------------------------------
# integrands


def _inverse_jets(M: MetricDerivs):
    """Derivatives of g^{-1}, laid out (B, n, n), (B, k, n, n), (B, l, n, n), (B, k, l, n, n)."""
    Gi = np.linalg.inv(M.G)
    dG = np.moveaxis(M.dG, -1, 1)
    dbG = np.moveaxis(M.dbG, -1, 1)
    ddG = np.moveaxis(M.ddG, (-2, -1), (1, 2))
    Gk = Gi[:, None]
    dGi = -(Gk @ dG @ Gk)
    dbGi = -(Gk @ dbG @ Gk)
    a = (dG @ Gk)[:, :, None] @ dbG[:, None, :]
    b = (dbG @ Gk)[:, None, :] @ dG[:, :, None]
    Gkl = Gi[:, None, None]
    ddGi = Gkl @ (a + b - ddG) @ Gkl
    return Gi, dGi, dbGi, ddGi


def _det_jet(H: list, rows, cols) -> WJet:
    p = len(rows)
    total = None
    for perm in itertools.permutations(range(p)):
        sign = (-1) ** sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        term = H[rows[0]][cols[perm[0]]]
        for s in range(1, p):
            term = term * H[rows[s]][cols[perm[s]]]
        term = term.scale(float(sign))
        total = term if total is None else total + term
    return total


def norm_squared_jet(coeffs: np.ndarray, M: MetricDerivs, p: int) -> WJet:
    """|eta|^2_g with its Wirtinger derivatives for constant coefficients ``coeffs``."""
    n = M.G.shape[-1]
    Gi, dGi, dbGi, ddGi = _inverse_jets(M)
    # cometric H[i][j] = Ginv[j, i]
    H = [[WJet(Gi[:, j, i], dGi[:, :, j, i], dbGi[:, :, j, i], ddGi[:, :, :, j, i]) for j in range(n)]
         for i in range(n)]
    idx = multi_indices(n, p)
    nz = [a for a in range(len(idx)) if coeffs[a] != 0]
    total = None
    for a in nz:
        for b in nz:
            term = _det_jet(H, idx[a], idx[b]).scale(coeffs[a] * np.conj(coeffs[b]))
            total = term if total is None else total + term
    if total is None:
        B = M.G.shape[0]
        return WJet(np.zeros(B), np.zeros((B, n)), np.zeros((B, n)), np.zeros((B, n, n)))
    return total


def bochner_integrands(coeffs: np.ndarray, M: MetricDerivs, p: int) -> np.ndarray:
    """Pointwise (Delta f f, p <i ddbar f, beta>, -|d f|^2) times det g, shape (3, B)."""
    f = norm_squared_jet(coeffs, M, p)
    G = M.G
    vol = np.linalg.det(G).real
    F = f.dd
    lap = trace_11(F, G).real
    beta = beta_form(np.broadcast_to(coeffs, G.shape[:1] + coeffs.shape), G, p).coord
    pair = form_inner_11(F, beta, G).real
    grad = np.einsum("bk,bkl,bl->b", f.d, np.linalg.inv(G).swapaxes(-1, -2), np.conj(f.d)).real
    return np.stack([lap * f.val.real * vol, p * pair * vol, -grad * vol])


# --------------------------------------------------------------------------
# integral Bochner equality


@dataclass
class BochnerIntegrals:
    I1: float
    I2: float
    I3: float
    coarse: tuple
    error: float
    residual_12: float
    residual_13: float
    resolution: int
    points: int
    passed: bool
    provenance: str = "quadrature"

    @property
    def scale(self) -> float:
        return max(abs(self.I1), abs(self.I2), abs(self.I3))


def _symmetric_axes(coeffs: np.ndarray, n: int, p: int) -> list[bool]:
    """Coordinates j for which z_j -> i z_j multiplies eta by a phase."""
    idx = [I for I, c in zip(multi_indices(n, p), coeffs) if c != 0]
    return [len({j in I for I in idx}) <= 1 for j in range(n)]


def _permuted(coeffs: np.ndarray, n: int, p: int, perm) -> np.ndarray:
    """Coefficients of the pull-back of eta under z_j -> z_{perm[j]}."""
    idx = multi_indices(n, p)
    pos = {I: a for a, I in enumerate(idx)}
    out = np.zeros_like(coeffs)
    for a, I in enumerate(idx):
        img = [perm[i] for i in I]
        sign = (-1) ** sum(1 for u, v in itertools.combinations(img, 2) if u > v)
        out[a] = sign * coeffs[pos[tuple(sorted(img))]]
    return out


def _permutation_blocks(coeffs: np.ndarray, n: int, p: int, sym: list[bool]) -> list[list[int]]:
    """Blocks of coordinates whose full permutation groups preserve eta up to a phase.

    The potential is symmetric under any coordinate permutation, so such blocks
    can be integrated over sorted index tuples with multinomial weights.
    """
    def preserves(perm):
        img = _permuted(coeffs, n, p, perm)
        k = np.argmax(np.abs(coeffs))
        if coeffs[k] == 0:
            return True
        ph = img[k] / coeffs[k]
        return abs(abs(ph) - 1) < 1e-14 and np.allclose(img, ph * coeffs, rtol=0, atol=1e-14)

    parent = list(range(n))
    for i, j in itertools.combinations(range(n), 2):
        perm = list(range(n))
        perm[i], perm[j] = j, i
        if sym[i] == sym[j] and preserves(perm):
            parent[j] = parent[i] = min(parent[i], parent[j])
    blocks: dict = {}
    for j in range(n):
        r = j
        while parent[r] != r:
            r = parent[r]
        blocks.setdefault(r, []).append(j)
    out = list(blocks.values())
    # the whole product of symmetric groups must act; otherwise give up on it
    for perm in itertools.product(*[list(itertools.permutations(b)) for b in out]):
        full = list(range(n))
        for b, pb in zip(out, perm):
            for src, dst in zip(b, pb):
                full[src] = dst
        if not preserves(full):
            return [[j] for j in range(n)]
    return out


def _axis_points(N: int, reduce: bool):
    if reduce:
        reps, sizes = orbit_axis(N)
        return reps / N, sizes
    ii, jj = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    return np.stack([ii.ravel(), jj.ravel()], -1) / N, np.ones(N * N)


def _outer_slices(axes, blocks):
    """Per index of coordinate 0: the (P, n) table indices and weights of the reduced grid."""
    n = len(axes)
    sizes = [len(a[1]) for a in axes]
    inner = np.stack(np.meshgrid(*[np.arange(s) for s in sizes[1:]], indexing="ij"), -1).reshape(-1, n - 1)
    for r0 in range(sizes[0]):
        full = np.concatenate([np.full((inner.shape[0], 1), r0), inner], axis=1)
        keep = np.ones(full.shape[0], bool)
        w = np.ones(full.shape[0])
        for b in blocks:
            sub = full[:, b]
            if len(b) > 1:
                keep &= np.all(np.diff(sub, axis=1) >= 0, axis=1)
                # distinct orderings of a sorted tuple: k! / prod(multiplicities!)
                mult = np.ones(full.shape[0])
                for q in range(len(b)):
                    mult *= np.sum(sub[:, q:q + 1] == sub[:, :q + 1], axis=1)
                w *= math.factorial(len(b)) / mult
        for m in range(n):
            w = w * axes[m][1][full[:, m]]
        yield full[keep], w[keep]


def _kernel_indices(coeffs: np.ndarray, n: int, p: int):
    idx = multi_indices(n, p)
    nz = [a for a in range(len(idx)) if coeffs[a] != 0]
    nzI = np.array([idx[a] for a in nz], np.int64).reshape(len(nz), p)
    nzc = np.array([coeffs[a] for a in nz], complex)
    perms = list(itertools.permutations(range(p)))
    psign = np.array([(-1.0) ** sum(1 for a, b in itertools.combinations(q, 2) if a > b) for q in perms])
    bi, bK, bc = [], [], []
    for I, cI in zip(nzI, nzc):
        for s in range(p):
            bi.append(I[s])
            bK.append(list(I[:s]) + list(I[s + 1:]))
            bc.append(cI * (-1) ** s)
    return (nzI, nzc, np.array(perms, np.int64).reshape(len(perms), p), psign,
            np.array(bi, np.int64), np.array(bK, np.int64).reshape(len(bi), p - 1), np.array(bc, complex))


def _fast_quadrature(model: ManifoldModel, coeffs: np.ndarray, p: int, N: int,
                     use_symmetry: bool, engine: str = "numba") -> tuple[np.ndarray, int]:
    n = model.n
    eps = model.params["epsilon"]
    c = perturbed_torus_scale(n)
    sym = _symmetric_axes(coeffs, n, p) if use_symmetry else [False] * n
    blocks = _permutation_blocks(coeffs, n, p, sym) if use_symmetry else [[j] for j in range(n)]
    axes = [_axis_points(N, s) for s in sym]
    tables = [_trig_tables(a[0][:, 0], a[0][:, 1]) for a in axes]
    R = max(len(a[1]) for a in axes)
    tabs = np.zeros((n, 3, 3, R), complex)
    for m, T in enumerate(tables):
        tabs[m, :, :, : T.shape[-1]] = T
    if engine == "numba":
        from ._bochner_kernel import integrands

        ind = _kernel_indices(coeffs, n, p)
    sums = []
    count = 0
    for grid, w in _outer_slices(axes, blocks):
        if engine == "numba":
            vals = np.empty((3, grid.shape[0]))
            integrands(eps, c, tabs, np.ascontiguousarray(grid), *ind, vals)
        else:
            M = _perturbed_derivs(eps, c, [tabs[m][:, :, grid[:, m]] for m in range(n)], (grid.shape[0],))
            vals = bochner_integrands(coeffs, M, p)
        vals = vals * w
        sums.append([pairwise_sum(v) for v in vals])
        count += grid.shape[0]
    totals = np.array([pairwise_sum(s) for s in np.array(sums).T])
    return totals * cell_volume(model) / N ** (2 * n), count


def _generic_quadrature(model: ManifoldModel, coeffs: np.ndarray, p: int, N: int):
    probe = metric_jet(model, np.zeros(2 * model.n))
    if probe.g.ndim == 2 and not np.any(probe.ddg) and not np.any(probe.dg):
        # constant metric: integrands are constant over the cell
        M = _jet_derivs(model, np.zeros((1, 2 * model.n)))
        return bochner_integrands(coeffs, M, p)[:, 0] * cell_volume(model), 1
    sums, count = [], 0
    for pts in iter_tensor_grid(model, N, CHUNK):
        vals = bochner_integrands(coeffs, _jet_derivs(model, pts), p)
        sums.append([pairwise_sum(v) for v in vals])
        count += pts.shape[0]
    totals = np.array([pairwise_sum(s) for s in np.array(sums).T])
    return totals * cell_volume(model) / N ** (2 * model.n), count


def bochner_quadrature(model: ManifoldModel, form: FormField, resolution: int,
                       use_symmetry: bool = True, engine: str = "numba") -> tuple[np.ndarray, int]:
    """(I1, I2, I3) at one resolution and the number of evaluated points."""
    _require_torus(model)
    coeffs = _constant_coeffs(form)
    if _is_fast(model):
        return _fast_quadrature(model, coeffs, form.p, resolution, use_symmetry, engine)
    return _generic_quadrature(model, coeffs, form.p, resolution)


def _constant_coeffs(form: FormField) -> np.ndarray:
    probe = np.random.default_rng(0).random((4, 2 * form.n))
    vals, dz, dbz = form.wirtinger_derivatives(probe)
    if np.max(np.abs(dz), initial=0) > 1e-12 or np.max(np.abs(dbz), initial=0) > 1e-12:
        raise ValueError("the integral identity is implemented for constant-coefficient forms")
    return np.asarray(vals[0], complex)


def integral_bochner_check(model: ManifoldModel, form: FormField, resolution: int = 32,
                           factor: float = 10.0, use_symmetry: bool = True) -> BochnerIntegrals:
    """Integrals of Delta|eta|^2 |eta|^2, p <i ddbar |eta|^2, beta> and -|d|eta|^2|^2.

    Passing means both differences are below ``factor`` times the grid-doubling
    error estimate (plus a rounding floor).
    """
    _require_torus(model)
    if form.p % 2:
        raise ValueError("the identity is stated for forms of even degree 2k")
    ok, _ = kahler_check(model, np.random.default_rng(0).random((4, 2 * model.n)))
    if not ok:
        raise NotKahler(f"{model.name} is not Kähler")
    fine, count = bochner_quadrature(model, form, resolution, use_symmetry)
    coarse, _ = bochner_quadrature(model, form, resolution // 2, use_symmetry)
    scale = float(np.max(np.abs(fine)))
    err = float(np.max(np.abs(fine - coarse)) + rounding_floor(scale, resolution ** (2 * model.n)))
    r12 = abs(fine[0] - fine[1])
    r13 = abs(fine[0] - fine[2])
    return BochnerIntegrals(I1=float(fine[0]), I2=float(fine[1]), I3=float(fine[2]),
                            coarse=tuple(float(v) for v in coarse), error=err,
                            residual_12=float(r12), residual_13=float(r13), resolution=resolution,
                            points=count, passed=bool(r12 <= factor * err and r13 <= factor * err))


@dataclass
class ScalarMean:
    mean: float  # int S dV / int dV
    volume: float  # int dV (coordinate density det g)
    coarse: float
    error: float
    resolution: int
    points: int
    provenance: str = "quadrature"


def _scalar_density(M: MetricDerivs) -> tuple[np.ndarray, np.ndarray]:
    Gi = np.linalg.inv(M.G)
    jet = MetricJet(g=M.G, ginv=Gi, dg=M.dG, dbg=M.dbG, ddg=M.ddG)
    S = scalar_curvature(chern_curvature(jet))
    vol = np.linalg.det(M.G).real
    return S * vol, vol


def _scalar_totals(model: ManifoldModel, N: int) -> tuple[float, float, int]:
    n = model.n
    sums, count = [], 0
    if _is_fast(model):
        # the potential is invariant under every z_j -> i z_j and every permutation
        eps = model.params["epsilon"]
        c = perturbed_torus_scale(n)
        axes = [_axis_points(N, True) for _ in range(n)]
        tables = [_trig_tables(a[0][:, 0], a[0][:, 1]) for a in axes]
        for grid, w in _outer_slices(axes, [list(range(n))]):
            M = _perturbed_derivs(eps, c, [tables[m][:, :, grid[:, m]] for m in range(n)], (grid.shape[0],))
            sv, vol = _scalar_density(M)
            sums.append([pairwise_sum(sv * w), pairwise_sum(vol * w)])
            count += grid.shape[0]
    else:
        for pts in iter_tensor_grid(model, N, CHUNK):
            sv, vol = _scalar_density(_jet_derivs(model, pts))
            sums.append([pairwise_sum(sv), pairwise_sum(vol)])
            count += pts.shape[0]
    tot_s, tot_v = (pairwise_sum(col) for col in np.array(sums).T)
    cell = cell_volume(model) / N ** (2 * n)
    return tot_s * cell, tot_v * cell, count


def scalar_curvature_mean(model: ManifoldModel, resolution: int = 16) -> ScalarMean:
    """Volume-weighted mean of the Chern scalar curvature over the torus cell.

    For a Kähler metric on a torus the Ricci form is exact, so the mean vanishes.
    """
    _require_torus(model)
    s, v, count = _scalar_totals(model, resolution)
    sc, vc, _ = _scalar_totals(model, resolution // 2)
    mean, coarse = s / v, sc / vc
    scale = abs(s) + abs(v)
    err = abs(mean - coarse) + rounding_floor(scale, resolution ** (2 * model.n)) / v
    return ScalarMean(mean=float(mean), volume=float(v), coarse=float(coarse), error=float(err),
                      resolution=resolution, points=count)


# --------------------------------------------------------------------------
# jet-valued metric fields for exterior-algebra checks


def metric_field(model: ManifoldModel, pts: np.ndarray, order: int) -> list:
    """Metric entries as order-``order`` jets in the real coordinates."""
    n = model.n
    law = model.law
    if law.kind == "kahler_potential":
        seeds = Jet.seed(pts, order + 2)
        phi = law.fn(seeds[:n], seeds[n:])
        dz = [0.5 * (phi.diff(a) - phi.diff(n + a) * 1j) for a in range(n)]
        return [[0.5 * (dz[a].diff(b) + dz[a].diff(n + b) * 1j) for b in range(n)] for a in range(n)]
    seeds = Jet.seed(pts, order)
    alg = seeds[0].alg
    ent = law.fn(seeds[:n], seeds[n:])
    out = []
    for row in ent:
        out.append([e if isinstance(e, Jet)
                    else Jet.constant(alg, np.broadcast_to(np.asarray(e, complex), pts.shape[:-1]))
                    for e in row])
    return out


def _jet_inverse(G: list) -> list:
    """Gauss-Jordan inverse of a Hermitian positive matrix of jets (no pivoting needed)."""
    n = len(G)
    A = [list(row) for row in G]
    alg = G[0][0].alg
    shape = G[0][0].batch_shape
    inv = [[Jet.constant(alg, np.full(shape, 1.0 if i == j else 0.0, complex)) for j in range(n)]
           for i in range(n)]
    for k in range(n):
        piv = 1.0 / A[k][k]
        A[k] = [a * piv for a in A[k]]
        inv[k] = [a * piv for a in inv[k]]
        for i in range(n):
            if i == k:
                continue
            f = A[i][k]
            A[i] = [a - f * b for a, b in zip(A[i], A[k])]
            inv[i] = [a - f * b for a, b in zip(inv[i], inv[k])]
    return inv


def _jet_det(M: list, rows, cols):
    total = None
    for perm in itertools.permutations(range(len(rows))):
        sign = (-1) ** sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        term = M[rows[0]][cols[perm[0]]]
        for s in range(1, len(rows)):
            term = term * M[rows[s]][cols[perm[s]]]
        total = term * float(sign) if total is None else total + term * float(sign)
    return total


def norm_squared_field(coeff_jets: list, G: list, p: int):
    """|eta|^2_g as a jet from coefficient jets and metric jets."""
    n = len(G)
    Gi = _jet_inverse(G)
    H = [[Gi[j][i] for j in range(n)] for i in range(n)]
    idx = multi_indices(n, p)
    total = None
    for a, I in enumerate(idx):
        for b, J in enumerate(idx):
            term = coeff_jets[a] * coeff_jets[b].conj() * _jet_det(H, I, J)
            total = term if total is None else total + term
    return total


def density(form: ExtForm):
    """Top-degree coefficient as a multiple of the real coordinate volume dx dy."""
    n = form.n
    # prod_j (i dz^j ^ dzbar^j) = 2^n dx^1 dy^1 ... dx^n dy^n
    return jm.value_of(form.top()) * (2.0**n / top_form_unit(n))


def _integrate(fn: Callable, model: ManifoldModel, resolution, chunk: int = 1 << 13) -> np.ndarray:
    """Trapezoid integral over the cell of ``fn(points) -> (m, B)`` densities."""
    sums = []
    total = 0
    for pts in iter_tensor_grid(model, resolution, chunk):
        vals = np.atleast_2d(fn(pts))
        sums.append([pairwise_sum(v.real) + 1j * pairwise_sum(v.imag) for v in vals])
        total += pts.shape[0]
    arr = np.array(sums)
    out = np.array([pairwise_sum(arr[:, i].real) + 1j * pairwise_sum(arr[:, i].imag)
                    for i in range(arr.shape[1])])
    return out * cell_volume(model) / total


# --------------------------------------------------------------------------
# Stokes checks


def exact_form_integral(model: ManifoldModel, potential: Callable, resolution=8,
                        order: int = 1) -> complex:
    """Quadrature of d(psi) for a periodic (2n-1)-form ``psi``.

    ``potential(x, y)`` receives coordinate jet lists and returns an :class:`ExtForm`.
    """
    n = model.n

    def fn(pts):
        seeds = Jet.seed(pts, order)
        psi = potential(seeds[:n], seeds[n:])
        return np.broadcast_to(density(psi.d()), pts.shape[:-1])

    return complex(_integrate(fn, model, resolution)[0])


def default_exact_potential(n: int) -> Callable:
    """A fixed trigonometric (2n-1)-form touching every generator."""
    two_pi = 2 * math.pi
    full = (1 << (2 * n)) - 1

    def psi(x, y):
        terms = {}
        for g in range(2 * n):
            j = g % n
            k = (j + 1) % n
            c = (jm.sin(two_pi * (x[j] + 2 * y[k])) * (g + 1)
                 + jm.cos(two_pi * (y[j] - x[k])) * jm.cos(two_pi * x[j]) * 0.5j)
            terms[full ^ (1 << g)] = c
        return ExtForm(n, terms)

    return psi


@dataclass
class StokesResult:
    J: float
    ddbar_side: float
    stokes_residual: float
    exact_residual: float
    terms: dict = field(default_factory=dict)
    resolution: object = 0
    provenance: str = "quadrature"


def _form_pieces(model: ManifoldModel, form: FormField, pts: np.ndarray, order: int):
    n = model.n
    G = metric_field(model, pts, order)
    cj = form.jets(pts, order)
    f = norm_squared_field(cj, G, form.p)
    eta = ExtForm.holomorphic(n, form.p, cj)
    return G, f, eta


def threefold_stokes_check(model: ManifoldModel, form: FormField, resolution=8,
                           potential: Optional[Callable] = None) -> StokesResult:
    """Stokes-theorem bookkeeping for a degree-2 form.

    n = 3: J = int i f d'eta ^ conj(d'eta) with f = |eta|^2, the ddbar side
    int i ddbar f ^ eta ^ conj(eta), and the integrals of the exact forms
    d(f d'eta ^ conj(eta)) and d(dbar f ^ eta ^ conj(eta)), which must vanish.
    n > 3: the four terms obtained from i ddbar f ^ eta ^ conj(eta) ^ omega^{n-3}
    by moving both derivatives off f are reported in ``terms``.
    """
    _require_torus(model)
    n = model.n
    if n < 3:
        raise WrongDimension("the Stokes identities need n >= 3")
    if form.p != 2 or form.n != n:
        raise WrongDimension("expected a (2,0)-form on the model")

    if n == 3:
        def fn(pts):
            _, f, eta = _form_pieces(model, form, pts, 2)
            de = eta.d_hol()
            eb = eta.conj()
            fe = ExtForm(n, {0: f})
            J = fe.wedge(de).wedge(de.conj()).scale(1j)
            dd = fe.d_anti().d_hol().scale(1j).wedge(eta).wedge(eb)
            s1 = fe.wedge(de).wedge(eb).d()
            s2 = fe.d_anti().wedge(eta).wedge(eb).d()
            return np.stack([np.broadcast_to(density(w), pts.shape[:-1]) for w in (J, dd, s1, s2)])

        vals = _integrate(fn, model, resolution)
        terms = {}
        J, dd = vals[0].real, vals[1].real
        stokes = float(max(abs(vals[2]), abs(vals[3])))
    else:
        def fn(pts):
            G, f, eta = _form_pieces(model, form, pts, 2)
            om = omega_form(G).power(n - 3)
            de, eb = eta.d_hol(), eta.conj()
            deb = de.conj()
            fe = ExtForm(n, {0: f})
            pieces = [
                fe.wedge(de).wedge(deb).wedge(om),
                fe.wedge(de).wedge(eb).wedge(om.d_anti()),
                fe.wedge(eta).wedge(deb).wedge(om.d_hol()),
                fe.wedge(eta).wedge(eb).wedge(om.d_anti().d_hol()),
                fe.d_anti().d_hol().wedge(eta).wedge(eb).wedge(om),
            ]
            return np.stack([np.broadcast_to(density(w.scale(1j)), pts.shape[:-1]) for w in pieces])

        vals = _integrate(fn, model, resolution)
        names = ("T1", "T2", "T3", "T4")
        terms = {k: float(vals[i].real) for i, k in enumerate(names)}
        terms["sum"] = float(sum(vals[:4].real))
        terms["ddbar_side"] = float(vals[4].real)
        J, dd = terms["T1"], terms["ddbar_side"]
        stokes = abs(terms["ddbar_side"] - terms["sum"])
    psi = potential or default_exact_potential(n)
    exact = abs(exact_form_integral(model, psi, resolution))
    return StokesResult(J=float(J), ddbar_side=float(dd), stokes_residual=float(stokes),
                        exact_residual=float(exact), terms=terms, resolution=resolution)


def stokes_test_forms(n: int = 3) -> dict:
    """Two periodic (2,0)-forms for the Stokes checks.

    ``generic`` is neither holomorphic nor del-closed.  ``del_closed`` is
    del(h dz_3) for a trigonometric h, so del eta = 0 while eta is not holomorphic.
    Frequencies are at most one per y-axis.
    """
    if n < 3:
        raise WrongDimension("the Stokes test forms live on n >= 3")
    tp, pi = 2 * math.pi, math.pi

    def A(x, y):
        return tp * (x[0] + y[1])

    def B(x, y):
        return tp * (x[1] - y[0])

    generic = FormField.from_dict(n, 2, {
        (0, 1): lambda x, y: jm.sin(tp * (x[2] + y[0])) + 0.5 * jm.cos(tp * y[2]),
        (1, 2): lambda x, y: 0.3 * jm.cos(tp * x[0]) * jm.sin(tp * y[1]),
    }, name="generic")
    # h = sin A + cos(B) / 2; coefficients are d_1 h and d_2 h
    closed = FormField.from_dict(n, 2, {
        (0, 2): lambda x, y: pi * jm.cos(A(x, y)) - 0.5j * pi * jm.sin(B(x, y)),
        (1, 2): lambda x, y: -0.5 * pi * jm.sin(B(x, y)) - 1j * pi * jm.cos(A(x, y)),
    }, name="del_closed")
    return {"generic": generic, "del_closed": closed}
