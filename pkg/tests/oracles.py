"""Independent reference computations used by the tests.

Nothing here imports curvlab.  Metrics are restated symbolically from the
model definitions and differentiated exactly with sympy; curvature is
rebuilt from those derivatives.  Copositivity uses lattice brute force.
"""

from __future__ import annotations

import functools
import itertools
import math

import numpy as np
import sympy as sp
from scipy.optimize import minimize


# --------------------------------------------------------------------------
# symbolic metrics


def _symbols(n):
    xs = sp.symbols(f"x0:{n}", real=True)
    ys = sp.symbols(f"y0:{n}", real=True)
    return xs, ys


def _dz(expr, x, y):
    return (sp.diff(expr, x) - sp.I * sp.diff(expr, y)) / 2


def _dzb(expr, x, y):
    return (sp.diff(expr, x) + sp.I * sp.diff(expr, y)) / 2


def _model_metric(name, n, eps, xs, ys):
    two_pi = 2 * sp.pi
    if name == "flat_torus":
        return sp.eye(n)
    if name == "perturbed_torus":
        c = sp.pi**2 * 2 ** (n - 1) * (n + 1) / sp.Integer(10)
        phi = c * sum(xs[j] ** 2 + ys[j] ** 2 for j in range(n))
        phi += eps * sp.Mul(*[sp.cos(two_pi * xs[j]) + sp.cos(two_pi * ys[j]) for j in range(n)])
    elif name == "fubini_study":
        phi = sp.log(1 + sum(xs[j] ** 2 + ys[j] ** 2 for j in range(n)))
    elif name == "twisted_torus":
        return sp.diag(*[1 + eps * sp.sin(two_pi * xs[(j + 1) % n]) for j in range(n)])
    elif name == "hopf":
        r2 = sum(xs[j] ** 2 + ys[j] ** 2 for j in range(n))
        return sp.eye(n) / r2
    else:
        raise KeyError(name)
    return sp.Matrix(n, n, lambda i, j: _dzb(_dz(phi, xs[i], ys[i]), xs[j], ys[j]))


@functools.lru_cache(maxsize=None)
def symbolic_metric(name: str, n: int, eps: float = 0.0):
    """Numpy callables for g, d_k g, dbar_l g, d_k dbar_l g at a point t = (x, y)."""
    xs, ys = _symbols(n)
    G = _model_metric(name, n, sp.nsimplify(eps), xs, ys)
    dG = [[[_dz(G[i, j], xs[k], ys[k]) for k in range(n)] for j in range(n)] for i in range(n)]
    dbG = [[[_dzb(G[i, j], xs[k], ys[k]) for k in range(n)] for j in range(n)] for i in range(n)]
    ddG = [[[[_dzb(dG[i][j][k], xs[l], ys[l]) for l in range(n)] for k in range(n)]
             for j in range(n)] for i in range(n)]
    args = list(xs) + list(ys)
    fns = [sp.lambdify(args, sp.Array(e).tolist() if not isinstance(e, sp.Matrix) else e.tolist(), "numpy")
           for e in (G, dG, dbG, ddG)]

    def evaluate(t):
        t = [float(v) for v in t]
        return tuple(np.array(f(*t), dtype=complex) for f in fns)

    return evaluate


def curvature(g, dg, dbg, ddg):
    """R_{i jbar k lbar} = -d_k dbar_l g_{i jbar} + g^{p qbar} d_k g_{i qbar} dbar_l g_{p jbar}."""
    ginv = np.linalg.inv(g)  # ginv[q, p] = g^{p qbar}
    quad = np.einsum("qp,iqk,pjl->ijkl", ginv, dg, dbg)
    return quad - ddg


def oracle_curvature(name, n, t, eps=0.0):
    g, dg, dbg, ddg = symbolic_metric(name, n, eps)(t)
    return g, curvature(g, dg, dbg, ddg)


# --------------------------------------------------------------------------
# finite differences


def fd_weights(m: int, offsets) -> np.ndarray:
    """Weights w with sum w_s f(s h) ~ h^m f^(m)(0) (Vandermonde solve)."""
    s = np.asarray(offsets, float)
    V = np.vander(s, increasing=True).T
    rhs = np.zeros(len(s))
    rhs[m] = math.factorial(m)
    return np.linalg.solve(V, rhs)


def fd_partial(f, t0, alpha, h):
    """Mixed real partial derivative D^alpha f at t0 by a tensor central stencil.

    ``f`` is evaluated once on the whole stencil, shape (m, 2n) -> (m,).
    """
    t0 = np.asarray(t0, float)
    axes = []
    for v, m in enumerate(alpha):
        if m == 0:
            continue
        pts = np.arange(-(m // 2 + 2), m // 2 + 3)
        axes.append((v, pts, fd_weights(m, pts) / h**m))
    offsets = np.zeros((1, len(t0)))
    weights = np.ones(1)
    for v, pts, wts in axes:
        step = np.zeros((len(pts), len(t0)))
        step[:, v] = pts * h
        offsets = (offsets[:, None, :] + step[None]).reshape(-1, len(t0))
        weights = (weights[:, None] * wts[None]).reshape(-1)
    return float(np.sum(weights * f(t0 + offsets)))


def fd_curvature_potential(phi, n, t0, h=0.02):
    """Chern curvature of i ddbar phi at t0 from finite differences (one Richardson step).

    ``phi`` maps an (m, 2n) array of points to m values.
    """

    def wirtinger(ops, step):
        # ops: list of (var, holomorphic?) applied to phi; expand into real partials
        terms = [((0,) * (2 * n), 1.0 + 0j)]
        for var, hol in ops:
            new = []
            for alpha, c in terms:
                ax = list(alpha)
                ax[var] += 1
                new.append((tuple(ax), c * 0.5))
                ay = list(alpha)
                ay[n + var] += 1
                new.append((tuple(ay), c * (-0.5j if hol else 0.5j)))
            terms = new
        acc = {}
        for alpha, c in terms:
            acc[alpha] = acc.get(alpha, 0) + c
        return sum(c * partial(alpha, step) for alpha, c in acc.items() if c != 0)

    @functools.lru_cache(maxsize=None)
    def partial(alpha, step):
        return fd_partial(phi, t0, alpha, step)

    def rich(ops):
        a, b = wirtinger(ops, h), wirtinger(ops, h / 2)
        order = 4  # tensor stencils are fourth-order accurate
        return (2**order * b - a) / (2**order - 1)

    r = range(n)
    g = np.array([[rich([(i, True), (j, False)]) for j in r] for i in r])
    dg = np.array([[[rich([(i, True), (j, False), (k, True)]) for k in r] for j in r] for i in r])
    dbg = np.array([[[rich([(i, True), (j, False), (l, False)]) for l in r] for j in r] for i in r])
    ddg = np.array([[[[rich([(i, True), (j, False), (k, True), (l, False)]) for l in r] for k in r]
                     for j in r] for i in r])
    return g, curvature(g, dg, dbg, ddg)


# --------------------------------------------------------------------------
# copositivity


def simplex_sphere_lattice(n: int, m: int) -> np.ndarray:
    if n == 1:
        return np.ones((1, 1))
    rows = [c + (m - sum(c),) for c in itertools.product(range(m + 1), repeat=n - 1) if sum(c) <= m]
    P = np.array(rows, float)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def brute_min_nonneg_sphere(M, lattice) -> float:
    """min a^T M a over a >= 0, |a| = 1: lattice scan, then a bounded local polish."""
    M = 0.5 * (M + M.T)
    vals = np.einsum("mi,ij,mj->m", lattice, M, lattice)
    best = float(vals.min())
    n = M.shape[0]
    start = lattice[int(np.argmin(vals))]

    # polish on the simplex chart a = x / |x|, x >= 0
    def f(x):
        nx = x @ x
        # the quotient is scale free; an excursion to the origin is simply rejected
        return (x @ M @ x) / nx if nx > 1e-300 else np.inf

    res = minimize(f, start, method="L-BFGS-B", bounds=[(0, None)] * n,
                   options={"ftol": 1e-16, "gtol": 1e-12})
    if np.linalg.norm(res.x) > 1e-8:
        best = min(best, float(f(res.x)))
    return best


# --------------------------------------------------------------------------
# sphere sampling


def sphere_points(rng, count, k):
    z = rng.standard_normal((count, k)) + 1j * rng.standard_normal((count, k))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# --------------------------------------------------------------------------
# (p,0)-forms as dense antisymmetric tensors


def _perm_parity(perm):
    s = 1
    for i, j in itertools.combinations(range(len(perm)), 2):
        if perm[i] > perm[j]:
            s = -s
    return s


def dense_form(coeffs, n, p):
    T = np.zeros((n,) * p, complex)
    for c, I in zip(coeffs, itertools.combinations(range(n), p)):
        for perm in itertools.permutations(range(p)):
            T[tuple(I[q] for q in perm)] = _perm_parity(perm) * c
    return T


def form_contract(T, S, ginv, p):
    """(1/p!) sum T_{i..} conj(S_{j..}) prod ginv[j_s, i_s]."""
    out = T
    for _ in range(p):
        out = np.tensordot(out, ginv.T, axes=([0], [0]))
    return np.sum(out * np.conj(S)) / math.factorial(p)


def beta_coordinates(coeffs, g, p):
    """beta_{i jbar} = (1/p!) sum_{K, L} eta_{iK} conj(eta_{jL}) prod g^{..}, so tr_g beta = |eta|^2."""
    n = g.shape[0]
    T = dense_form(coeffs, n, p)
    ginv = np.linalg.inv(g)
    beta = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(n):
            beta[i, j] = form_contract(T[i], T[j], ginv, p - 1) / p
    return beta


def det_minor_derivatives(Gi, D, Db, DD, I):
    """f = det(Ginv[I, I]) with d_k f, dbar_l f and d_k dbar_l f from Jacobi's formula.

    D[:, :, k] = d_k g, Db[:, :, l] = dbar_l g, DD[:, :, k, l] = d_k dbar_l g.
    For constant eta = dz^I this f is |eta|^2.
    """
    n = Gi.shape[0]
    ix = np.ix_(I, I)
    dGi = [-Gi @ D[:, :, k] @ Gi for k in range(n)]
    dbGi = [-Gi @ Db[:, :, l] @ Gi for l in range(n)]
    M = Gi[ix]
    Mi = np.linalg.inv(M)
    f = np.linalg.det(M).real
    df = np.array([f * np.trace(Mi @ dGi[k][ix]) for k in range(n)])
    dbf = np.array([f * np.trace(Mi @ dbGi[l][ix]) for l in range(n)])
    ddf = np.zeros((n, n), complex)
    for k, l in itertools.product(range(n), repeat=2):
        dd = (Gi @ Db[:, :, l] @ Gi @ D[:, :, k] @ Gi + Gi @ D[:, :, k] @ Gi @ Db[:, :, l] @ Gi
              - Gi @ DD[:, :, k, l] @ Gi)
        a, b = Mi @ dGi[k][ix], Mi @ dbGi[l][ix]
        ddf[k, l] = f * (np.trace(a) * np.trace(b) - np.trace(b @ a) + np.trace(Mi @ dd[ix]))
    return f, df, dbf, ddf
