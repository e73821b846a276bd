"""Minimisation of curvature functionals and sampled positivity verdicts.

All optimisation happens in a g-orthonormal frame at the point, so the
constraints are the Euclidean unit sphere, the complex Stiefel manifold and the
unitary group.  Results are heuristic minima; verdicts are labelled "sampled".
"""

from __future__ import annotations

import itertools
import functools
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import functionals as F
from .errors import CurvlabError, UnknownFunctional
from .geometry import CurvatureTensor, chern_curvature, metric_jet, orthonormal_frame
from .quadrature import ScanGrid

GRAD_TOL = 1e-8
CLASSIFY_TOL = 1e-7
MAX_EXACT_DIM = 8


class NonConvergence(UserWarning):
    pass


class DimensionTooLarge(UserWarning):
    pass


def worker_count() -> int:
    try:
        cap = int(os.environ.get("CURVLAB_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


@dataclass
class MinResult:
    value: float
    witness: Any
    converged: bool
    grad_norm: float
    provenance: str = "optimizer"


# --------------------------------------------------------------------------
# frame-local data


@dataclass
class LocalCurvature:
    """Curvature at one point expressed in a g-orthonormal frame ``E``."""

    R: CurvatureTensor
    E: np.ndarray
    Rf: np.ndarray
    ric: np.ndarray

    @classmethod
    def build(cls, R: CurvatureTensor) -> "LocalCurvature":
        if R.R.ndim != 4:
            raise ValueError("LocalCurvature expects the curvature at a single point")
        E = orthonormal_frame(R.g)
        Rf = R.in_frame(E)
        ric = np.einsum("abcc->ab", Rf)
        return cls(R=R, E=E, Rf=Rf, ric=ric)

    @property
    def n(self) -> int:
        return self.Rf.shape[0]

    def scale(self) -> float:
        return float(np.max(np.abs(self.Rf))) if self.Rf.size else 0.0


def _random_stiefel(rng: np.random.Generator, m: int, n: int, k: int) -> np.ndarray:
    z = rng.standard_normal((m, n, k)) + 1j * rng.standard_normal((m, n, k))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def _retract(U: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(U, full_matrices=False)
    return w @ vh


def _herm(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))


def _inner_re(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.sum((np.conj(A) * B).real, axis=(-2, -1))


def stiefel_minimize(fun: Callable, egrad: Callable, U0: np.ndarray, tol: float = GRAD_TOL,
                     maxiter: int = 400, post: Optional[Callable] = None, step0: float = 1.0):
    """Batched Riemannian gradient descent on the complex Stiefel manifold.

    ``fun(U)`` returns values of shape (m,), ``egrad(U)`` the Euclidean gradient
    ``2 df/dUbar``.  Steps start from Barzilai-Borwein lengths and are cut by
    Armijo backtracking.  ``post`` may replace iterates by points that do not
    increase ``fun``.
    """
    U = _retract(U0)
    if post is not None:
        U = post(U)
    f = fun(U)
    m = U.shape[0]
    t = np.full(m, step0)

    def rgrad(U):
        G = egrad(U)
        return G - U @ _herm(np.conj(np.swapaxes(U, -1, -2)) @ G)

    G = rgrad(U)
    gn2 = _inner_re(G, G)
    stalled = np.zeros(m, bool)
    for _ in range(maxiter):
        active = (np.sqrt(gn2) > tol) & ~stalled
        if not active.any():
            break
        accepted = np.zeros(m, bool)
        Unew, fnew = U.copy(), f.copy()
        step = t.copy()
        for _ in range(60):
            todo = active & ~accepted
            if not todo.any():
                break
            trial = _retract(U[todo] - step[todo, None, None] * G[todo])
            ft = fun(trial)
            ok = ft <= f[todo] - 1e-4 * step[todo] * gn2[todo]
            ids = np.nonzero(todo)[0]
            Unew[ids[ok]] = trial[ok]
            fnew[ids[ok]] = ft[ok]
            accepted[ids[ok]] = True
            step[ids[~ok]] *= 0.5
        stalled |= active & ~accepted
        if post is not None and accepted.any():
            Unew[accepted] = post(Unew[accepted])
            fnew[accepted] = fun(Unew[accepted])
        Gnew = rgrad(Unew)
        s = Unew - U
        y = Gnew - G
        sy = np.abs(_inner_re(s, y))
        ss = _inner_re(s, s)
        bb = np.where(sy > 1e-300, ss / np.maximum(sy, 1e-300), step * 2)
        t = np.where(accepted, np.clip(bb, 1e-10, 1e10), t)
        U = np.where(accepted[:, None, None], Unew, U)
        f = np.where(accepted, fnew, f)
        G = np.where(accepted[:, None, None], Gnew, G)
        gn2 = np.where(accepted, _inner_re(G, G), gn2)
    return U, f, np.sqrt(gn2)


# --------------------------------------------------------------------------
# functionals in frame coordinates (U has shape (m, n, k))


def _quartic(Rf, u):
    return np.einsum("abcd,ma,mb,mc,md->m", Rf, u, np.conj(u), u, np.conj(u)).real


def _quartic_grad(Rf, u):
    uc = np.conj(u)
    return (np.einsum("aecd,ma,mc,md->me", Rf, u, u, uc)
            + np.einsum("abce,ma,mb,mc->me", Rf, u, uc, u))


def _direction_problem(local: LocalCurvature, a: float, b: float):
    Rf, ric = local.Rf, local.ric

    def fun(U):
        u = U[:, :, 0]
        val = np.zeros(U.shape[0])
        if a:
            val = val + a * np.einsum("ab,ma,mb->m", ric, u, np.conj(u)).real
        if b:
            val = val + b * _quartic(Rf, u)
        return val

    def egrad(U):
        u = U[:, :, 0]
        G = np.zeros_like(u)
        if a:
            G = G + a * np.einsum("ae,ma->me", ric, u)
        if b:
            G = G + b * _quartic_grad(Rf, u)
        return 2 * G[:, :, None]

    return fun, egrad


def _sphere_starts(local: LocalCurvature, starts: int, rng) -> np.ndarray:
    n = local.n
    eig = np.linalg.eigh(_herm(local.ric.T))[1]
    extra = np.concatenate([np.eye(n), eig], axis=1).T[:, :, None].astype(complex)
    rand = _random_stiefel(rng, starts, n, 1)
    return np.concatenate([rand, extra], axis=0)


def _functional_value(R: CurvatureTensor, X: np.ndarray, a: float, b: float) -> float:
    return float(F.mixed_curvature(R, X, F.MixedParams(a, b)))


def min_over_directions(R: CurvatureTensor, functional: str = "C", a: float = 0.0, b: float = 1.0,
                        starts: int = 32, seed: int = 0, local: Optional[LocalCurvature] = None) -> MinResult:
    """Minimum of H, Ric-direction or C_{a,b} over unit (1,0)-vectors at one point."""
    if functional == "H":
        a, b = 0.0, 1.0
    elif functional == "Ric":
        a, b = 1.0, 0.0
    elif functional != "C":
        raise UnknownFunctional(functional)
    local = local or LocalCurvature.build(R)
    n = local.n
    if b == 0:
        # quadratic form: exact by diagonalisation
        w, v = np.linalg.eigh(_herm(a * local.ric.T))
        X = local.E @ v[:, 0]
        return MinResult(_functional_value(R, X, a, b), X, True, 0.0, "eigen")
    rng = np.random.default_rng(seed)
    fun, egrad = _direction_problem(local, a, b)
    U0 = _sphere_starts(local, starts, rng)
    step0 = 1.0 / max(1.0, 4 * (abs(a) + abs(b)) * max(local.scale(), 1e-12) * n)
    U, f, gn = stiefel_minimize(fun, egrad, U0, step0=step0)
    best = int(np.argmin(f))
    X = local.E @ U[best, :, 0]
    converged = bool(gn[best] <= GRAD_TOL * max(1.0, local.scale()))
    if not converged:
        warnings.warn(f"direction search stopped with gradient norm {gn[best]:.2e}", NonConvergence)
    return MinResult(_functional_value(R, X, a, b), X, converged, float(gn[best]))


# --------------------------------------------------------------------------
# k-Ricci and k-scalar


def _inner_kricci(local: LocalCurvature, u: np.ndarray, k: int):
    """Exact min over Sigma containing unit u: H(u) + (k-1) smallest eigenvalues on u-perp.

    Returns the value and the completing orthonormal vectors (n, k-1).
    """
    n = local.n
    Q = np.einsum("abcd,a,b->cd", local.Rf, u, np.conj(u))
    A = _herm(Q.T)  # Y -> sum Q_cd Y_c conj(Y_d) = Y^H Q^T Y
    # orthonormal basis of u-perp
    full = np.linalg.qr(np.concatenate([u[:, None], np.eye(n, dtype=complex)], axis=1))[0]
    P = full[:, 1:n]
    w, v = np.linalg.eigh(np.conj(P.T) @ A @ P)
    W = P @ v[:, : k - 1]
    return float(_quartic(local.Rf, u[None])[0] + np.sum(w[: k - 1])), W


def _kricci_problem(local: LocalCurvature):
    Rf = local.Rf

    def fun(U):
        u1 = U[:, :, 0]
        Q = np.einsum("abcd,ma,mb->mcd", Rf, u1, np.conj(u1))
        return np.einsum("mcd,mci,mdi->m", Q, U, np.conj(U)).real

    def egrad(U):
        u1 = U[:, :, 0]
        Q = np.einsum("abcd,ma,mb->mcd", Rf, u1, np.conj(u1))
        G = 2 * np.einsum("mce,mci->mei", Q, U)
        G[:, :, 0] += 2 * np.einsum("aecd,ma,mci,mdi->me", Rf, u1, U, np.conj(U))
        return G

    return fun, egrad


def min_k_ricci(R: CurvatureTensor, k: int, starts: int = 16, seed: int = 0,
                local: Optional[LocalCurvature] = None) -> MinResult:
    """Minimum of Ric_k over unit X and k-subspaces containing X; witness is (X, basis)."""
    local = local or LocalCurvature.build(R)
    n = local.n
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if k == 1:
        res = min_over_directions(R, "H", starts=starts, seed=seed, local=local)
        X = res.witness
        nrm = np.sqrt(F.norm_sq(R.g, X))
        basis = (X / nrm)[:, None]
        val = float(F.k_ricci(R, basis, X))
        return MinResult(val, (X, basis), res.converged, res.grad_norm, res.provenance)
    if k == n:
        res = min_over_directions(R, "Ric", local=local)
        X = res.witness
        basis = local.E
        return MinResult(float(F.k_ricci(R, basis, X)), (X, basis), True, 0.0, "eigen")

    rng = np.random.default_rng(seed)
    fun, egrad = _kricci_problem(local)

    def post(U):
        out = U.copy()
        for i in range(U.shape[0]):
            _, W = _inner_kricci(local, U[i, :, 0], k)
            out[i, :, 1:] = W
        return out

    base = _sphere_starts(local, starts, rng)[:, :, 0]
    U0 = np.zeros((base.shape[0], n, k), complex)
    U0[:, :, 0] = base
    U0 = post(U0)
    step0 = 1.0 / max(1.0, 4 * k * max(local.scale(), 1e-12) * n)
    U, f, gn = stiefel_minimize(fun, egrad, U0, post=post, step0=step0)
    best = int(np.argmin(f))
    u = U[best, :, 0]
    _, W = _inner_kricci(local, u, k)
    basis = local.E @ np.concatenate([u[:, None], W], axis=1)
    X = basis[:, 0]
    converged = bool(gn[best] <= GRAD_TOL * max(1.0, local.scale()))
    if not converged:
        warnings.warn(f"k-Ricci search stopped with gradient norm {gn[best]:.2e}", NonConvergence)
    return MinResult(float(F.k_ricci(R, basis, X)), (X, basis), converged, float(gn[best]))


def exact_inner_kricci(R: CurvatureTensor, X, k: int, local: Optional[LocalCurvature] = None) -> float:
    """min over k-subspaces containing X of Ric_k(X) / |X|^2 (exact eigen-reduction)."""
    local = local or LocalCurvature.build(R)
    X = np.asarray(X, complex)
    # frame coordinates: X = E v with v = E^T g conj(E)... E^{-1} X
    v = np.linalg.solve(local.E, X)
    v = v / np.linalg.norm(v)
    if k == 1:
        return float(_quartic(local.Rf, v[None])[0])
    return _inner_kricci(local, v, k)[0]


def _kscalar_problem(local: LocalCurvature):
    Rf = local.Rf

    def fun(U):
        P = np.einsum("mai,mbi->mab", U, np.conj(U))
        return np.einsum("abcd,mab,mcd->m", Rf, P, P).real

    def egrad(U):
        P = np.einsum("mai,mbi->mab", U, np.conj(U))
        return 2 * (np.einsum("aecd,mai,mcd->mei", Rf, U, P) + np.einsum("abce,mab,mci->mei", Rf, P, U))

    return fun, egrad


def min_k_scalar(R: CurvatureTensor, k: int, starts: int = 16, seed: int = 0,
                 local: Optional[LocalCurvature] = None) -> MinResult:
    local = local or LocalCurvature.build(R)
    n = local.n
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if k == n:
        return MinResult(float(F.k_scalar(R, local.E)), local.E, True, 0.0, "exact")
    rng = np.random.default_rng(seed)
    fun, egrad = _kscalar_problem(local)
    U0 = np.concatenate([_random_stiefel(rng, starts, n, k), np.eye(n, k, dtype=complex)[None]], axis=0)
    step0 = 1.0 / max(1.0, 8 * k * k * max(local.scale(), 1e-12) * n)
    U, f, gn = stiefel_minimize(fun, egrad, U0, step0=step0)
    best = int(np.argmin(f))
    basis = local.E @ U[best]
    converged = bool(gn[best] <= GRAD_TOL * max(1.0, local.scale()))
    if not converged:
        warnings.warn(f"k-scalar search stopped with gradient norm {gn[best]:.2e}", NonConvergence)
    return MinResult(float(F.k_scalar(R, basis)), basis, converged, float(gn[best]))


# --------------------------------------------------------------------------
# copositivity-type inner problem


@functools.lru_cache(maxsize=None)
def _supports(n: int):
    out = []
    for s in range(1, n + 1):
        out.append(np.asarray(list(itertools.combinations(range(n), s)), dtype=np.intp))
    return out


def min_on_nonneg_sphere(M: np.ndarray, sign_tol: float = 1e-9):
    """min a^T M a over a >= 0, |a| = 1 by KKT support enumeration.

    ``M`` has shape (..., n, n) and is symmetrised.  Every optimum is a strictly
    positive eigenvector of some principal submatrix, so enumerating supports
    and keeping sign-definite eigenvectors finds it.  Returns (values, a).
    """
    M = np.asarray(M, float)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    batch = M.shape[:-2]
    n = M.shape[-1]
    Mb = M.reshape((-1, n, n))
    m = Mb.shape[0]
    best_val = np.full(m, np.inf)
    best_a = np.zeros((m, n))
    for idx in _supports(n):
        s = idx.shape[1]
        sub = Mb[:, idx[:, :, None], idx[:, None, :]]  # (m, nsup, s, s)
        _, vecs = np.linalg.eigh(sub)
        vecs = np.swapaxes(vecs, -1, -2)  # (m, nsup, s(eig), s(comp))
        flip = np.where(np.sum(vecs, axis=-1, keepdims=True) < 0, -1.0, 1.0)
        vecs = vecs * flip
        ok = np.min(vecs, axis=-1) >= -sign_tol
        vecs = np.clip(vecs, 0.0, None)
        nrm = np.linalg.norm(vecs, axis=-1, keepdims=True)
        ok &= nrm[..., 0] > 0.5
        vecs = vecs / np.where(nrm > 0, nrm, 1.0)
        vals = np.einsum("mpei,mpij,mpej->mpe", vecs, sub, vecs)
        vals = np.where(ok, vals, np.inf)
        flat = vals.reshape(m, -1)
        j = np.argmin(flat, axis=1)
        cand = flat[np.arange(m), j]
        better = cand < best_val
        if better.any():
            p, e = np.unravel_index(j, vals.shape[1:])
            rows = np.nonzero(better)[0]
            a = np.zeros((rows.size, n))
            a[np.arange(rows.size)[:, None], idx[p[rows]]] = vecs[rows, p[rows], e[rows]]
            best_a[rows] = a
            best_val[rows] = cand[rows]
    return best_val.reshape(batch), best_a.reshape(batch + (n,))


def min_on_nonneg_sphere_pg(M: np.ndarray, seed: int = 0, starts: int = 64, iters: int = 2000):
    """Projected-gradient fallback for large n (heuristic)."""
    M = 0.5 * (np.asarray(M, float) + np.asarray(M, float).T)
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    A = np.abs(rng.standard_normal((starts, n)))
    A = np.concatenate([A, np.eye(n)], axis=0)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    lip = 2 * np.max(np.abs(np.linalg.eigvalsh(M))) + 1e-12
    for _ in range(iters):
        G = 2 * A @ M
        G -= 2 * np.sum(A * (A @ M), axis=1, keepdims=True) * A
        A = np.clip(A - G / lip, 0.0, None)
        nrm = np.linalg.norm(A, axis=1, keepdims=True)
        A = np.where(nrm > 0, A / np.where(nrm > 0, nrm, 1), np.eye(n)[0])
    vals = np.einsum("mi,ij,mj->m", A, M, A)
    best = int(np.argmin(vals))
    return float(vals[best]), A[best]


def _bisectional_matrices(Rf: np.ndarray, U: np.ndarray) -> np.ndarray:
    Uc = np.conj(U)
    return np.einsum("pqrs,mpi,mqi,mrj,msj->mij", Rf, U, Uc, U, Uc).real


def _expm_skew(Omega: np.ndarray, t: np.ndarray) -> np.ndarray:
    """exp(-t Omega) for skew-Hermitian Omega via the Hermitian matrix i Omega."""
    w, V = np.linalg.eigh(1j * Omega)
    phase = np.exp(1j * t[:, None] * w)
    return (V * phase[:, None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def min_real_bisectional(R: CurvatureTensor, restarts: int = 16, seed: int = 0, maxiter: int = 200,
                         local: Optional[LocalCurvature] = None) -> MinResult:
    """Minimum of B_g(e, a) over unitary frames and nonnegative weights; witness is (E, a)."""
    local = local or LocalCurvature.build(R)
    n = local.n
    Rf = local.Rf
    rng = np.random.default_rng(seed)
    heuristic = n > MAX_EXACT_DIM
    if heuristic:
        warnings.warn("n > 8: inner weight problem solved by projected gradient", DimensionTooLarge)

        def inner(Ms):
            out = [min_on_nonneg_sphere_pg(Mi, seed=seed) for Mi in Ms]
            return np.array([o[0] for o in out]), np.array([o[1] for o in out])
    else:
        inner = min_on_nonneg_sphere

    eig = np.linalg.eigh(_herm(local.ric.T))[1]
    U = np.concatenate([np.eye(n, dtype=complex)[None], eig[None],
                        _random_stiefel(rng, max(restarts - 2, 0), n, n)], axis=0)
    m = U.shape[0]
    vals, A = inner(_bisectional_matrices(Rf, U))
    t = np.full(m, 1.0 / max(1.0, 4 * max(local.scale(), 1e-12) * n))
    om_norm = np.zeros(m)
    done = np.zeros(m, bool)
    for _ in range(maxiter):
        Uc = np.conj(U)
        Pa = np.einsum("mj,mrj,msj->mrs", A, U, Uc)
        A1 = np.einsum("pqrs,mrs->mpq", Rf, Pa)
        A2 = np.einsum("pxrq,mpx->mrq", Rf, Pa)
        G = 2 * A[:, None, :] * (np.einsum("mpq,mpl->mql", A1, U) + np.einsum("mrq,mrl->mql", A2, U))
        UhG = np.conj(np.swapaxes(U, -1, -2)) @ G
        Omega = 0.5 * (UhG - np.conj(np.swapaxes(UhG, -1, -2)))
        om2 = np.sum(np.abs(Omega) ** 2, axis=(-2, -1))
        om_norm = np.sqrt(om2)
        done |= om_norm < GRAD_TOL
        active = ~done
        if not active.any():
            break
        step = t.copy()
        moved = np.zeros(m, bool)
        for _ in range(50):
            todo = active & ~moved
            if not todo.any():
                break
            Ut = U[todo] @ _expm_skew(Omega[todo], step[todo])
            vt, At = inner(_bisectional_matrices(Rf, Ut))
            ok = vt <= vals[todo] - 1e-4 * step[todo] * om2[todo]
            ids = np.nonzero(todo)[0][ok]
            U[ids], vals[ids], A[ids] = Ut[ok], vt[ok], At[ok]
            moved[ids] = True
            step[np.nonzero(todo)[0][~ok]] *= 0.5
        done |= active & ~moved
        t = np.where(moved, np.minimum(step * 2, 1e6), t)
    best = int(np.argmin(vals))
    E = local.E @ U[best]
    a = A[best]
    value = float(F.real_bisectional(R, E, a))
    converged = bool(om_norm[best] < GRAD_TOL * max(1.0, local.scale()))
    return MinResult(value, (E, a), converged, float(om_norm[best]),
                     "optimizer+heuristic_inner" if heuristic else "optimizer+kkt")


# --------------------------------------------------------------------------
# Lemma-type inequality


def lemma23_check(R: CurvatureTensor, k: int, sample, seed: int = 0) -> dict:
    """Max violation of (n-1)(k+1) sigma |X|^4 <= (k-1)|X|^2 Ric(X,Xbar) + (n-k) R(X,Xbar,X,Xbar).

    ``sigma`` is min Ric_k / (k+1) over the optimiser's witness and the exact
    inner minima at the sampled X, which keeps it a valid lower bound candidate.
    """
    local = LocalCurvature.build(R)
    n = local.n
    sample = np.atleast_2d(np.asarray(sample, complex))
    opt = min_k_ricci(R, k, seed=seed, local=local)
    inner_vals = [exact_inner_kricci(R, X, k, local) for X in sample]
    sigma = min([opt.value] + inner_vals) / (k + 1)
    ric = F.chern_ricci(R)
    nrm = F.norm_sq(R.g, sample)
    lhs = (k - 1) * nrm * F.inner(ric, sample, sample).real + (n - k) * F.quartic(R, sample)
    rhs = (n - 1) * (k + 1) * sigma * nrm**2
    gap = lhs - rhs
    return {"violation": float(np.max(rhs - lhs)), "sigma": float(sigma), "max_abs_gap": float(np.max(np.abs(gap))),
            "min_gap": float(np.min(gap))}


# --------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class FunctionalSpec:
    name: str
    a: float = 0.0
    b: float = 1.0
    k: int = 1

    def __post_init__(self):
        if self.name not in F.FUNCTIONALS:
            raise UnknownFunctional(f"unknown functional {self.name!r}")

    def label(self) -> str:
        if self.name == "C":
            return f"C[a={self.a:g},b={self.b:g}]"
        if self.name in ("Ric_k", "S_k"):
            return f"{self.name}[k={self.k}]"
        return self.name


@dataclass
class PositivityVerdict:
    cls: str
    min_value: float
    min_index: int
    min_witness: Any
    positive_index: Optional[int]
    positive_witness: Any
    per_point: np.ndarray
    witnesses: list = field(repr=False)
    converged: np.ndarray = field(repr=False, default=None)
    tol: float = CLASSIFY_TOL
    label: str = "sampled"


def point_minimum(R: CurvatureTensor, spec: FunctionalSpec, seed: int = 0) -> MinResult:
    local = LocalCurvature.build(R)
    name = spec.name
    if name == "H":
        return min_over_directions(R, "H", seed=seed, local=local)
    if name == "Ric":
        return min_over_directions(R, "Ric", local=local)
    if name == "C":
        return min_over_directions(R, "C", spec.a, spec.b, seed=seed, local=local)
    if name == "S":
        return MinResult(float(F.scalar_curvature(R)), None, True, 0.0, "exact")
    if name == "Ric_k":
        return min_k_ricci(R, spec.k, seed=seed, local=local)
    if name == "S_k":
        return min_k_scalar(R, spec.k, seed=seed, local=local)
    if name == "B":
        return min_real_bisectional(R, seed=seed, local=local)
    raise UnknownFunctional(name)


def reevaluate(R: CurvatureTensor, spec: FunctionalSpec, witness) -> float:
    """Functional value at a reported witness (used to audit verdicts)."""
    name = spec.name
    if name == "H":
        return float(F.holo_sectional(R, witness))
    if name == "Ric":
        return float(F.ricci_value(R, witness))
    if name == "C":
        return float(F.mixed_curvature(R, witness, F.MixedParams(spec.a, spec.b)))
    if name == "S":
        return float(F.scalar_curvature(R))
    if name == "Ric_k":
        X, basis = witness
        return float(F.k_ricci(R, basis, X))
    if name == "S_k":
        return float(F.k_scalar(R, witness))
    if name == "B":
        E, a = witness
        return float(F.real_bisectional(R, E, a))
    raise UnknownFunctional(name)


def classify_minima(per_point: np.ndarray, tol: float = CLASSIFY_TOL) -> str:
    lo = float(np.min(per_point))
    if lo < -tol:
        return "indefinite"
    if np.all(per_point > tol):
        return "positive"
    if np.any(per_point > tol):
        return "quasi_positive"
    return "nonnegative_flat"


def classify(model, spec: FunctionalSpec, grid: ScanGrid, tol: float = CLASSIFY_TOL, seed: int = 0,
             chunk: int = 4096) -> PositivityVerdict:
    """Sampled positivity class of ``spec`` over ``grid``.

    When the metric law is point independent the curvature is computed once and
    the per-point minimum is shared by every grid point.
    """
    if not isinstance(spec, FunctionalSpec):
        raise UnknownFunctional(str(spec))
    pts = grid.points
    if len(pts) == 0:
        raise ValueError("empty grid")
    results: list[Optional[MinResult]] = [None] * len(pts)
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        jet = metric_jet(model, block)
        curv = chern_curvature(jet)
        if curv.R.ndim == 4:
            res = point_minimum(curv, spec, seed)
            for i in range(len(block)):
                results[start + i] = res
            continue

        def solve(i, curv=curv):
            return point_minimum(CurvatureTensor(R=curv.R[i], g=curv.g[i]), spec, seed)

        nw = worker_count()
        if nw > 1:
            with ThreadPoolExecutor(max_workers=nw) as ex:
                out = list(ex.map(solve, range(len(block))))
        else:
            out = [solve(i) for i in range(len(block))]
        results[start:start + len(block)] = out
    per_point = np.array([r.value for r in results])
    cls = classify_minima(per_point, tol)
    imin = int(np.argmin(per_point))
    pos = np.nonzero(per_point > tol)[0]
    ipos = int(pos[0]) if cls == "quasi_positive" else None
    return PositivityVerdict(
        cls=cls,
        min_value=float(per_point[imin]),
        min_index=imin,
        min_witness=results[imin].witness,
        positive_index=ipos,
        positive_witness=results[ipos].witness if ipos is not None else None,
        per_point=per_point,
        witnesses=[r.witness for r in results],
        converged=np.array([r.converged for r in results]),
        tol=tol,
    )


def curvature_at(model, point) -> CurvatureTensor:
    return chern_curvature(metric_jet(model, point))
