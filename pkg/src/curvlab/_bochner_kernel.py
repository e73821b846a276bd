"""Compiled per-point integrand for the perturbed-torus Bochner quadrature.

Mirrors :func:`curvlab.bochner.bochner_integrands` on the closed-form metric
derivatives; the numpy version is the reference implementation.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, error_model="numpy")
def _inverse(A, out):
    n = A.shape[0]
    M = A.copy()
    for i in range(n):
        for j in range(n):
            out[i, j] = 1.0 if i == j else 0.0
    for k in range(n):
        piv = 1.0 / M[k, k]
        for j in range(n):
            M[k, j] *= piv
            out[k, j] *= piv
        for i in range(n):
            if i != k:
                f = M[i, k]
                for j in range(n):
                    M[i, j] -= f * M[k, j]
                    out[i, j] -= f * out[k, j]


@njit(cache=True, error_model="numpy")
def _det(A, m):
    """Determinant of the leading m-by-m block by elimination (A is overwritten)."""
    d = 1.0 + 0j
    for k in range(m):
        p = k
        best = abs(A[k, k])
        for i in range(k + 1, m):
            if abs(A[i, k]) > best:
                best = abs(A[i, k])
                p = i
        if best == 0.0:
            return 0.0 + 0j
        if p != k:
            for j in range(m):
                t = A[k, j]
                A[k, j] = A[p, j]
                A[p, j] = t
            d = -d
        d *= A[k, k]
        for i in range(k + 1, m):
            f = A[i, k] / A[k, k]
            for j in range(k, m):
                A[i, j] -= f * A[k, j]
    return d


@njit(cache=True, error_model="numpy")
def integrands(eps, c, tabs, grid, nzI, nzc, perms, psign, bi, bK, bc, out):
    """Fill out[3, P] at the grid points ``grid`` (P, n) of per-coordinate table indices.

    tabs: (n, 3, 3, R) per-coordinate trig tables.
    nzI/nzc: nonzero increasing indices of eta and their coefficients.
    perms/psign: permutations of range(p) with signs.
    bi/bK/bc: beta expansion entries (i, K, coefficient) with K of length p-1.
    """
    n = tabs.shape[0]
    p = nzI.shape[1]
    q = nzI.shape[0]
    nb = bi.shape[0]
    P = out.shape[1]
    G = np.empty((n, n), np.complex128)
    dG = np.empty((n, n, n), np.complex128)
    dbG = np.empty((n, n, n), np.complex128)
    ddG = np.empty((n, n, n, n), np.complex128)
    Gi = np.empty((n, n), np.complex128)
    dGi = np.empty((n, n, n), np.complex128)
    dbGi = np.empty((n, n, n), np.complex128)
    ddGi = np.empty((n, n, n, n), np.complex128)
    T1 = np.empty((n, n), np.complex128)
    Pk = np.empty((n, n, n), np.complex128)
    Qk = np.empty((n, n, n), np.complex128)
    T2 = np.empty((n, n), np.complex128)
    idx = np.empty(n, np.int64)
    Tp = np.empty((n, 3, 3), np.complex128)
    # product-rule accumulators
    jv = np.empty(1, np.complex128)
    jd = np.empty(n, np.complex128)
    jb = np.empty(n, np.complex128)
    jdd = np.empty((n, n), np.complex128)
    fv = 0.0 + 0j
    fd = np.empty(n, np.complex128)
    fb = np.empty(n, np.complex128)
    fdd = np.empty((n, n), np.complex128)
    Bm = np.empty((n, n), np.complex128)
    Msub = np.empty((n, n), np.complex128)
    for pt in range(P):
        for m in range(n):
            idx[m] = grid[pt, m]
        for m in range(n):
            for a in range(3):
                for b in range(3):
                    Tp[m, a, b] = tabs[m, a, b, idx[m]]
        # metric derivatives: eps * prod_m T_m[A_m, B_m] (+ c delta for g)
        for i in range(n):
            for j in range(n):
                for kk in range(-1, n):
                    for ll in range(-1, n):
                        v = eps + 0j
                        for m in range(n):
                            a = (1 if m == i else 0) + (1 if m == kk else 0)
                            b = (1 if m == j else 0) + (1 if m == ll else 0)
                            v *= Tp[m, a, b]
                        if kk < 0 and ll < 0:
                            G[i, j] = v + (c if i == j else 0.0)
                        elif ll < 0:
                            dG[i, j, kk] = v
                        elif kk < 0:
                            dbG[i, j, ll] = v
                        else:
                            ddG[i, j, kk, ll] = v
        _inverse(G, Gi)
        # Pk = dG_k Gi, Qk = dbG_k Gi; dGi_k = -Gi Pk, dbGi_k = -Gi Qk
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    s1 = 0j
                    s2 = 0j
                    for a in range(n):
                        s1 += dG[i, a, k] * Gi[a, j]
                        s2 += dbG[i, a, k] * Gi[a, j]
                    Pk[k, i, j] = s1
                    Qk[k, i, j] = s2
            for i in range(n):
                for j in range(n):
                    s1 = 0j
                    s2 = 0j
                    for a in range(n):
                        s1 += Gi[i, a] * Pk[k, a, j]
                        s2 += Gi[i, a] * Qk[k, a, j]
                    dGi[i, j, k] = -s1
                    dbGi[i, j, k] = -s2
        # mixed: Gi (Pk dbG_l + Ql dG_k - ddG_kl) Gi
        for k in range(n):
            for l in range(n):
                for i in range(n):
                    for j in range(n):
                        s = -ddG[i, j, k, l]
                        for a in range(n):
                            s += Pk[k, i, a] * dbG[a, j, l] + Qk[l, i, a] * dG[a, j, k]
                        T1[i, j] = s
                for i in range(n):
                    for j in range(n):
                        s = 0j
                        for a in range(n):
                            s += T1[i, a] * Gi[a, j]
                        T2[i, j] = s
                for i in range(n):
                    for j in range(n):
                        s = 0j
                        for a in range(n):
                            s += Gi[i, a] * T2[a, j]
                        ddGi[i, j, k, l] = s
        # f = |eta|^2 with derivatives; cometric H[i][j] = Gi[j, i]
        fv = 0j
        for a in range(n):
            fd[a] = 0j
            fb[a] = 0j
            for b in range(n):
                fdd[a, b] = 0j
        for ia in range(q):
            for ib in range(q):
                w = nzc[ia] * np.conj(nzc[ib])
                for pp in range(perms.shape[0]):
                    jv[0] = 1.0 + 0j
                    for a in range(n):
                        jd[a] = 0j
                        jb[a] = 0j
                        for b in range(n):
                            jdd[a, b] = 0j
                    for s_ in range(p):
                        r_ = nzI[ia, s_]
                        c_ = nzI[ib, perms[pp, s_]]
                        ev = Gi[c_, r_]
                        # (jv, jd, jb, jdd) *= (ev, dGi, dbGi, ddGi)
                        for a in range(n):
                            for b in range(n):
                                jdd[a, b] = (jv[0] * ddGi[c_, r_, a, b] + ev * jdd[a, b]
                                             + jd[a] * dbGi[c_, r_, b] + dGi[c_, r_, a] * jb[b])
                        for a in range(n):
                            jd[a] = jv[0] * dGi[c_, r_, a] + ev * jd[a]
                            jb[a] = jv[0] * dbGi[c_, r_, a] + ev * jb[a]
                        jv[0] = jv[0] * ev
                    sw = w * psign[pp]
                    fv += sw * jv[0]
                    for a in range(n):
                        fd[a] += sw * jd[a]
                        fb[a] += sw * jb[a]
                        for b in range(n):
                            fdd[a, b] += sw * jdd[a, b]
        # beta in coordinates: (1/p) sum c1 conj(c2) det(H[K, L])
        for a in range(n):
            for b in range(n):
                Bm[a, b] = 0j
        pm1 = p - 1
        for e1 in range(nb):
            for e2 in range(nb):
                for s_ in range(pm1):
                    for t_ in range(pm1):
                        Msub[s_, t_] = Gi[bK[e2, t_], bK[e1, s_]]
                dv = _det(Msub, pm1) if pm1 > 0 else 1.0 + 0j
                Bm[bi[e1], bi[e2]] += bc[e1] * np.conj(bc[e2]) * dv / p
        # integrands
        lap = 0j
        grad = 0j
        for k in range(n):
            for l in range(n):
                lap += Gi[l, k] * fdd[k, l]
                grad += Gi[l, k] * fd[k] * np.conj(fd[l])
        # tr(F Gi B^H Gi)
        pair = 0j
        for a in range(n):
            for b in range(n):
                s = 0j
                for c1 in range(n):
                    for d1 in range(n):
                        s += Gi[a, c1] * np.conj(Bm[d1, c1]) * Gi[d1, b]
                pair += fdd[b, a] * s
        for i in range(n):
            for j in range(n):
                Msub[i, j] = G[i, j]
        vol = _det(Msub, n).real
        out[0, pt] = lap.real * fv.real * vol
        out[1, pt] = p * pair.real * vol
        out[2, pt] = -grad.real * vol
