"""Sphere averages of curvature functionals: closed-form moments and Monte Carlo.

On the unit sphere of C^k (uniform measure)::

    E[Z_i conj(Z_j)]                    = delta_ij / k
    E[Z_i conj(Z_j) Z_k conj(Z_l)]      = (delta_ij delta_kl + delta_il delta_kj) / (k (k + 1))

Monte Carlo samples are normalised standard complex Gaussians, which are exactly
uniform on the sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import functionals as F
from .errors import DegenerateDenominator
from .geometry import CurvatureTensor, orthonormal_frame

MIN_SAMPLES = 1000
CHUNK = 1 << 16


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    count: int
    seed: int

    def within(self, value: float, nsigma: float = 4.0) -> bool:
        # the floor covers constant integrands, where stderr is exactly zero
        floor = 64 * np.finfo(float).eps * max(1.0, abs(value), abs(self.mean))
        return abs(self.mean - value) <= nsigma * self.stderr + floor


def sphere_volume(k: int) -> float:
    """Vol(S^{2k-1}) = 2 pi^k / (k-1)!."""
    if k < 1:
        raise ValueError("k >= 1")
    return 2 * math.pi**k / math.factorial(k - 1)


def second_moment(k: int) -> np.ndarray:
    return np.eye(k) / k


def fourth_moment(k: int) -> np.ndarray:
    d = np.eye(k)
    return (np.einsum("ij,kl->ijkl", d, d) + np.einsum("il,kj->ijkl", d, d)) / (k * (k + 1))


def sphere_samples(rng: np.random.Generator, count: int, k: int) -> np.ndarray:
    z = rng.standard_normal((count, k)) + 1j * rng.standard_normal((count, k))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _mc(values_fn, k: int, count: int, seed: int, scale: float) -> MonteCarloEstimate:
    if count < MIN_SAMPLES:
        raise ValueError(f"Monte Carlo needs at least {MIN_SAMPLES} samples")
    rng = np.random.default_rng(seed)
    s1 = s2 = 0.0
    done = 0
    while done < count:
        m = min(CHUNK, count - done)
        v = values_fn(sphere_samples(rng, m, k))
        s1 += float(np.sum(v))
        s2 += float(np.sum(v * v))
        done += m
    mean = s1 / count
    var = max(s2 / count - mean * mean, 0.0) * count / (count - 1)
    return MonteCarloEstimate(mean * scale, math.sqrt(var / count) * abs(scale), count, seed)


def _quartic_values(Rs: np.ndarray):
    k = Rs.shape[0]
    M = Rs.reshape(k * k, k * k)

    def fn(Z):
        P = (Z[:, :, None] * np.conj(Z)[:, None, :]).reshape(len(Z), k * k)
        return np.sum((P @ M.T) * P, axis=1).real

    return fn


def _basis(R: CurvatureTensor, basis) -> np.ndarray:
    if basis is None:
        return orthonormal_frame(R.g)
    return F.check_unitary_basis(R.g, basis)


def average_H_over_sphere(R: CurvatureTensor, basis=None, mode: str = "closed_form",
                          samples: int = 100_000, seed: int = 0):
    """k(k+1)/2 times the mean of H over the unit sphere of span(basis).

    For Kähler-symmetric tensors this equals ``k_scalar(R, basis)``.
    """
    E = _basis(R, basis)
    k = E.shape[-1]
    Rs = R.in_frame(E)
    scale = k * (k + 1) / 2
    if mode == "closed_form":
        return float(np.einsum("abcd,abcd->", Rs, fourth_moment(k)).real * scale)
    if mode == "monte_carlo":
        return _mc(_quartic_values(Rs), k, samples, seed, scale)
    raise ValueError(f"unknown mode {mode!r}")


def sphere_average_quadratic(A: np.ndarray, mode: str = "closed_form", samples: int = 100_000,
                             seed: int = 0):
    """n times the sphere mean of sum A_ij Z_i conj(Z_j) (equals tr A)."""
    A = np.asarray(A, complex)
    n = A.shape[0]
    if mode == "closed_form":
        return float(np.einsum("ij,ij->", A, second_moment(n)).real * n)
    if mode == "monte_carlo":
        return _mc(lambda Z: np.einsum("ij,mi,mj->m", A, Z, np.conj(Z)).real, n, samples, seed, n)
    raise ValueError(f"unknown mode {mode!r}")


def average_ricci_over_sphere(R: CurvatureTensor, mode: str = "closed_form", samples: int = 100_000,
                              seed: int = 0):
    """n / Vol(S^{2n-1}) times the integral of Ric(Z, Zbar); equals the scalar curvature."""
    E = orthonormal_frame(R.g)
    ric = np.einsum("ij,ia,jb->ab", F.chern_ricci(R), E, np.conj(E))
    return sphere_average_quadratic(ric, mode, samples, seed)


def mixed_average_identity(R: CurvatureTensor, params: F.MixedParams, mode: str = "closed_form",
                           samples: int = 100_000, seed: int = 0):
    """(S, n(n+1)/((n+1)a+2b) * mean C_{a,b}, residual)."""
    n = R.n
    a, b = params.a, params.b
    denom = (n + 1) * a + 2 * b
    if abs(denom) < 1e-14:
        raise DegenerateDenominator("(n+1)a + 2b vanishes")
    lhs = float(F.scalar_curvature(R))
    E = orthonormal_frame(R.g)
    Rf = R.in_frame(E)
    ric = np.einsum("abcc->ab", Rf)
    factor = n * (n + 1) / denom
    if mode == "closed_form":
        mean = (a * np.einsum("ij,ij->", ric, second_moment(n)).real
                + b * np.einsum("abcd,abcd->", Rf, fourth_moment(n)).real)
        rhs = float(factor * mean)
        return lhs, rhs, abs(lhs - rhs)
    if mode == "monte_carlo":
        quart = _quartic_values(Rf)
        est = _mc(lambda Z: a * np.einsum("ij,mi,mj->m", ric, Z, np.conj(Z)).real + b * quart(Z),
                  n, samples, seed, factor)
        return lhs, est, abs(lhs - est.mean)
    raise ValueError(f"unknown mode {mode!r}")


def subspace_average_vs_min(R: CurvatureTensor, basis, params: F.MixedParams, seed: int = 0,
                            minimum: Optional[float] = None):
    """Frame-adapted average of C_{a,b} over a 2k-dimensional subspace against the pointwise minimum.

    The Ricci term uses the full Ricci form on the frame vectors.  Returns
    (average, minimum, average - minimum).
    """
    from .positivity import min_over_directions

    E = F.check_unitary_basis(R.g, basis)
    m = E.shape[-1]
    if m % 2 or m > R.n:
        raise ValueError("subspace must have even dimension 2k <= n")
    ric = F.chern_ricci(R)
    ric_sum = float(np.einsum("ij,ia,ja->", ric, E, np.conj(E)).real)
    sk = float(F.k_scalar(R, E))
    avg = params.a / m * ric_sum + 2 * params.b / (m * (m + 1)) * sk
    if minimum is None:
        minimum = min_over_directions(R, "C", params.a, params.b, seed=seed).value
    return avg, minimum, avg - minimum


def random_kahler_tensor(n: int, rng: np.random.Generator, g: Optional[np.ndarray] = None) -> CurvatureTensor:
    """Random tensor with the Kähler curvature symmetries (and conjugation symmetry)."""
    T = rng.standard_normal((n,) * 4) + 1j * rng.standard_normal((n,) * 4)
    T = 0.5 * (T + T.transpose(2, 1, 0, 3))
    T = 0.5 * (T + T.transpose(0, 3, 2, 1))
    T = 0.5 * (T + np.conj(T.transpose(1, 0, 3, 2)))
    if g is None:
        g = np.eye(n, dtype=complex)
    return CurvatureTensor(R=T, g=np.asarray(g, complex))


def random_hermitian_metric(n: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A @ np.conj(A.T) + n * np.eye(n)
