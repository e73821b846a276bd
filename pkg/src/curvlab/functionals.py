"""Curvature functionals evaluated from a precomputed :class:`CurvatureTensor`.

Vectors are (1,0)-vectors in coordinate components.  All functionals of a single
vector are invariant under ``X -> lambda X``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidWeights, VectorNotInSubspace, ZeroVector
from .geometry import CurvatureTensor, inner, norm_sq

ZERO_TOL = 1e-14
SUBSPACE_TOL = 1e-8


@dataclass(frozen=True)
class MixedParams:
    a: float
    b: float

    @property
    def projectivity_regime(self) -> bool:
        return self.a >= 0 and 3 * self.a + 2 * self.b >= 0

    @property
    def rc_regime(self) -> bool:
        return self.a >= 0 and self.b >= 0


def _norm_sq_checked(g, X) -> np.ndarray:
    nrm = norm_sq(g, X)
    scale = np.max(np.abs(X), axis=-1) ** 2 if np.ndim(X) else abs(X) ** 2
    if np.any(nrm <= ZERO_TOL * np.maximum(scale, 1e-300)) or np.any(scale == 0):
        raise ZeroVector("functional evaluated on the zero vector")
    return nrm


def quartic(R: CurvatureTensor, X) -> np.ndarray:
    """R(X, Xbar, X, Xbar), real by conjugation symmetry."""
    return R(X, X, X, X).real


def holo_sectional(R: CurvatureTensor, X) -> np.ndarray:
    X = np.asarray(X, complex)
    nrm = _norm_sq_checked(R.g, X)
    return quartic(R, X) / nrm**2


def chern_ricci(R: CurvatureTensor, ginv=None) -> np.ndarray:
    """R_{i jbar} = g^{k lbar} R_{i jbar k lbar} (contraction of the last index pair)."""
    if ginv is None:
        ginv = R.ginv
    cometric = np.swapaxes(ginv, -1, -2)
    return np.einsum("...ijkl,...kl->...ij", R.R, cometric)


def scalar_curvature(R: CurvatureTensor) -> np.ndarray:
    ric = chern_ricci(R)
    return np.einsum("...ij,...ij->...", ric, np.swapaxes(R.ginv, -1, -2)).real


def ricci_value(R: CurvatureTensor, X, ric=None) -> np.ndarray:
    """Ric(X, Xbar) / |X|^2."""
    X = np.asarray(X, complex)
    nrm = _norm_sq_checked(R.g, X)
    if ric is None:
        ric = chern_ricci(R)
    return inner(ric, X, X).real / nrm


def mixed_curvature(R: CurvatureTensor, X, params: MixedParams, ric=None) -> np.ndarray:
    out = 0.0
    if params.a != 0:
        out = out + params.a * ricci_value(R, X, ric)
    if params.b != 0:
        out = out + params.b * holo_sectional(R, X)
    if params.a == 0 and params.b == 0:
        _norm_sq_checked(R.g, np.asarray(X, complex))
        out = np.zeros(np.shape(X)[:-1])
    return out


def check_unitary_basis(g, basis, tol: float = 1e-10):
    basis = np.asarray(basis, complex)
    gram = np.einsum("...ia,...ij,...jb->...ab", basis, g, np.conj(basis))
    k = basis.shape[-1]
    if np.max(np.abs(gram - np.eye(k))) > tol:
        raise ValueError("subspace basis is not g-orthonormal")
    return basis


def project_to_subspace(g, basis, X) -> np.ndarray:
    coeffs = np.einsum("...i,...ij,...ja->...a", X, g, np.conj(basis))
    return np.einsum("...ia,...a->...i", basis, coeffs)


def k_ricci(R: CurvatureTensor, basis, X) -> np.ndarray:
    """Ric_k(X, Xbar) = sum_{i<=k} R(X, Xbar, e_i, ebar_i) for X in span(basis).

    ``X`` is normalised first so the value is the one at unit length.
    """
    basis = check_unitary_basis(R.g, basis)
    X = np.asarray(X, complex)
    nrm = _norm_sq_checked(R.g, X)
    resid = X - project_to_subspace(R.g, basis, X)
    if np.any(np.sqrt(norm_sq(R.g, resid) / nrm) > SUBSPACE_TOL):
        raise VectorNotInSubspace("X does not lie in the given subspace")
    E = basis
    val = np.einsum("...ijkl,...i,...j,...ka,...la->...", R.R, X, np.conj(X), E, np.conj(E)).real
    return val / nrm


def k_scalar(R: CurvatureTensor, basis) -> np.ndarray:
    basis = check_unitary_basis(R.g, basis)
    E, Ec = basis, np.conj(basis)
    return np.einsum("...ijkl,...ia,...ja,...kb,...lb->...", R.R, E, Ec, E, Ec).real


def bisectional_matrix(R: CurvatureTensor, E) -> np.ndarray:
    """M_{ij} = R(e_i, ebar_i, e_j, ebar_j) as a complex matrix."""
    E = np.asarray(E, complex)
    Ec = np.conj(E)
    return np.einsum("...pqrs,...pi,...qi,...rj,...sj->...ij", R.R, E, Ec, E, Ec)


def real_bisectional(R: CurvatureTensor, E, a) -> np.ndarray:
    a = np.asarray(a, float)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise InvalidWeights("weights must be finite and nonnegative")
    nrm = np.sum(a * a, axis=-1)
    if np.any(nrm == 0):
        raise InvalidWeights("weights must not all vanish")
    M = bisectional_matrix(R, E).real
    return np.einsum("...i,...ij,...j->...", a, M, a) / nrm


FUNCTIONALS = ("H", "Ric", "S", "C", "Ric_k", "S_k", "B")
