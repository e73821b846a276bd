import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from curvlab import berger as B
from curvlab import functionals as F
from curvlab import models
from curvlab.errors import DegenerateDenominator
from curvlab.geometry import chern_curvature, metric_jet, orthonormal_frame

seeds = st.integers(min_value=0, max_value=2**31)


def _s3_quadrature(fn, m=12):
    """Exact average over S^3 in Hopf coordinates for low-degree polynomials in Z, Zbar."""
    u, w = np.polynomial.legendre.leggauss(m)
    theta = (u + 1) * np.pi / 4
    wt = w * np.pi / 4 * np.sin(theta) * np.cos(theta)
    phi = np.arange(m) * 2 * np.pi / m
    T, P1, P2 = np.meshgrid(theta, phi, phi, indexing="ij")
    W = np.broadcast_to(wt[:, None, None], T.shape)
    Z = np.stack([np.cos(T) * np.exp(1j * P1), np.sin(T) * np.exp(1j * P2)], axis=-1).reshape(-1, 2)
    W = W.reshape(-1)
    return float(np.sum(W * fn(Z)) / np.sum(W))


def test_sphere_volume():
    # S^1, S^3, S^5
    assert B.sphere_volume(1) == pytest.approx(2 * math.pi)
    assert B.sphere_volume(2) == pytest.approx(2 * math.pi**2)
    assert B.sphere_volume(3) == pytest.approx(math.pi**3)


def test_moments_against_hopf_quadrature():
    M4 = B.fourth_moment(2)
    M2 = B.second_moment(2)
    for i, j, k, l in np.ndindex(2, 2, 2, 2):
        ref = _s3_quadrature(lambda Z: (Z[:, i] * Z[:, j].conj() * Z[:, k] * Z[:, l].conj()).real)
        assert M4[i, j, k, l] == pytest.approx(ref, abs=1e-13)
    for i, j in np.ndindex(2, 2):
        assert M2[i, j] == pytest.approx(_s3_quadrature(lambda Z: (Z[:, i] * Z[:, j].conj()).real), abs=1e-13)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_moments_against_independent_sampling(k):
    Z = O.sphere_points(np.random.default_rng(k), 400_000, k)
    emp = np.einsum("mi,mj,mk,ml->ijkl", Z, Z.conj(), Z, Z.conj(), optimize=True).real / len(Z)
    np.testing.assert_allclose(B.fourth_moment(k), emp, atol=5e-3)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_average_of_H_is_k_scalar(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    g = B.random_hermitian_metric(n, rng)
    R = B.random_kahler_tensor(n, rng, g=g)
    E = orthonormal_frame(g)
    k = int(rng.integers(1, n + 1))
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))
    basis = E @ Q
    want = F.k_scalar(R, basis)
    assert B.average_H_over_sphere(R, basis) == pytest.approx(want, rel=1e-10, abs=1e-10)


def test_average_of_H_on_two_plane_by_quadrature():
    rng = np.random.default_rng(2)
    R = B.random_kahler_tensor(2, rng)
    Rf = R.R
    ref = 3 * _s3_quadrature(lambda Z: np.einsum("ijkl,mi,mj,mk,ml->m", Rf, Z, Z.conj(), Z, Z.conj()).real)
    assert B.average_H_over_sphere(R) == pytest.approx(ref, abs=1e-12)
    assert B.average_H_over_sphere(R) == pytest.approx(F.scalar_curvature(R), abs=1e-12)


def test_monte_carlo_brackets_closed_form():
    rng = np.random.default_rng(0)
    R = B.random_kahler_tensor(3, rng, g=B.random_hermitian_metric(3, rng))
    exact = B.average_H_over_sphere(R)
    est = B.average_H_over_sphere(R, mode="monte_carlo", samples=200_000, seed=1)
    assert est.within(exact)
    assert est.count == 200_000
    again = B.average_H_over_sphere(R, mode="monte_carlo", samples=200_000, seed=1)
    assert again == est


def test_ricci_average_is_scalar():
    rng = np.random.default_rng(5)
    R = B.random_kahler_tensor(4, rng, g=B.random_hermitian_metric(4, rng))
    S = F.scalar_curvature(R)
    assert B.average_ricci_over_sphere(R) == pytest.approx(S, rel=1e-12)
    assert B.average_ricci_over_sphere(R, mode="monte_carlo", samples=100_000).within(S)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_mixed_average_identity(seed, a, b):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    R = B.random_kahler_tensor(n, rng, g=B.random_hermitian_metric(n, rng))
    if abs((n + 1) * a + 2 * b) < 1e-3:
        return
    lhs, rhs, resid = B.mixed_average_identity(R, F.MixedParams(a, b))
    scale = 1 + abs(lhs) * (1 + (abs(a) + abs(b)) / abs((n + 1) * a + 2 * b))
    assert resid < 1e-11 * scale


def test_mixed_average_on_fubini_study():
    model = models.fubini_study(3)
    R = chern_curvature(metric_jet(model, np.array([0.1, -0.2, 0.3, 0.0, 0.2, 0.1])))
    lhs, est, resid = B.mixed_average_identity(R, F.MixedParams(1, -1), mode="monte_carlo",
                                               samples=50_000, seed=3)
    assert lhs == pytest.approx(12.0, abs=1e-9)
    assert est.within(lhs)


def test_degenerate_denominator():
    R = B.random_kahler_tensor(2, np.random.default_rng(0))
    with pytest.raises(DegenerateDenominator):
        B.mixed_average_identity(R, F.MixedParams(2, -3))


def test_subspace_average_dominates_minimum():
    rng = np.random.default_rng(8)
    g = B.random_hermitian_metric(4, rng)
    R = B.random_kahler_tensor(4, rng, g=g)
    E = orthonormal_frame(g)
    for a, b in [(1.0, -1.0), (0.0, 1.0), (2.0, 1.0)]:
        avg, mn, gap = B.subspace_average_vs_min(R, E[:, :2], F.MixedParams(a, b))
        assert gap >= -1e-9
        assert avg - mn == pytest.approx(gap)


def test_input_validation():
    R = B.random_kahler_tensor(3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        B.subspace_average_vs_min(R, np.eye(3)[:, :1], F.MixedParams(1, 0))
    with pytest.raises(ValueError):
        B.average_H_over_sphere(R, mode="monte_carlo", samples=10)
    with pytest.raises(ValueError):
        B.average_H_over_sphere(R, mode="bogus")
    with pytest.raises(ValueError):
        B.sphere_volume(0)
