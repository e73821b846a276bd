import itertools

import numpy as np
import pytest

import oracles as O
from curvlab import bochner as Bo
from curvlab import models
from curvlab.errors import NotKahler, NotTorusModel, WrongDimension
from curvlab.forms import FormField, multi_indices


def _oracle_integrals(n, eps, I, N):
    metric = O.symbolic_metric("perturbed_torus", n, eps)
    p = len(I)
    coeffs = np.zeros(len(multi_indices(n, p)), complex)
    coeffs[multi_indices(n, p).index(tuple(I))] = 1.0
    tot = np.zeros(3)
    for t in itertools.product(np.arange(N) / N, repeat=2 * n):
        g, dg, dbg, ddg = metric(t)
        Gi = np.linalg.inv(g)
        f, df, dbf, F = O.det_minor_derivatives(Gi, dg, dbg, ddg, list(I))
        vol = np.linalg.det(g).real
        lap = np.einsum("lk,kl->", Gi, F).real
        beta = O.beta_coordinates(coeffs, g, p)
        pair = np.trace(F @ Gi @ beta.conj().T @ Gi).real
        grad = np.einsum("k,lk,l->", df, Gi, dbf).real
        tot += np.array([lap * f, p * pair, -grad]) * vol
    return tot / N ** (2 * n), coeffs


@pytest.mark.parametrize("n,I,N", [(2, (0, 1), 6), (3, (0, 1), 4)])
def test_quadrature_sums_match_symbolic_oracle(n, I, N):
    eps = 0.05
    ref, coeffs = _oracle_integrals(n, eps, I, N)
    form = FormField.constant(n, len(I), coeffs)
    model = models.perturbed_torus(n, eps)
    for engine in ("numba", "numpy"):
        for sym in (True, False):
            got, count = Bo.bochner_quadrature(model, form, N, use_symmetry=sym, engine=engine)
            np.testing.assert_allclose(got, ref, rtol=1e-10, atol=1e-12)
            if not sym:
                assert count == N ** (2 * n)


def test_symmetry_reduction_with_general_form():
    rng = np.random.default_rng(0)
    coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    form = FormField.constant(3, 2, coeffs)
    model = models.perturbed_torus(3, 0.03)
    full, nf = Bo.bochner_quadrature(model, form, 4, use_symmetry=False)
    red, nr = Bo.bochner_quadrature(model, form, 4, use_symmetry=True)
    np.testing.assert_allclose(red, full, rtol=1e-12, atol=1e-14)
    assert nr <= nf
    # the single-monomial form admits the full reduction
    mono = FormField.constant(3, 2, [1.0, 0.0, 0.0])
    a, na = Bo.bochner_quadrature(model, mono, 4, use_symmetry=False)
    b, nb = Bo.bochner_quadrature(model, mono, 4, use_symmetry=True)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
    assert nb < na


def test_integral_identity_on_perturbed_torus():
    model = models.perturbed_torus(3, 0.02)
    r = Bo.integral_bochner_check(model, FormField.constant(3, 2, [1.0, 0.0, 0.0]), 16)
    assert r.passed
    assert r.scale > 1e-5  # the integrals are not trivially zero
    assert r.residual_12 < 1e-9 * r.scale and r.residual_13 < 1e-9 * r.scale


def test_integral_identity_on_flat_torus_is_zero():
    r = Bo.integral_bochner_check(models.flat_torus(2), FormField.constant(2, 2, [1.0]), 8)
    assert r.I1 == r.I2 == r.I3 == 0.0
    assert r.passed


def test_integral_identity_guards():
    form = FormField.constant(3, 2, [1.0, 0.0, 0.0])
    with pytest.raises(NotKahler):
        Bo.integral_bochner_check(models.twisted_torus(3, 0.02), form, 8)
    with pytest.raises(ValueError):
        Bo.integral_bochner_check(models.perturbed_torus(3), FormField.constant(3, 1, [1.0, 0, 0]), 8)
    with pytest.raises(NotTorusModel):
        Bo.integral_bochner_check(models.fubini_study(3), form, 8)
    wavy = FormField.from_dict(3, 2, {(0, 1): lambda x, y: x[0] * 0 + 1 + 0.1 * y[2]})
    with pytest.raises(ValueError):
        Bo.bochner_quadrature(models.perturbed_torus(3), wavy, 4)


def test_scalar_mean_vanishes_and_matches_oracle():
    # total scalar curvature of a Kähler torus metric is zero
    n, eps, N = 2, 0.05, 6
    m = Bo.scalar_curvature_mean(models.perturbed_torus(n, eps), N)
    metric = O.symbolic_metric("perturbed_torus", n, eps)
    s = v = 0.0
    for t in itertools.product(np.arange(N) / N, repeat=2 * n):
        g, R = O.oracle_curvature("perturbed_torus", n, t, eps)
        Gi = np.linalg.inv(g)
        S = np.einsum("ijkl,lk,ji->", R, Gi, Gi).real
        vol = np.linalg.det(g).real
        s, v = s + S * vol, v + vol
    assert m.volume == pytest.approx(v / N ** (2 * n), rel=1e-12)
    assert m.mean == pytest.approx(s / v, abs=1e-12)
    assert abs(Bo.scalar_curvature_mean(models.perturbed_torus(n, eps), 16).mean) < 1e-12
    big = Bo.scalar_curvature_mean(models.perturbed_torus(3, 0.05), 12)
    assert abs(big.mean) < 1e-12 and big.points < 12**6


def test_scalar_mean_twisted_torus_generic_path():
    m = Bo.scalar_curvature_mean(models.twisted_torus(2, 0.05), 8)
    assert np.isfinite(m.mean) and m.volume > 0


def test_exact_forms_integrate_to_zero():
    for model in (models.flat_torus(2), models.perturbed_torus(2, 0.05)):
        val = Bo.exact_form_integral(model, Bo.default_exact_potential(2), 8)
        assert abs(val) < 1e-12


def test_stokes_bookkeeping_small_grid():
    forms = Bo.stokes_test_forms(3)
    model = models.flat_torus(3)
    closed = Bo.threefold_stokes_check(model, forms["del_closed"], 6)
    assert abs(closed.J) < 1e-12
    assert closed.stokes_residual < 1e-10
    generic = Bo.threefold_stokes_check(model, forms["generic"], 6)
    assert generic.stokes_residual < 1e-10
    assert generic.exact_residual < 1e-10
    assert abs(generic.J) > 1.0


def test_stokes_forms_are_what_they_claim():
    forms = Bo.stokes_test_forms(3)
    pts = np.random.default_rng(0).random((5, 6))
    with pytest.raises(Exception):
        forms["del_closed"].check_holomorphic(pts)
    _, dz, _ = forms["del_closed"].wirtinger_derivatives(pts)
    # del eta has the single component dz0 dz1 dz2: d0 eta_12 - d1 eta_02 + d2 eta_01
    comp = dz[:, 2, 0] - dz[:, 1, 1] + dz[:, 0, 2]
    assert np.max(np.abs(comp)) < 1e-12


def test_stokes_guards():
    with pytest.raises(WrongDimension):
        Bo.stokes_test_forms(2)
    form = FormField.constant(3, 1, [1.0, 0.0, 0.0])
    with pytest.raises(WrongDimension):
        Bo.threefold_stokes_check(models.flat_torus(3), form, 4)
    with pytest.raises(WrongDimension):
        Bo.threefold_stokes_check(models.flat_torus(2), FormField.constant(2, 2, [1.0]), 4)
