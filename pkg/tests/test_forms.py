import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from curvlab import forms as Fm
from curvlab import jets as jm
from curvlab import models
from curvlab.berger import random_hermitian_metric
from curvlab.errors import DegreeOverflow, NotHolomorphic, NotKahler
from curvlab.jets import Jet

seeds = st.integers(min_value=0, max_value=2**31)


_dense = O.dense_form
_contract = O.form_contract
_beta_oracle = O.beta_coordinates


def _random(rng, n, p):
    m = math.comb(n, p)
    return rng.standard_normal(m) + 1j * rng.standard_normal(m)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_norm_and_beta_against_dense_contraction(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    p = int(rng.integers(1, n + 1))
    g = random_hermitian_metric(n, rng)
    c = _random(rng, n, p)
    T = _dense(c, n, p)
    ref = _contract(T, T, np.linalg.inv(g), p).real
    assert Fm.norm_squared(c, g, p) == pytest.approx(ref, rel=1e-10)
    beta = Fm.beta_form(c, g, p)
    np.testing.assert_allclose(beta.coord, _beta_oracle(c, g, p), atol=1e-10 * (1 + abs(ref)))
    assert beta.trace() == pytest.approx(ref, rel=1e-10)
    np.testing.assert_allclose(beta.frame, beta.frame.conj().T, atol=1e-12 * (1 + abs(ref)))
    assert np.linalg.eigvalsh(beta.frame).min() >= -1e-10 * (1 + abs(ref))


def test_full_tensor_roundtrip():
    rng = np.random.default_rng(0)
    for n, p in [(3, 1), (4, 2), (4, 3), (5, 2)]:
        c = _random(rng, n, p)
        full = Fm.full_tensor(c, n, p)
        np.testing.assert_array_equal(full, _dense(c, n, p))
        np.testing.assert_array_equal(Fm.increasing_part(full, n, p), c)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_wedge_trace_identity_random(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(1, 4))
    n = int(rng.integers(p + 1, 6))
    g = random_hermitian_metric(n, rng)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    alpha = (A + A.conj().T) / 2
    c = _random(rng, n, p)
    assert Fm.lemma21_check(alpha, c, g, p) < 1e-12
    # scalar side from the dense oracle
    lhs, rhs = Fm.lemma21_sides(alpha, c, g, p)
    ginv = np.linalg.inv(g)
    nrm = _contract(_dense(c, n, p), _dense(c, n, p), ginv, p).real
    beta = _beta_oracle(c, g, p)
    scalar = np.trace(alpha @ ginv) * nrm - p * np.trace(alpha @ ginv @ beta.conj().T @ ginv)
    vol = Fm.omega_form(g).power(n).scale(1 / math.factorial(n)).top()
    assert rhs == pytest.approx(scalar * vol, rel=1e-10)


@pytest.mark.parametrize("n,I", [(3, (0,)), (4, (1, 3)), (5, (0, 2, 4))])
def test_wedge_trace_monomial_closed_form(n, I):
    # flat metric, diagonal alpha, eta = dz^I: the scalar is the alpha-weight outside I
    a = np.arange(1.0, n + 1)
    c = np.zeros(math.comb(n, len(I)), complex)
    c[list(itertools.combinations(range(n), len(I))).index(I)] = 1.0
    lhs, rhs = Fm.lemma21_sides(np.diag(a), c, np.eye(n), len(I))
    vol = Fm.top_form_unit(n)
    assert lhs == pytest.approx(sum(a[i] for i in range(n) if i not in I) * vol, abs=1e-12)
    assert rhs == pytest.approx(lhs, abs=1e-12)


def test_wedge_trace_degree_overflow():
    with pytest.raises(DegreeOverflow):
        Fm.lemma21_sides(np.eye(2), np.ones(1), np.eye(2), 2)
    with pytest.raises(DegreeOverflow):
        Fm.FormField.constant(2, 3, [])


def test_exterior_algebra_rules():
    rng = np.random.default_rng(1)
    n = 3
    a = Fm.ExtForm.holomorphic(n, 1, _random(rng, n, 1))
    b = Fm.ExtForm.holomorphic(n, 1, _random(rng, n, 1))
    # odd forms anticommute, squares vanish
    s = a.wedge(b) + b.wedge(a)
    assert s.max_abs() < 1e-14
    assert a.wedge(a).max_abs() < 1e-14
    # conjugation is an involution
    ab = a.wedge(b.conj())
    back = ab.conj().conj() - ab
    assert back.max_abs() < 1e-14
    # prod_j i dz^j ^ dzbar^j is a positive multiple of the orientation form
    assert Fm.top_form_unit(1) == pytest.approx(1j)


def test_exterior_derivatives_square_to_zero():
    t = np.array([0.2, -0.4, 0.7, 0.1])
    x1, x2, y1, y2 = Jet.seed(t, 3)
    f = jm.sin(x1 * y2) + jm.exp(x2 - y1) * y1
    h = jm.cos(x1 + x2) * y2
    form = Fm.ExtForm(2, {0b0001: f, 0b1000: h})
    for op in ("d_hol", "d_anti", "d"):
        twice = getattr(getattr(form, op)(), op)()
        assert twice.max_abs() < 1e-12, op
    mixed = form.d_hol().d_anti() + form.d_anti().d_hol()
    assert mixed.max_abs() < 1e-12


@pytest.mark.parametrize("n,lams", [(4, [3.0, 1.0]), (5, [2.0, 2.0]), (4, [1.5])])
def test_canonical_pair_form(n, lams):
    rng = np.random.default_rng(n)
    g = random_hermitian_metric(n, rng)
    E = Fm.orthonormal_frame(g)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    D = Fm.pair_blocks(lams, n)
    # sigma with frame components Q D Q^T in the g-unitary frame E
    Ei = np.linalg.inv(E)
    sigma = Ei.T @ (Q @ D @ Q.T) @ Ei
    out = Fm.canonical_pair_form(sigma, g)
    assert out.k == len(lams)
    np.testing.assert_allclose(sorted(out.lambdas), sorted(lams), atol=1e-10)
    assert out.reconstruction_error < 1e-10
    F = out.frame
    np.testing.assert_allclose(F.T @ g @ F.conj(), np.eye(n), atol=1e-10)
    assert out.top_power_coefficient == pytest.approx(math.factorial(len(lams)) * np.prod(lams), rel=1e-10)
    assert out.next_power_max < 1e-10


def test_canonical_pair_form_rejects_symmetric():
    with pytest.raises(ValueError):
        Fm.canonical_pair_form(np.eye(3))


def test_wedge_power_coefficients():
    sigma = Fm.pair_blocks([2.0, 5.0], 4)
    assert Fm.wedge_power_coeffs(sigma, 2)[0] == pytest.approx(2 * 2.0 * 5.0)
    assert Fm.wedge_power_coeffs(sigma, 3).size == 0


def _unit(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("name,n,p", [("fubini_study", 2, 1), ("fubini_study", 3, 2),
                                      ("perturbed_torus", 2, 1), ("perturbed_torus", 3, 2)])
def test_pointwise_bochner_identity(name, n, p):
    model = models.build(name, n=n)
    rng = np.random.default_rng(n + p)
    form = Fm.FormField.constant(n, p, _random(rng, n, p))
    for t in models.sample_points(model, 4, rng):
        res = Fm.lemma22_check(form, model, t, _unit(rng, n), _unit(rng, n))
        assert res.residual < 1e-6
        assert res.bundle_residual < 1e-6
        assert res.kahler


def test_pointwise_bochner_nonconstant_holomorphic():
    # eta = (1 + z1^2) dz0 on CP^2: z1^2 = (x1 + i y1)^2
    model = models.fubini_study(2)
    form = Fm.FormField(2, 1, lambda x, y: [1 + (x[1] * x[1] - y[1] * y[1]) + 2j * x[1] * y[1], 0.0],
                        holomorphic=True)
    rng = np.random.default_rng(3)
    t = np.array([0.3, -0.2, 0.1, 0.4])
    res = Fm.lemma22_check(form, model, t, _unit(rng, 2), _unit(rng, 2))
    assert res.residual < 1e-6


def test_pointwise_bochner_guards():
    hopf = models.hopf(2)
    form = Fm.FormField.constant(2, 1, [1.0, 0.0])
    t = np.array([1.1, 0.3, -0.4, 0.2])  # |z| inside the annulus
    u = np.array([1.0, 0.0])
    with pytest.raises(NotKahler):
        Fm.lemma22_check(form, hopf, t, u, u)
    assert not Fm.lemma22_check(form, hopf, t, u, u, kahler_gate=False).kahler
    bad = Fm.FormField(2, 1, lambda x, y: [x[0], 0.0])
    with pytest.raises(NotHolomorphic):
        Fm.lemma22_check(bad, models.fubini_study(2), t * 0.3, u, u)
