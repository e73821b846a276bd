import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from curvlab import functionals as F
from curvlab import models
from curvlab import positivity as P
from curvlab.berger import random_hermitian_metric, random_kahler_tensor
from curvlab.errors import UnknownFunctional
from curvlab.geometry import orthonormal_frame
from curvlab.quadrature import ScanGrid, sampled_grid

seeds = st.integers(min_value=0, max_value=2**31)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=4))
def test_copositive_minimum_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    M = M + M.T
    vals, a = P.min_on_nonneg_sphere(M)
    ref = O.brute_min_nonneg_sphere(M, O.simplex_sphere_lattice(n, {1: 1, 2: 400, 3: 60, 4: 24}[n]))
    assert float(vals) <= ref + 1e-9
    assert float(vals) == pytest.approx(ref, abs=1e-6)
    assert np.all(a >= 0) and np.linalg.norm(a) == pytest.approx(1.0)
    assert a @ (0.5 * (M + M.T)) @ a == pytest.approx(float(vals), abs=1e-12)


def test_copositive_batched_and_projected_gradient():
    rng = np.random.default_rng(1)
    Ms = rng.standard_normal((6, 3, 3))
    vals, _ = P.min_on_nonneg_sphere(Ms)
    assert vals.shape == (6,)
    for M, v in zip(Ms, vals):
        assert P.min_on_nonneg_sphere_pg(M)[0] == pytest.approx(float(v), abs=1e-6)


def test_copositive_known_cases():
    # identity: 1; off-diagonal -1 block: 0 along (1, 1)/sqrt 2
    assert float(P.min_on_nonneg_sphere(np.eye(3))[0]) == pytest.approx(1.0)
    M = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert float(P.min_on_nonneg_sphere(M)[0]) == pytest.approx(0.0, abs=1e-14)


def _sampled_min(fun, n, rng, count=20000):
    X = O.sphere_points(rng, count, n)
    return min(fun(x) for x in X)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_direction_minimum_below_dense_sampling(seed):
    rng = np.random.default_rng(seed)
    R = random_kahler_tensor(2, rng, g=random_hermitian_metric(2, rng))
    E = orthonormal_frame(R.g)
    for a, b in [(0.0, 1.0), (1.0, -1.0), (2.0, 1.0)]:
        res = P.min_over_directions(R, "C", a, b, seed=seed)
        assert res.converged
        p = F.MixedParams(a, b)
        sampled = _sampled_min(lambda u: F.mixed_curvature(R, E @ u, p), 2, rng, 4000)
        assert res.value <= sampled + 1e-9
        assert res.value == pytest.approx(sampled, abs=5e-2 * (1 + abs(sampled)))
        assert P.reevaluate(R, P.FunctionalSpec("C", a, b), res.witness) == pytest.approx(res.value)


def test_ricci_minimum_is_smallest_eigenvalue():
    rng = np.random.default_rng(4)
    g = random_hermitian_metric(3, rng)
    R = random_kahler_tensor(3, rng, g=g)
    ric = F.chern_ricci(R)
    # generalized Hermitian eigenproblem ric v = lam g v
    L = np.linalg.cholesky(g)
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(Li @ ric @ Li.conj().T)[0]
    assert P.min_over_directions(R, "Ric").value == pytest.approx(lam, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_k_ricci_and_k_scalar_bounds(k):
    rng = np.random.default_rng(10 + k)
    g = random_hermitian_metric(3, rng)
    R = random_kahler_tensor(3, rng, g=g)
    E = orthonormal_frame(g)
    res = P.min_k_ricci(R, k, seed=0)
    X, basis = res.witness
    assert F.k_ricci(R, basis, X) == pytest.approx(res.value, abs=1e-10)
    rs = P.min_k_scalar(R, k, seed=0)
    assert F.k_scalar(R, rs.witness) == pytest.approx(rs.value, abs=1e-10)
    # random subspaces never beat the optimiser
    for _ in range(200):
        Q, _ = np.linalg.qr(rng.standard_normal((3, k)) + 1j * rng.standard_normal((3, k)))
        B = E @ Q
        assert F.k_scalar(R, B) >= rs.value - 1e-9
        assert F.k_ricci(R, B, B[:, 0]) >= res.value - 1e-9
    # averaging: S_k / k is a mean of Ric_k values, so min Ric_k <= S_k min / k
    assert res.value <= rs.value / k + 1e-9


def test_bisectional_minimum_below_random_frames():
    rng = np.random.default_rng(7)
    g = random_hermitian_metric(2, rng)
    R = random_kahler_tensor(2, rng, g=g)
    E = orthonormal_frame(g)
    res = P.min_real_bisectional(R, seed=0)
    Ew, a = res.witness
    assert F.real_bisectional(R, Ew, a) == pytest.approx(res.value, abs=1e-9)
    for _ in range(300):
        Q, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        w = np.abs(rng.standard_normal(2))
        assert F.real_bisectional(R, E @ Q, w) >= res.value - 1e-8


def test_k_ricci_estimate_holds_on_random_tensors():
    rng = np.random.default_rng(3)
    for n, k in [(3, 2), (4, 2), (4, 3)]:
        R = random_kahler_tensor(n, rng, g=random_hermitian_metric(n, rng))
        out = P.lemma23_check(R, k, O.sphere_points(rng, 50, n), seed=0)
        assert out["violation"] <= 1e-8 * (1 + out["max_abs_gap"])


def test_classify_minima_labels():
    assert P.classify_minima(np.array([1.0, 2.0])) == "positive"
    assert P.classify_minima(np.array([0.0, 2.0])) == "quasi_positive"
    assert P.classify_minima(np.array([0.0, 0.0])) == "nonnegative_flat"
    assert P.classify_minima(np.array([-1.0, 2.0])) == "indefinite"


@pytest.mark.parametrize("name,n,spec,want", [
    ("fubini_study", 2, P.FunctionalSpec("H"), "positive"),
    ("fubini_study", 2, P.FunctionalSpec("Ric_k", k=1), "positive"),
    ("flat_torus", 2, P.FunctionalSpec("H"), "nonnegative_flat"),
    ("perturbed_torus", 2, P.FunctionalSpec("S"), "indefinite"),
])
def test_classify_verdicts(name, n, spec, want):
    model = models.build(name, n=n)
    verdict = P.classify(model, spec, sampled_grid(model, 16, seed=0))
    assert verdict.cls == want
    assert verdict.label == "sampled"
    if want == "positive" and name == "fubini_study" and spec.name == "H":
        assert verdict.min_value == pytest.approx(2.0, abs=1e-8)


def test_classify_rejects_bad_input():
    model = models.flat_torus(1)
    with pytest.raises(UnknownFunctional):
        P.FunctionalSpec("nope")
    with pytest.raises(ValueError):
        P.classify(model, P.FunctionalSpec("H"), ScanGrid(points=np.zeros((0, 2))))


def test_thread_cap_does_not_change_results(monkeypatch):
    model = models.perturbed_torus(2, 0.05)
    grid = sampled_grid(model, 6, seed=2)
    spec = P.FunctionalSpec("C", 1.0, -1.0)
    monkeypatch.setenv("CURVLAB_THREADS", "1")
    one = P.classify(model, spec, grid, seed=5).per_point
    monkeypatch.setenv("CURVLAB_THREADS", "4")
    many = P.classify(model, spec, grid, seed=5).per_point
    assert np.array_equal(one, many)


def test_worker_count_parsing(monkeypatch):
    monkeypatch.setenv("CURVLAB_THREADS", "junk")
    assert P.worker_count() == 1
    monkeypatch.setenv("CURVLAB_THREADS", "0")
    assert P.worker_count() == 1
