"""Built-in acceptance suite behind ``curvlab verify-all``.

Each criterion returns one report record.  All randomness derives from the
seed, and nothing time dependent is recorded, so the report is reproducible
byte for byte.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import minimize

from . import __version__
from . import berger as Bg
from . import functionals as F
from . import models
from .bochner import (default_exact_potential, exact_form_integral, integral_bochner_check,
                      scalar_curvature_mean, stokes_test_forms, threefold_stokes_check)
from .forms import FormField, lemma21_check, lemma22_check, multi_indices
from .geometry import CurvatureTensor, chern_curvature, gram_schmidt_frame, metric_jet, orthonormal_frame
from .positivity import (FunctionalSpec, NonConvergence, classify, lemma23_check, min_on_nonneg_sphere,
                         point_minimum, reevaluate)
from .quadrature import iter_tensor_grid, sampled_grid
from .report import Record, Report

STOKES_RESOLUTION = (10, 10, 10, 8, 8, 8)


def _rng(seed: int, criterion: int) -> np.random.Generator:
    return np.random.default_rng([seed, criterion])


def _unit(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _at(curv: CurvatureTensor, i: int) -> CurvatureTensor:
    return curv if curv.R.ndim == 4 else CurvatureTensor(R=curv.R[i], g=curv.g[i])


def _subspace_through(g, X, k, rng):
    """g-unitary basis of a random k-dimensional subspace whose first vector is X / |X|."""
    n = g.shape[-1]
    extra = rng.standard_normal((n, k - 1)) + 1j * rng.standard_normal((n, k - 1))
    return gram_schmidt_frame(g, np.column_stack([X, extra])).E


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# --------------------------------------------------------------------------
# criteria


def criterion_1(seed: int) -> Record:
    """Flat torus: every functional vanishes on the 16^{2n} lattice."""
    tol = 1e-10
    rng = _rng(seed, 1)
    worst, points, minima = 0.0, 0, 0.0
    params = F.MixedParams(1.0, 1.0)
    for n in (2, 3):
        model = models.flat_torus(n)
        for pts in iter_tensor_grid(model, 16, chunk=1 << 18):
            curv = chern_curvature(metric_jet(model, pts))
            R = curv if curv.R.ndim == 4 else None
            X = _unit(rng, n)
            E = _subspace_through(np.eye(n), X, n, rng)
            if R is None:  # point-dependent metric: evaluate pointwise (not expected for g = I)
                vals = np.abs(curv.R).max()
            else:
                a = np.abs(rng.random(n)) + 0.1
                vals = max(abs(float(F.holo_sectional(R, X))), abs(float(F.ricci_value(R, X))),
                           abs(float(F.scalar_curvature(R))), abs(float(F.mixed_curvature(R, X, params))),
                           abs(float(F.k_ricci(R, E[:, :2], X))), abs(float(F.k_scalar(R, E[:, :2]))),
                           abs(float(F.real_bisectional(R, E, a))), float(np.max(np.abs(R.R))))
            worst = max(worst, float(vals))
            points += pts.shape[0]
        R = chern_curvature(metric_jet(model, np.zeros(2 * n)))
        for name in F.FUNCTIONALS:
            res = point_minimum(R, FunctionalSpec(name, 1.0, 1.0, 2), seed)
            minima = max(minima, abs(res.value))
    worst = max(worst, minima)
    return Record("criterion_01", _status(worst <= tol), "closed_form", tol,
                  {"what": "flat torus functionals on 16^(2n) grid, n in {2,3}", "points": points,
                   "max_abs": worst, "max_abs_minimum": minima})


def criterion_2(seed: int) -> Record:
    """Fubini-Study constants at 100 random (point, direction, subspace) samples."""
    tol = 1e-6
    rng = _rng(seed, 2)
    worst = {}
    for n in (1, 2, 3):
        model = models.fubini_study(n)
        pts = sampled_grid(model, 100, seed + n).points
        curv = chern_curvature(metric_jet(model, pts))
        for i in range(len(pts)):
            R = _at(curv, i)
            X = _unit(rng, n)
            k = int(rng.integers(1, n + 1))
            E = _subspace_through(R.g, X, k, rng)
            a, b = rng.uniform(-1, 2), rng.uniform(-1, 2)
            checks = {
                "H": (float(F.holo_sectional(R, X)), 2.0),
                "Ric": (float(F.ricci_value(R, X)), n + 1.0),
                "S": (float(F.scalar_curvature(R)), n * (n + 1.0)),
                "C": (float(F.mixed_curvature(R, X, F.MixedParams(a, b))), (n + 1) * a + 2 * b),
                "Ric_k": (float(F.k_ricci(R, E, X)), k + 1.0),
                "S_k": (float(F.k_scalar(R, E)), k * (k + 1.0)),
            }
            for key, (got, want) in checks.items():
                worst[key] = max(worst.get(key, 0.0), abs(got - want))
    top = max(worst.values())
    fields = {"what": "Fubini-Study constants, n in {1,2,3}, 100 samples each"}
    fields.update({f"max_err_{k}": v for k, v in worst.items()})
    return Record("criterion_02", _status(top < tol), "closed_form", tol, fields)


def criterion_3(seed: int) -> Record:
    """Sphere-average identities on random Kähler-symmetric tensors."""
    tol = 1e-12
    rng = _rng(seed, 3)
    res_h = res_r = res_m = 0.0
    for trial in range(50):
        n = int(rng.integers(1, 5))
        g = Bg.random_hermitian_metric(n, rng)
        R = Bg.random_kahler_tensor(n, rng, g=g) if trial % 2 else Bg.random_kahler_tensor(n, rng)
        E = F.check_unitary_basis(R.g, orthonormal_frame(R.g))
        for k in range(1, n + 1):
            res_h = max(res_h, abs(Bg.average_H_over_sphere(R, E[:, :k]) - float(F.k_scalar(R, E[:, :k]))))
        res_r = max(res_r, abs(Bg.average_ricci_over_sphere(R) - float(F.scalar_curvature(R))))
        a, b = rng.uniform(0.1, 2), rng.uniform(-1, 2)
        res_m = max(res_m, Bg.mixed_average_identity(R, F.MixedParams(a, b))[2])
    # Monte Carlo: 200 seeded trials of 1e5 samples each
    n = 4
    R = Bg.random_kahler_tensor(n, rng)
    exact = float(F.k_scalar(R, np.eye(n)))
    inside = 0
    trials = 200
    for t in range(trials):
        est = Bg.average_H_over_sphere(R, np.eye(n), mode="monte_carlo", samples=100_000,
                                       seed=seed * 1000 + t)
        inside += est.within(exact, 4.0)
    frac = inside / trials
    ok = max(res_h, res_r, res_m) < tol and frac >= 0.99
    return Record("criterion_03", _status(ok), "monte_carlo", tol, {
        "what": "Berger averages: closed form, Monte Carlo within 4 SE, mixed average",
        "closed_H_residual": res_h, "closed_ricci_residual": res_r, "mixed_residual": res_m,
        "mc_trials": trials, "mc_within_4se_fraction": frac})


def criterion_4(seed: int) -> Record:
    """Wedge-trace identity for random (alpha, eta, g)."""
    tol = 1e-12
    rng = _rng(seed, 4)
    worst = {}
    for p in (1, 2, 3):
        r = 0.0
        for _ in range(100):
            n = int(rng.integers(p + 1, 6))
            g = Bg.random_hermitian_metric(n, rng)
            A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            alpha = (A + A.conj().T) / 2
            m = len(multi_indices(n, p))
            coeffs = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            r = max(r, lemma21_check(alpha, coeffs, g, p))
        worst[p] = r
    top = max(worst.values())
    return Record("criterion_04", _status(top < tol), "closed_form", tol, {
        "what": "wedge-trace identity, 100 samples per p in {1,2,3}, n <= 5",
        **{f"max_residual_p{p}": v for p, v in worst.items()}})


def criterion_5(seed: int) -> Record:
    """Pointwise Bochner identity on Kähler models (finite-difference left side)."""
    tol = 1e-6
    rng = _rng(seed, 5)
    fields = {"what": "pointwise Bochner identity, 20 samples per model"}
    worst = 0.0
    for label, model in (("perturbed_torus", models.perturbed_torus(3, 0.02)),
                         ("fubini_study", models.fubini_study(3))):
        n = model.n
        coeffs = np.zeros(len(multi_indices(n, 2)), complex)
        coeffs[0] = 1.0
        form = FormField.constant(n, 2, coeffs)
        pts = sampled_grid(model, 20, seed + 5).points
        r = max(lemma22_check(form, model, t, _unit(rng, n), _unit(rng, n)).residual for t in pts)
        fields[f"max_residual_{label}"] = r
        worst = max(worst, r)
    return Record("criterion_05", _status(worst < tol), "closed_form", tol, fields)


def criterion_6(seed: int) -> Record:
    """k-Ricci lower-bound inequality; equality on Fubini-Study."""
    tol = 1e-8
    rng = _rng(seed, 6)
    fs = models.fubini_study(3)
    R = chern_curvature(metric_jet(fs, sampled_grid(fs, 1, seed + 6).points[0]))
    viol, gap = -np.inf, 0.0
    for k in (1, 2, 3):
        sample = np.stack([_unit(rng, 3) for _ in range(16)])
        out = lemma23_check(R, k, sample, seed)
        viol = max(viol, out["violation"])
        gap = max(gap, out["max_abs_gap"])
    pt = models.perturbed_torus(3, 0.02)
    pts = sampled_grid(pt, 5, seed + 60).points
    curv = chern_curvature(metric_jet(pt, pts))
    viol_t = -np.inf
    for i in range(5):
        for k in (1, 2, 3):
            sample = np.stack([_unit(rng, 3) for _ in range(16)])
            viol_t = max(viol_t, lemma23_check(_at(curv, i), k, sample, seed)["violation"])
    ok = viol <= tol and gap < tol and viol_t <= tol
    return Record("criterion_06", _status(ok), "optimizer", tol, {
        "what": "k-Ricci inequality: Fubini-Study (equality) and 5 perturbed-torus points",
        "fs_max_violation": viol, "fs_max_abs_gap": gap, "torus_max_violation": viol_t})


def criterion_7(seed: int) -> Record:
    """Integral Bochner equality on the perturbed 3-torus at 32 points per axis."""
    model = models.perturbed_torus(3, 0.02)
    form = FormField.constant(3, 2, [1.0, 0.0, 0.0], name="dz1^dz2")
    r = integral_bochner_check(model, form, 32, 10.0)
    return Record("criterion_07", _status(r.passed), "quadrature", 10.0, {
        "what": "integral Bochner identity, eta = dz1^dz2, tolerance = 10 x grid-doubling error",
        "I1": r.I1, "I2": r.I2, "I3": r.I3, "error_estimate": r.error,
        "residual_12": r.residual_12, "residual_13": r.residual_13, "points": r.points})


def criterion_8(seed: int) -> Record:
    """Positivity classes of three reference curvature conditions."""
    tol = 1e-7
    fs = models.fubini_study(2)
    v_fs = classify(fs, FunctionalSpec("C", 1.0, 1.0), sampled_grid(fs, 16, seed), seed=seed)
    hopf = models.hopf(2)
    grid_h = sampled_grid(hopf, 16, seed)
    spec_b = FunctionalSpec("B")
    v_h = classify(hopf, spec_b, grid_h, seed=seed)
    curv_h = chern_curvature(metric_jet(hopf, grid_h.points))
    zero_w = max(abs(reevaluate(_at(curv_h, i), spec_b, v_h.witnesses[i])) for i in range(len(grid_h)))
    pt = models.perturbed_torus(3, 0.02)
    v_s = classify(pt, FunctionalSpec("S"), sampled_grid(pt, 64, seed), seed=seed)
    mean = scalar_curvature_mean(pt, 16)
    ok = (v_fs.cls == "positive" and v_h.cls == "nonnegative_flat" and zero_w <= tol
          and v_s.cls == "indefinite" and abs(mean.mean) < 1e-9)
    return Record("criterion_08", _status(ok), "optimizer", tol, {
        "what": "FS C_{1,1} positive; Hopf B nonnegative_flat; perturbed-torus S indefinite, mean 0",
        "fs_class": v_fs.cls, "fs_min": v_fs.min_value,
        "hopf_class": v_h.cls, "hopf_max_abs_witness_value": zero_w,
        "torus_S_class": v_s.cls, "torus_S_min": v_s.min_value, "torus_S_max": float(np.max(v_s.per_point)),
        "torus_S_quadrature_mean": mean.mean})


def _simplex_lattice(n: int, m: int) -> np.ndarray:
    """Nonnegative integer vectors with sum m, scaled to the unit sphere."""
    if n == 1:
        return np.ones((1, 1))
    mesh = np.stack(np.meshgrid(*[np.arange(m + 1)] * (n - 1), indexing="ij"), -1).reshape(-1, n - 1)
    arr = mesh[mesh.sum(axis=1) <= m].astype(float)
    pts = np.column_stack([arr, m - arr.sum(axis=1)])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def brute_copositive_min(M: np.ndarray, lattice: np.ndarray) -> float:
    """Simplex-lattice brute force for min a^T M a over a >= 0, |a| = 1, then SLSQP polish."""
    A = lattice
    vals = np.sum((A @ M) * A, axis=1)
    best = float(vals.min())
    cons = ({"type": "eq", "fun": lambda a: a @ a - 1.0, "jac": lambda a: 2 * a},)
    for j in np.argpartition(vals, min(1, len(vals) - 1))[:2]:
        res = minimize(lambda a: a @ M @ a, A[j], jac=lambda a: 2 * M @ a, method="SLSQP",
                       bounds=[(0, None)] * len(A[j]), constraints=cons, options={"ftol": 1e-15, "maxiter": 200})
        a = np.clip(res.x, 0, None)
        if np.linalg.norm(a) > 0:
            a /= np.linalg.norm(a)
            best = min(best, float(a @ M @ a))
    return best


def criterion_9(seed: int) -> Record:
    """Copositivity inner solver against simplex-grid brute force."""
    tol = 1e-6
    rng = _rng(seed, 9)
    lattices = {n: _simplex_lattice(n, m) for n, m in ((1, 1), (2, 4000), (3, 600), (4, 180))}
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        B = rng.standard_normal((n, n))
        M = (B + B.T) / 2
        exact = float(min_on_nonneg_sphere(M)[0])
        worst = max(worst, abs(exact - brute_copositive_min(M, lattices[n])))
    return Record("criterion_09", _status(worst < tol), "optimizer", tol, {
        "what": "KKT support enumeration vs simplex lattice plus SLSQP, 500 matrices, n <= 4",
        "max_abs_diff": worst, "matrices": 500})


def criterion_10(seed: int) -> Record:
    """Stokes checks: exact forms, J = 0 for a del-closed form, Stokes-step residual."""
    tol_exact, tol = 1e-10, 1e-9
    exact = 0.0
    for n in (2, 3):
        exact = max(exact, abs(exact_form_integral(models.flat_torus(n), default_exact_potential(n), 8)))
    tw = models.twisted_torus(3, 0.02)
    forms = stokes_test_forms(3)
    closed = threefold_stokes_check(tw, forms["del_closed"], STOKES_RESOLUTION)
    generic = threefold_stokes_check(tw, forms["generic"], STOKES_RESOLUTION)
    ok = (exact < tol_exact and abs(closed.J) < tol and closed.stokes_residual < tol
          and generic.stokes_residual < tol)
    return Record("criterion_10", _status(ok), "quadrature", tol, {
        "what": "exact periodic forms; J = 0 for del-closed eta; Stokes step for generic eta",
        "exact_max_abs": exact, "closed_J": closed.J, "closed_stokes_residual": closed.stokes_residual,
        "generic_J": generic.J, "generic_ddbar_side": generic.ddbar_side,
        "generic_stokes_residual": generic.stokes_residual})


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10)


def verify_all(seed: int = 0, progress=None) -> Report:
    """Run criteria 1-10; determinism (criterion 11) is a property of this report itself."""
    report = Report(metadata={"version": __version__, "suite": "acceptance", "seed": seed})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        for fn in CRITERIA:
            rec = fn(seed)
            report.add(rec)
            if progress is not None:
                progress(rec)
    return report
