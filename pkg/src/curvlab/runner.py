"""Execute the checks selected in an experiment config and collect a report."""

from __future__ import annotations

import numpy as np

from . import __version__
from . import berger as Bg
from . import functionals as F
from .bochner import (default_exact_potential, exact_form_integral, integral_bochner_check,
                      scalar_curvature_mean, stokes_test_forms, threefold_stokes_check)
from .config import ExperimentConfig
from .errors import CurvlabError
from .forms import FormField, lemma21_check, lemma22_check, multi_indices
from .geometry import CurvatureTensor, chern_curvature, kahler_check, metric_jet, metric_value, orthonormal_frame
from .positivity import FunctionalSpec, classify, lemma23_check
from .quadrature import ScanGrid, sampled_grid, tensor_grid
from .report import Record, Report, format_value


def _grid(model, cfg: ExperimentConfig) -> ScanGrid:
    if cfg.grid.scan == "tensor" and model.supports_quadrature:
        return tensor_grid(model, cfg.grid.resolution)
    return sampled_grid(model, cfg.grid.samples, cfg.seed)


def _rng(cfg: ExperimentConfig, stream: int) -> np.random.Generator:
    # one independent stream per check, so enabling a check never shifts another's samples
    return np.random.default_rng([cfg.seed, stream])


def _unit(rng, n: int) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _is_kahler(model, pts) -> bool:
    return bool(kahler_check(model, pts)[0])


def _witness_vector(name: str, w):
    if w is None:
        return None
    if name in ("H", "Ric", "C"):
        return np.asarray(w)
    if name == "Ric_k":
        return np.asarray(w[0])
    if name == "B":
        return np.asarray(w[1])
    return None


# --------------------------------------------------------------------------
# individual checks


def check_classify(model, cfg: ExperimentConfig, report: Report):
    grid = _grid(model, cfg)
    tol = cfg.tolerances["classify"]
    for name in cfg.checks["classify"]:
        spec = FunctionalSpec(name, cfg.mixed.a, cfg.mixed.b, cfg.k)
        rec_name = f"classify_{name}"
        try:
            v = classify(model, spec, grid, tol=tol, seed=cfg.seed)
        except (CurvlabError, ValueError, np.linalg.LinAlgError) as exc:
            report.add(Record(rec_name, "fail", "optimizer", tol, {"functional": spec.label(), "error": exc}))
            continue
        prov = "closed_form" if name == "S" else "optimizer"
        fields = {
            "functional": spec.label(),
            "class": v.cls,
            "label": v.label,
            "min": v.min_value,
            "min_index": v.min_index,
            "min_point": grid.points[v.min_index],
            "min_witness": _witness_vector(name, v.min_witness),
            "positive_index": v.positive_index,
            "points": len(grid),
            "converged_points": int(np.sum(v.converged)),
        }
        table = [["index"] + [f"t{i}" for i in range(grid.points.shape[1])] + ["min", "witness"]]
        for i, (pt, val) in enumerate(zip(grid.points, v.per_point)):
            wv = _witness_vector(name, v.witnesses[i])
            table.append([i, *pt.tolist(), float(val), "none" if wv is None else wv])
        if name == "S" and model.supports_quadrature:
            m = scalar_curvature_mean(model, cfg.grid.mean_resolution)
            fields.update({"quadrature_mean": m.mean, "quadrature_error": m.error,
                           "quadrature_resolution": m.resolution})
        report.add(Record(rec_name, "measured", prov, tol, fields, table))


def check_berger(model, cfg: ExperimentConfig, report: Report):
    tol = cfg.tolerances["berger"]
    pts = sampled_grid(model, cfg.grid.samples, cfg.seed).points
    try:
        curv = chern_curvature(metric_jet(model, pts))
        kahler = _is_kahler(model, pts)
        k = cfg.k
        res_sk = res_ric = res_mix = 0.0
        for i in range(len(pts)):
            R = curv if curv.R.ndim == 4 else CurvatureTensor(R=curv.R[i], g=curv.g[i])
            E = orthonormal_frame(R.g)
            sk = float(F.k_scalar(R, E[:, :k]))
            avg = Bg.average_H_over_sphere(R, E[:, :k])
            res_sk = max(res_sk, abs(avg - sk) / (1 + abs(sk)))
            S = float(F.scalar_curvature(R))
            res_ric = max(res_ric, abs(Bg.average_ricci_over_sphere(R) - S) / (1 + abs(S)))
            lhs, rhs, r = Bg.mixed_average_identity(R, cfg.mixed)
            res_mix = max(res_mix, r / (1 + abs(lhs)))
    except (CurvlabError, ValueError) as exc:
        report.add(Record("berger", "fail", "closed_form", tol, {"error": exc}))
        return
    worst = max(res_sk, res_ric, res_mix)
    status = ("pass" if worst < tol else "fail") if kahler else "measured"
    report.add(Record("berger", status, "closed_form", tol, {
        "kahler": kahler, "k": k, "points": len(pts), "sk_residual": res_sk,
        "ricci_residual": res_ric, "mixed_residual": res_mix, "max_residual": worst}))


def check_lemma21(model, cfg: ExperimentConfig, report: Report):
    tol = cfg.tolerances["lemma21"]
    n = model.n
    rng = _rng(cfg, 21)
    pts = sampled_grid(model, cfg.grid.samples, cfg.seed).points
    degrees = [p for p in range(1, min(3, n - 1) + 1)]
    if not degrees:
        report.add(Record("lemma21", "measured", "closed_form", tol,
                          {"note": "needs n >= 2 (p + 1 <= n)"}))
        return
    fields = {}
    worst = 0.0
    try:
        G = metric_value(model, pts)
        for p in degrees:
            r = 0.0
            for i in range(len(pts)):
                g = G if G.ndim == 2 else G[i]
                A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                alpha = (A + A.conj().T) / 2
                m = len(multi_indices(n, p))
                coeffs = rng.standard_normal(m) + 1j * rng.standard_normal(m)
                r = max(r, lemma21_check(alpha, coeffs, g, p))
            fields[f"residual_p{p}"] = r
            worst = max(worst, r)
    except (CurvlabError, ValueError) as exc:
        report.add(Record("lemma21", "fail", "closed_form", tol, {"error": exc}))
        return
    fields["max_residual"] = worst
    report.add(Record("lemma21", "pass" if worst < tol else "fail", "closed_form", tol, fields))


def _constant_form(n: int) -> FormField:
    p = 2 if n >= 2 else 1
    coeffs = np.zeros(len(multi_indices(n, p)), complex)
    coeffs[0] = 1.0
    return FormField.constant(n, p, coeffs, name="dz1^dz2" if p == 2 else "dz1")


def check_lemma22(model, cfg: ExperimentConfig, report: Report):
    tol = cfg.tolerances["lemma22"]
    n = model.n
    rng = _rng(cfg, 22)
    pts = sampled_grid(model, cfg.grid.samples, cfg.seed).points
    form = _constant_form(n)
    try:
        kahler = _is_kahler(model, pts)
        res, res_b = [], []
        for t in pts:
            r = lemma22_check(form, model, t, _unit(rng, n), _unit(rng, n), kahler_gate=kahler)
            res.append(r.residual)
            res_b.append(r.bundle_residual)
    except (CurvlabError, ValueError) as exc:
        report.add(Record("lemma22", "fail", "closed_form", tol, {"error": exc}))
        return
    worst = float(max(res))
    status = ("pass" if worst < tol else "fail") if kahler else "measured"
    report.add(Record("lemma22", status, "closed_form", tol, {
        "form": form.name, "kahler": kahler, "points": len(pts), "max_residual": worst,
        "max_bundle_residual": float(max(res_b))}))


def check_lemma23(model, cfg: ExperimentConfig, report: Report):
    tol = cfg.tolerances["lemma23"]
    n, k = model.n, cfg.k
    rng = _rng(cfg, 23)
    pts = sampled_grid(model, cfg.grid.samples, cfg.seed).points
    try:
        kahler = _is_kahler(model, pts)
        curv = chern_curvature(metric_jet(model, pts))
        worst, sigma = -np.inf, np.inf
        for i in range(len(pts)):
            R = curv if curv.R.ndim == 4 else CurvatureTensor(R=curv.R[i], g=curv.g[i])
            sample = np.stack([_unit(rng, n) for _ in range(8)])
            out = lemma23_check(R, k, sample, seed=cfg.seed)
            worst = max(worst, out["violation"])
            sigma = min(sigma, out["sigma"])
    except (CurvlabError, ValueError) as exc:
        report.add(Record("lemma23", "fail", "optimizer", tol, {"error": exc}))
        return
    status = ("pass" if worst <= tol else "fail") if kahler else "measured"
    report.add(Record("lemma23", status, "optimizer", tol, {
        "kahler": kahler, "k": k, "points": len(pts), "max_violation": worst, "min_sigma": sigma}))


def check_bochner(model, cfg: ExperimentConfig, report: Report):
    factor = cfg.tolerances["bochner_factor"]
    n = model.n
    if n < 2:
        report.add(Record("bochner_integral", "fail", "quadrature", factor,
                          {"error": "needs a (2,0)-form, so n >= 2"}))
        return
    form = _constant_form(n)
    try:
        r = integral_bochner_check(model, form, cfg.grid.quadrature, factor)
    except (CurvlabError, ValueError) as exc:
        report.add(Record("bochner_integral", "fail", "quadrature", factor, {"error": exc}))
        return
    report.add(Record("bochner_integral", "pass" if r.passed else "fail", "quadrature", factor, {
        "form": form.name, "resolution": r.resolution, "points": r.points,
        "I1": r.I1, "I2": r.I2, "I3": r.I3, "coarse": list(r.coarse),
        "error_estimate": r.error, "residual_12": r.residual_12, "residual_13": r.residual_13}))


def check_stokes(model, cfg: ExperimentConfig, report: Report):
    tol, tol_exact = cfg.tolerances["stokes"], cfg.tolerances["exact"]
    n = model.n
    res = (cfg.grid.stokes_x,) * n + (cfg.grid.stokes_y,) * n
    try:
        exact = abs(exact_form_integral(model, default_exact_potential(n), res))
        report.add(Record("stokes_exact", "pass" if exact < tol_exact else "fail", "quadrature", tol_exact,
                          {"resolution": list(res), "integral_abs": exact}))
        forms = stokes_test_forms(n)
        for key, form in forms.items():
            r = threefold_stokes_check(model, form, res)
            name = f"stokes_{key}"
            fields = {"form": form.name, "resolution": list(res), "J": r.J, "ddbar_side": r.ddbar_side,
                      "stokes_residual": r.stokes_residual}
            if r.terms:
                fields.update({f"term_{k}": v for k, v in r.terms.items()})
            if n == 3:
                ok = r.stokes_residual < tol and (key != "del_closed" or abs(r.J) < tol)
                report.add(Record(name, "pass" if ok else "fail", "quadrature", tol, fields))
            else:
                report.add(Record(name, "measured", "quadrature", tol, fields))
    except (CurvlabError, ValueError) as exc:
        report.add(Record("stokes", "fail", "quadrature", tol, {"error": exc}))


CHECK_FUNCTIONS = {
    "classify": check_classify,
    "berger": check_berger,
    "lemma21": check_lemma21,
    "lemma22": check_lemma22,
    "lemma23": check_lemma23,
    "bochner_integral": check_bochner,
    "stokes": check_stokes,
}


def run(cfg: ExperimentConfig) -> Report:
    """Run every selected check; module errors become failed records."""
    report = Report(metadata={
        "version": __version__,
        "manifold": cfg.manifold.describe(),
        "seed": cfg.seed,
        "grid": cfg.grid.describe(),
        "mixed": f"a={format_value(cfg.mixed.a)} b={format_value(cfg.mixed.b)} k={cfg.k}",
        "projectivity_regime": cfg.mixed.projectivity_regime,
        "rc_regime": cfg.mixed.rc_regime,
        "checks": list(cfg.checks),
    })
    try:
        model = cfg.manifold.build()
    except (CurvlabError, ValueError, TypeError) as exc:
        report.add(Record("manifold", "fail", "closed_form", None, {"error": exc}))
        return report
    for name in cfg.checks:
        CHECK_FUNCTIONS[name](model, cfg, report)
    return report
