"""Built-in model manifolds.

Metric laws are written against :mod:`curvlab.jets` so the same function works on
plain coordinate arrays and on seeded Taylor jets.
"""

from __future__ import annotations

import math

import numpy as np

from . import jets as jm
from .geometry import Chart, ManifoldModel, MetricLaw

MAX_EPSILON = 0.05


def _periodic_chart(n: int) -> Chart:
    return Chart(n=n, kind="periodic", periods=(1.0,) * (2 * n))


def flat_torus(n: int = 2) -> ManifoldModel:
    """C^n / (Z + iZ)^n with the identity metric."""

    def law(x, y):
        return [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]

    return ManifoldModel(
        name="flat_torus",
        chart=_periodic_chart(n),
        law=MetricLaw("explicit_hermitian", law, is_kahler_claimed=True),
        params={"n": n},
    )


def perturbed_torus_scale(n: int) -> float:
    # one tenth of the row-sum bound of i ddbar prod_j (cos 2 pi x_j + cos 2 pi y_j)
    return math.pi**2 * 2 ** (n - 1) * (n + 1) / 10


def perturbed_torus(n: int = 3, epsilon: float = 0.02) -> ManifoldModel:
    """Kähler torus with potential c_n |z|^2 + eps * prod_j (cos 2 pi x_j + cos 2 pi y_j).

    With ``c_n`` a tenth of the row-sum bound of the perturbation Hessian,
    ``g >= (1 - 10 |eps|) c_n I``, so ``|eps| <= 0.05`` keeps g >= c_n / 2.
    The metric is lattice periodic.
    """
    if abs(epsilon) > MAX_EPSILON:
        raise ValueError(f"|epsilon| must be <= {MAX_EPSILON}")
    c = perturbed_torus_scale(n)
    two_pi = 2 * math.pi

    def law(x, y):
        quad = x[0] * x[0] + y[0] * y[0]
        prod = jm.cos(two_pi * x[0]) + jm.cos(two_pi * y[0])
        for j in range(1, n):
            quad = quad + x[j] * x[j] + y[j] * y[j]
            prod = prod * (jm.cos(two_pi * x[j]) + jm.cos(two_pi * y[j]))
        return c * quad + epsilon * prod

    return ManifoldModel(
        name="perturbed_torus",
        chart=_periodic_chart(n),
        law=MetricLaw("kahler_potential", law, is_kahler_claimed=True),
        params={"n": n, "epsilon": epsilon, "scale": c},
    )


def twisted_torus(n: int = 3, epsilon: float = 0.02) -> ManifoldModel:
    """Non-Kähler Hermitian torus ``g_{j jbar} = 1 + eps sin(2 pi x_{j+1})`` (indices cyclic)."""
    if n < 2:
        raise ValueError("twisted_torus needs n >= 2")
    if abs(epsilon) > MAX_EPSILON:
        raise ValueError(f"|epsilon| must be <= {MAX_EPSILON}")

    def law(x, y):
        g = [[0.0] * n for _ in range(n)]
        for j in range(n):
            g[j][j] = 1.0 + epsilon * jm.sin(2 * math.pi * x[(j + 1) % n])
        return g

    return ManifoldModel(
        name="twisted_torus",
        chart=_periodic_chart(n),
        law=MetricLaw("explicit_hermitian", law, is_kahler_claimed=False),
        params={"n": n, "epsilon": epsilon},
    )


def fubini_study(n: int = 2, radius: float = 3.0) -> ManifoldModel:
    """CP^n on the affine chart {z_0 != 0}, potential log(1 + |z|^2), box |x_j|,|y_j| <= radius."""

    def law(x, y):
        rho = 1.0
        for j in range(n):
            rho = rho + x[j] * x[j] + y[j] * y[j]
        return jm.log(rho)

    return ManifoldModel(
        name="fubini_study",
        chart=Chart(n=n, kind="box", lower=(-radius,) * (2 * n), upper=(radius,) * (2 * n)),
        law=MetricLaw("kahler_potential", law, is_kahler_claimed=True),
        params={"n": n, "radius": radius},
    )


def hopf(n: int = 2) -> ManifoldModel:
    """(C^n minus 0) / <z -> 2z> with ``g = delta / |z|^2`` on the annulus 1 <= |z| < 2."""

    def law(x, y):
        rho = x[0] * x[0] + y[0] * y[0]
        for j in range(1, n):
            rho = rho + x[j] * x[j] + y[j] * y[j]
        inv = jm.reciprocal(rho)
        return [[inv if i == j else 0.0 for j in range(n)] for i in range(n)]

    return ManifoldModel(
        name="hopf",
        chart=Chart(n=n, kind="annulus", r_min=1.0, r_max=2.0),
        law=MetricLaw("explicit_hermitian", law, is_kahler_claimed=(n == 1)),
        params={"n": n},
    )


def product(*factors: ManifoldModel) -> ManifoldModel:
    if len(factors) < 2:
        raise ValueError("product needs at least two factors")
    n = sum(f.n for f in factors)
    chart = Chart(n=n, kind="product", parts=tuple(f.chart for f in factors))
    return ManifoldModel(
        name="product(" + ",".join(f.name for f in factors) + ")",
        chart=chart,
        law=None,
        params={"factors": [f.name for f in factors]},
        factors=tuple(factors),
    )


REGISTRY = {
    "flat_torus": (flat_torus, "flat complex torus, g = I; Kähler, periodic cell [0,1)^{2n}"),
    "perturbed_torus": (perturbed_torus, "Kähler torus with trigonometric potential perturbation; periodic"),
    "twisted_torus": (twisted_torus, "non-Kähler Hermitian torus with diagonal sine twist; periodic"),
    "fubini_study": (fubini_study, "CP^n affine chart, Kähler, constant holomorphic sectional curvature 2"),
    "hopf": (hopf, "Hopf manifold (C^n minus 0)/<2>, non-Kähler for n >= 2, annulus 1 <= |z| < 2"),
}


def build(name: str, **params) -> ManifoldModel:
    if name not in REGISTRY:
        raise KeyError(f"unknown manifold {name!r}")
    return REGISTRY[name][0](**params)


def sample_points(model: ManifoldModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random points inside the chart domain, shape (count, 2n)."""
    chart = model.chart
    n = model.n
    if model.factors:
        blocks = [sample_points(f, count, rng) for f in model.factors]
        xs = np.concatenate([b[:, : f.n] for b, f in zip(blocks, model.factors)], axis=1)
        ys = np.concatenate([b[:, f.n:] for b, f in zip(blocks, model.factors)], axis=1)
        return np.concatenate([xs, ys], axis=1)
    if chart.kind == "periodic":
        return rng.random((count, 2 * n)) * np.asarray(chart.periods)
    if chart.kind == "box":
        lo, hi = np.asarray(chart.lower), np.asarray(chart.upper)
        # stay off the boundary so finite-difference stencils remain inside
        mid, half = (lo + hi) / 2, (hi - lo) / 2 * 0.9
        return mid + half * (2 * rng.random((count, 2 * n)) - 1)
    v = rng.standard_normal((count, 2 * n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = chart.r_min + (0.05 + 0.9 * rng.random(count)) * (min(chart.r_max, chart.r_min + 1) - chart.r_min)
    return v * r[:, None]
