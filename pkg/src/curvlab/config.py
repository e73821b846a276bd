"""Line-based experiment configuration.

Format::

    # comment
    [manifold]
    name = perturbed_torus
    n = 3
    epsilon = 0.02

    [mixed]
    a = 1, b = -1
    k = 2

    [checks]
    classify = C, S
    bochner_integral = true

    [seed]
    value = 7

Values are strings, booleans, comma lists or arithmetic expressions over
numbers and the names ``pi``, ``e`` and ``tau``.  Parsing never stops at the
first problem: every syntax and range error is collected and raised together
as :class:`~curvlab.errors.ConfigError`.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError, ConfigSyntaxError, RangeError
from .functionals import FUNCTIONALS, MixedParams
from .geometry import ManifoldModel
from .models import MAX_EPSILON, REGISTRY, build
from .positivity import MAX_EXACT_DIM

SECTIONS = ("manifold", "grid", "mixed", "checks", "tolerances", "seed")
CHECKS = ("classify", "berger", "lemma21", "lemma22", "lemma23", "bochner_integral", "stokes")
MIN_INTEGRAL_GRID = 8

DEFAULT_TOLERANCES = {
    "classify": 1e-7,
    "berger": 1e-12,
    "lemma21": 1e-12,
    "lemma22": 1e-6,
    "lemma23": 1e-8,
    "bochner_factor": 10.0,
    "stokes": 1e-9,
    "exact": 1e-10,
}

# model name -> keyword parameters it accepts besides n
MODEL_PARAMS = {
    "flat_torus": (),
    "perturbed_torus": ("epsilon",),
    "twisted_torus": ("epsilon",),
    "fubini_study": ("radius",),
    "hopf": (),
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}
_NAMES = {"pi": math.pi, "e": math.e, "tau": math.tau}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


@dataclass(frozen=True)
class ManifoldSpec:
    name: str
    n: int = 2
    params: tuple = ()  # sorted (key, value) pairs

    def build(self) -> ManifoldModel:
        return build(self.name, n=self.n, **dict(self.params))

    def describe(self) -> str:
        extra = "".join(f" {k}={_fmt(v)}" for k, v in self.params)
        return f"{self.name} n={self.n}{extra}"


@dataclass(frozen=True)
class GridSpec:
    scan: str = "sampled"  # sampled (Halton / random) or tensor (torus lattice)
    samples: int = 16
    resolution: int = 4
    quadrature: int = 32
    mean_resolution: int = 16
    stokes_x: int = 10
    stokes_y: int = 8

    def describe(self) -> str:
        return " ".join(f"{k}={getattr(self, k)}" for k in self.__dataclass_fields__)


@dataclass
class ExperimentConfig:
    manifold: ManifoldSpec
    grid: GridSpec = field(default_factory=GridSpec)
    mixed: MixedParams = field(default_factory=lambda: MixedParams(1.0, 1.0))
    k: int = 1
    checks: dict = field(default_factory=dict)  # check name -> functionals (classify) or ()
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0

    def with_seed(self, seed: int) -> "ExperimentConfig":
        out = ExperimentConfig(self.manifold, self.grid, self.mixed, self.k, dict(self.checks),
                               dict(self.tolerances), int(seed))
        return out


def _fmt(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


# --------------------------------------------------------------------------
# value parsing


def eval_number(text: str) -> float | int:
    """Evaluate a restricted arithmetic expression (no names beyond pi, e, tau)."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"not an expression: {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and type(node.value) in (int, float):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Pow) and abs(right) > 64:
                raise ValueError("exponent too large")
            return _BINOPS[type(node.op)](left, right)
        raise ValueError(f"unsupported expression: {text!r}")

    try:
        value = ev(tree)
    except ZeroDivisionError as exc:
        raise ValueError("division by zero") from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError("value is not finite")
    return value


def _as_int(text: str) -> int:
    v = eval_number(text)
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError(f"expected an integer, got {text!r}")
        v = int(v)
    return v


def _as_float(text: str) -> float:
    return float(eval_number(text))


def _as_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _split_assignments(line: str) -> list[str]:
    # "a = 1, b = -1" holds two assignments; "classify = H, C" holds one
    return re.split(r",\s*(?=[A-Za-z_]\w*\s*=)", line)


# --------------------------------------------------------------------------
# parser


def _scan(text: str, errors: list) -> dict:
    """Raw {section: {key: (value, line)}} with syntax errors appended to ``errors``."""
    raw: dict = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        body = re.split(r"[#;]", line, maxsplit=1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            m = re.fullmatch(r"\[\s*([A-Za-z_]\w*)\s*\]", body)
            if not m:
                errors.append(ConfigSyntaxError(lineno, f"malformed section header {body!r}"))
                section = None
                continue
            section = m.group(1).lower()
            if section not in SECTIONS:
                errors.append(ConfigSyntaxError(lineno, f"unknown section [{section}]"))
                section = None
                continue
            raw.setdefault(section, {})
            continue
        for part in _split_assignments(body):
            if "=" not in part:
                errors.append(ConfigSyntaxError(lineno, f"expected 'key = value', got {part.strip()!r}"))
                continue
            key, value = (s.strip() for s in part.split("=", 1))
            if not re.fullmatch(r"[A-Za-z_]\w*", key):
                errors.append(ConfigSyntaxError(lineno, f"invalid key {key!r}"))
                continue
            if not value:
                errors.append(ConfigSyntaxError(lineno, f"missing value for {key!r}"))
                continue
            if section is None:
                errors.append(ConfigSyntaxError(lineno, f"{key!r} appears outside a known section"))
                continue
            key = key.lower()
            if key in raw[section]:
                errors.append(ConfigSyntaxError(lineno, f"duplicate key {section}.{key}"))
                continue
            raw[section][key] = (value, lineno)
    return raw


class _Reader:
    """Typed access to one section; conversion problems become RangeErrors."""

    def __init__(self, section: str, entries: dict, errors: list, allowed: tuple):
        self.section = section
        self.entries = entries
        self.errors = errors
        for key, (_, line) in entries.items():
            if key not in allowed:
                errors.append(ConfigSyntaxError(line, f"unknown key {section}.{key}"))

    def get(self, key: str, conv, default: Any = None, check=None, why: str = ""):
        if key not in self.entries:
            return default
        text, line = self.entries[key]
        name = f"{self.section}.{key}"
        try:
            value = conv(text)
        except ValueError as exc:
            self.errors.append(RangeError(name, str(exc), line))
            return default
        if check is not None and not check(value):
            self.errors.append(RangeError(name, f"{_fmt(value)} out of range ({why})", line))
            return default
        return value

    def line(self, key: str) -> int:
        return self.entries.get(key, ("", 0))[1]


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem found."""
    errors: list = []
    raw = _scan(text, errors)

    # [manifold]
    man = _Reader("manifold", raw.get("manifold", {}), errors, ("name", "n", "epsilon", "radius"))
    name = man.get("name", str.strip)
    if name is None:
        errors.append(RangeError("manifold.name", "required"))
    elif name not in REGISTRY:
        errors.append(RangeError("manifold.name", f"unknown manifold {name!r}; see list-manifolds",
                                 man.line("name")))
        name = None
    n = man.get("n", _as_int, 2, lambda v: 1 <= v <= MAX_EXACT_DIM, f"1 <= n <= {MAX_EXACT_DIM}")
    if name == "twisted_torus" and n < 2:
        errors.append(RangeError("manifold.n", "twisted_torus needs n >= 2", man.line("n")))
    params = {}
    for key, conv, check, why in (
            ("epsilon", _as_float, lambda v: abs(v) <= MAX_EPSILON, f"|epsilon| <= {MAX_EPSILON}"),
            ("radius", _as_float, lambda v: v > 0, "radius > 0")):
        if key not in man.entries:
            continue
        value = man.get(key, conv, None, check, why)
        if name is not None and key not in MODEL_PARAMS[name]:
            errors.append(RangeError(f"manifold.{key}", f"not a parameter of {name}", man.line(key)))
        elif value is not None:
            params[key] = value

    # [grid]
    grid_keys = tuple(GridSpec.__dataclass_fields__)
    gr = _Reader("grid", raw.get("grid", {}), errors, grid_keys)
    defaults = GridSpec()
    gvals = {"scan": gr.get("scan", lambda s: s.strip().lower(), defaults.scan,
                            lambda v: v in ("sampled", "tensor"), "sampled or tensor")}
    gvals["samples"] = gr.get("samples", _as_int, defaults.samples, lambda v: v >= 1, ">= 1")
    gvals["resolution"] = gr.get("resolution", _as_int, defaults.resolution, lambda v: v >= 1, ">= 1")
    for key in ("quadrature", "mean_resolution"):
        gvals[key] = gr.get(key, _as_int, getattr(defaults, key),
                            lambda v: v >= MIN_INTEGRAL_GRID and v % 2 == 0,
                            f"even and >= {MIN_INTEGRAL_GRID} per axis for integrals")
    for key in ("stokes_x", "stokes_y"):
        gvals[key] = gr.get(key, _as_int, getattr(defaults, key), lambda v: v >= MIN_INTEGRAL_GRID,
                            f">= {MIN_INTEGRAL_GRID} per axis for integrals")

    # [mixed]
    mx = _Reader("mixed", raw.get("mixed", {}), errors, ("a", "b", "k"))
    a = mx.get("a", _as_float, 1.0)
    b = mx.get("b", _as_float, 1.0)
    k = mx.get("k", _as_int, 1, lambda v: 1 <= v <= n, f"1 <= k <= n = {n}")

    # [checks]
    ck = _Reader("checks", raw.get("checks", {}), errors, CHECKS)
    checks: dict = {}
    for key in CHECKS:
        if key not in ck.entries:
            continue
        text, line = ck.entries[key]
        if key == "classify":
            items = [s.strip() for s in text.split(",") if s.strip()]
            if len(items) == 1 and items[0].lower() in _TRUE:
                items = ["C"]
            elif len(items) == 1 and items[0].lower() in _FALSE:
                continue
            bad = [s for s in items if s not in FUNCTIONALS]
            if bad or not items:
                errors.append(RangeError("checks.classify", f"unknown functional(s) {bad}; expected some of "
                                         + ", ".join(FUNCTIONALS), line))
                continue
            checks[key] = tuple(dict.fromkeys(items))
        elif ck.get(key, _as_bool, False):
            checks[key] = ()
    if not checks and not any(isinstance(e, RangeError) and e.field.startswith("checks") for e in errors):
        errors.append(RangeError("checks", "no checks selected"))

    # [tolerances]
    tl = _Reader("tolerances", raw.get("tolerances", {}), errors, tuple(DEFAULT_TOLERANCES))
    tolerances = {key: tl.get(key, _as_float, default, lambda v: v > 0, "> 0")
                  for key, default in DEFAULT_TOLERANCES.items()}

    # [seed]
    sd = _Reader("seed", raw.get("seed", {}), errors, ("value", "seed"))
    if "value" in sd.entries and "seed" in sd.entries:
        errors.append(ConfigSyntaxError(sd.line("seed"), "give the seed once (value or seed)"))
    key = "seed" if "seed" in sd.entries else "value"
    seed = sd.get(key, _as_int, 0, lambda v: 0 <= v < 2**63, "0 <= seed < 2^63")

    if errors:
        errors.sort(key=lambda e: getattr(e, "line", 0) or 10**9)
        raise ConfigError(errors)
    return ExperimentConfig(
        manifold=ManifoldSpec(name=name, n=n, params=tuple(sorted(params.items()))),
        grid=GridSpec(**gvals),
        mixed=MixedParams(a, b),
        k=k,
        checks=checks,
        tolerances=tolerances,
        seed=seed,
    )
