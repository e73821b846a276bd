import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvlab.config import DEFAULT_TOLERANCES, eval_number, parse_config
from curvlab.errors import ConfigError, ConfigSyntaxError, RangeError
from curvlab.report import Record, Report, format_value, parse_report

MINIMAL = """
[manifold]
name = flat_torus
[checks]
berger = true
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.manifold.name == "flat_torus" and cfg.manifold.n == 2
    assert cfg.checks == {"berger": ()}
    assert cfg.seed == 0
    assert cfg.tolerances == DEFAULT_TOLERANCES
    assert cfg.grid.quadrature == 32


def test_full_config():
    cfg = parse_config("""
    # comment line
    [manifold]
    name = perturbed_torus
    n = 3
    epsilon = 1/50

    [grid]
    scan = tensor
    resolution = 3
    quadrature = 16

    [mixed]
    a = 1, b = -1
    k = 2

    [checks]
    classify = C, S, C
    stokes = off
    bochner_integral = yes

    [tolerances]
    lemma22 = 1e-5

    [seed]
    seed = 11
    """)
    assert cfg.manifold.params == (("epsilon", 0.02),)
    assert cfg.manifold.build().params["epsilon"] == 0.02
    assert cfg.grid.scan == "tensor" and cfg.grid.quadrature == 16
    assert (cfg.mixed.a, cfg.mixed.b, cfg.k) == (1.0, -1.0, 2)
    assert cfg.mixed.projectivity_regime
    assert cfg.checks == {"classify": ("C", "S"), "bochner_integral": ()}
    assert cfg.tolerances["lemma22"] == 1e-5
    assert cfg.seed == 11
    assert cfg.with_seed(4).seed == 4 and cfg.seed == 11


def test_classify_true_means_mixed():
    cfg = parse_config(MINIMAL + "classify = true\n")
    assert cfg.checks["classify"] == ("C",)


def test_all_errors_reported_in_line_order():
    text = """[manifold]
name = perturbed_torus
n = 3
epsilon = 0.5
[grid]
quadrature = 7
[mixed]
k = 9
what is this
[checks]
classify = X
"""
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    errs = info.value.errors
    lines = [e.line for e in errs]
    assert lines == sorted(lines) and lines == [4, 6, 8, 9, 11]
    assert isinstance(errs[3], ConfigSyntaxError)
    assert all(isinstance(e, RangeError) for i, e in enumerate(errs) if i != 3)
    assert "epsilon" in str(info.value) and "quadrature" in str(info.value)


@pytest.mark.parametrize("text,needle", [
    ("[manifold]\nname = nowhere\n[checks]\nberger = true\n", "unknown manifold"),
    ("[manifold]\nname = twisted_torus\nn = 1\n[checks]\nberger = true\n", "n >= 2"),
    ("[manifold]\nname = flat_torus\nepsilon = 0.01\n[checks]\nberger = true\n", "not a parameter"),
    ("[manifold]\nname = flat_torus\n", "no checks"),
    ("[checks]\nberger = true\n", "required"),
    (MINIMAL + "[tolerances]\nberger = 0\n", "> 0"),
    (MINIMAL + "[seed]\nvalue = -1\n", "seed"),
    (MINIMAL + "[grid]\nscan = spiral\n", "sampled or tensor"),
    (MINIMAL + "[bogus]\n", "bogus"),
    (MINIMAL + "[manifold]\nname = hopf\n", "duplicate key"),
    (MINIMAL + "lemma21 = maybe\n", "lemma21"),
    (MINIMAL + "[seed]\nvalue = 1\nseed = 2\n", "once"),
])
def test_rejections(text, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert needle in str(info.value)


def test_eval_number():
    assert eval_number("2*pi") == pytest.approx(math.tau)
    assert eval_number("-3") == -3
    assert eval_number("1e-3") == 0.001
    for bad in ("__import__('os')", "x + 1", "[1]", "2 **", "abs(1)"):
        with pytest.raises(ValueError):
            eval_number(bad)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_eval_number_roundtrips_reprs(x):
    assert eval_number(repr(x)) == x


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(-0.0) == "0"
    assert format_value(1 + 2j) == "(1, 2)"
    assert format_value([1, None]) == "[1, none]"
    assert float(format_value(math.pi)) == math.pi


def test_report_render_and_parse(tmp_path):
    rep = Report(metadata={"seed": 1})
    rep.add(Record("a", "pass", "closed_form", 1e-12, {"x": 0.5}, table=[["i", "v"], [0, 1.5]]))
    rep.add(Record("b", "measured", "quadrature"))
    assert rep.exit_code == 0
    parsed = parse_report(rep.render())
    assert parsed["run.status"] == "pass" and parsed["a.x"] == "0.5" and parsed["run.measured"] == "1"
    rep.add(Record("c", "fail", "optimizer"))
    assert rep.exit_code == 1 and parse_report(rep.render())["run.status"] == "fail"
    (path,) = rep.write_tables(tmp_path)
    assert path.read_text() == "i,v\n0,1.5\n"
    with pytest.raises(ValueError):
        Record("d", "ok", "closed_form")
