from fractions import Fraction

import pytest

from campaign_control.instances import benchmark, benchmark_dg, reference_sample
from campaign_control.milp import build_model, emit_lp, emit_priorities, lint_lp, parse_lp
from campaign_control.milp.lpformat import LpSyntaxError, priorities
from campaign_control.milp.model import BINARY

F = Fraction


@pytest.fixture(scope="module")
def advanced2():
    return build_model("bc-advanced", benchmark(), 2)


def test_dg_objective_line():
    text = emit_lp(build_model("dg", benchmark_dg(), 1))
    obj = text.splitlines()[2]
    assert all(f"z_{i}" in obj.split() for i in range(1, 12))
    assert text.splitlines()[1] == "Maximize" and text.rstrip().endswith("End")


@pytest.mark.parametrize("kind", ["dg", "bc-basic", "bc-advanced"])
def test_lint_clean_and_deterministic(kind):
    inst = benchmark_dg() if kind == "dg" else benchmark()
    a = emit_lp(build_model(kind, inst, 1))
    b = emit_lp(build_model(kind, inst, 1))
    assert a == b
    assert lint_lp(a) == []


def test_round_trip_rows_are_positive_multiples(advanced2):
    lp = parse_lp(emit_lp(advanced2))
    assert len(lp.constraints) == len(advanced2.constraints)
    for con in advanced2.constraints:
        terms, sense, rhs = lp.constraints[con.name]
        assert sense == con.sense
        v, c = con.terms[0]
        scale = terms[v] / c
        assert scale > 0
        assert terms == {name: coef * scale for name, coef in con.terms}
        assert rhs == con.rhs * scale


def test_round_trip_bounds_and_types(advanced2):
    lp = parse_lp(emit_lp(advanced2))
    assert set(lp.binaries) == {v.name for v in advanced2.vars.values() if v.kind == BINARY}
    assert lp.bounds["obj_offset"] == (1, 1)
    assert lp.bounds["dr_1_3"] == (0, F(3, 8))
    assert lp.objective["obj_offset"] == 1


def test_long_decimals_stay_within_solver_range():
    text = emit_lp(build_model("bc-advanced", reference_sample(5), 1))
    assert lint_lp(text) == []
    for con in parse_lp(text).constraints.values():
        assert all(abs(c) < 10**10 for c in con[0].values())


def test_lines_are_wrapped(advanced2):
    assert max(len(line) for line in emit_lp(advanced2).splitlines()) <= 260


def test_priorities_follow_stages(advanced2):
    prio = priorities(advanced2)
    # N = 2: stage t gets N + 1 - t
    assert prio["conf_0_1_1_1_0_1"] == 3
    assert prio["conf_1_1_1_1_0_1"] == 2
    assert prio["conv_1_11"] == 1
    text = emit_priorities(advanced2)
    assert text.startswith("NAME") and text.rstrip().endswith("ENDATA")
    assert "x_0_0" not in text  # continuous variables carry no priority


@pytest.mark.parametrize("text, needle", [
    ("Maximize\n obj: x\nSubject To\n c1: x <= 1\n", "missing End"),
    ("Subject To\n c1: x <= 1\nEnd\n", "objective"),
    ("Maximize\n obj: x\nSubject To\n c1: x x <= 1\nEnd\n", "cannot parse"),
    ("Maximize\n obj: x\nSubject To\n c1: x <= 1\n c1: x <= 2\nBounds\n 0 <= x <= 1\nEnd\n", "duplicate"),
    ("Maximize\n obj: x\nBounds\n 0 <= x <= 1\nSubject To\n c1: x <= 1\nEnd\n", "out of order"),
])
def test_lint_catches_syntax(text, needle):
    problems = lint_lp(text)
    assert problems and needle in problems[0]


def test_lint_catches_undeclared_bounds():
    text = "Maximize\n obj: x + y\nSubject To\n c1: x + y <= 1\nBounds\n 0 <= x <= 1\nEnd\n"
    assert lint_lp(text) == ["y has no declared bounds"]


def test_parse_error_type():
    with pytest.raises(LpSyntaxError):
        parse_lp("junk\n")
