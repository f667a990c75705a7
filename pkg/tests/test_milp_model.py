from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from campaign_control.milp.model import BINARY, Guard, MilpModel, ModelError, check_big_m

F = Fraction


def small():
    m = MilpModel("t")
    m.add_var("x", lb=0, ub=1)
    m.add_var("y", lb=0, ub=2)
    m.add_var("b", BINARY)
    m.add_var("c", BINARY)
    return m


def test_vif_uses_box_derived_big_m():
    m = small()
    m.add_vif("row", Guard.of("b"), [("x", F(1)), ("y", F(-1))], "<=", F(1, 5))
    (rec,) = m.big_m
    assert rec.big_m == F(4, 5)  # max(x - y) = 1
    con = m.constraints[-1]
    assert dict(con.terms) == {"x": 1, "y": -1, "b": F(4, 5)}
    assert con.rhs == 1


def test_vif_implied_by_boxes_adds_nothing():
    m = small()
    m.add_vif("row", Guard.of("b"), [("x", F(1))], "<=", F(1))
    assert m.constraints == [] and m.big_m == []


def test_vif_equality_splits():
    m = small()
    m.add_vif("eq", Guard.negated("b"), [("x", F(1)), ("y", F(-1))], "=", 0)
    assert [c.name for c in m.constraints] == ["eq_le", "eq_ge"]


@given(st.fractions(0, 1), st.fractions(0, 2), st.integers(0, 1), st.integers(0, 1),
       st.fractions(-2, 2), st.sampled_from(["<=", ">="]))
def test_vif_semantics(x, y, b, c, rhs, sense):
    """Guard 1 enforces the row exactly; guard 0 leaves every box point feasible."""
    m = small()
    m.add_vif("row", Guard.of("b", "c"), [("x", F(1)), ("y", F(-1))], sense, rhs)
    if b + c > 1:
        return
    point = {"x": x, "y": y, "b": F(b), "c": F(c)}
    ok = not m.violations(point)
    holds = (x - y <= rhs) if sense == "<=" else (x - y >= rhs)
    if b + c == 1:
        assert ok == holds
    else:
        assert ok
    assert check_big_m(m) == []


def test_check_big_m_detects_too_small_m():
    from campaign_control.milp.model import BigMRecord
    m = small()
    m.big_m.append(BigMRecord("fake", (("x", F(1)),), "<=", F(0), F(1, 2), Guard.of("b")))
    assert check_big_m(m)


def test_undeclared_and_duplicate():
    m = small()
    with pytest.raises(ModelError):
        m.add("r", [("zz", F(1))], "<=", 0)
    with pytest.raises(ModelError):
        m.add_var("x")
    with pytest.raises(ModelError):
        m.set_objective([("zz", F(1))])


def test_violations_reports_integrality_and_bounds():
    m = small()
    bad = m.violations({"x": F(2), "y": F(0), "b": F(1, 2), "c": F(0)})
    assert any("outside" in s for s in bad) and any("integral" in s for s in bad)
