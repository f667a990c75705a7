"""Abstract MILP container with Big-M linearization of variable-conditioned constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

Terms = dict[str, Fraction]

CONTINUOUS, BINARY, INTEGER = "continuous", "binary", "integer"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class MilpVar:
    name: str
    kind: str = CONTINUOUS
    lb: Fraction = Fraction(0)
    ub: Fraction = Fraction(1)
    stage: int | None = None

    @property
    def is_integral(self) -> bool:
        return self.kind in (BINARY, INTEGER)


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[str, Fraction], ...]
    sense: str  # "<=", ">=", "="
    rhs: Fraction


@dataclass(frozen=True)
class Guard:
    """Linear expression over binaries that evaluates to 0 or 1."""

    const: Fraction = Fraction(0)
    terms: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def of(cls, *names: str) -> "Guard":
        """Sum of binaries (at most one of which can be 1)."""
        return cls(Fraction(0), tuple((n, Fraction(1)) for n in names))

    @classmethod
    def negated(cls, name: str) -> "Guard":
        return cls(Fraction(1), ((name, Fraction(-1)),))


@dataclass(frozen=True)
class BigMRecord:
    """Bookkeeping for one linearized constraint, used by :func:`check_big_m`."""

    constraint: str
    terms: tuple[tuple[str, Fraction], ...]
    sense: str
    rhs: Fraction
    big_m: Fraction
    guard: Guard


def _merge(terms: Iterable[tuple[str, Fraction]]) -> tuple[tuple[str, Fraction], ...]:
    acc: dict[str, Fraction] = {}
    for name, coef in terms:
        acc[name] = acc.get(name, Fraction(0)) + Fraction(coef)
    return tuple((n, c) for n, c in acc.items() if c != 0)


@dataclass
class MilpModel:
    name: str
    vars: dict[str, MilpVar] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    objective: Terms = field(default_factory=dict)
    big_m: list[BigMRecord] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    # -------------------------------------------------------------- building
    def add_var(self, name: str, kind: str = CONTINUOUS, lb=0, ub=1, stage: int | None = None) -> str:
        if name in self.vars:
            raise ModelError(f"duplicate variable {name}")
        if kind == BINARY:
            lb, ub = 0, 1
        self.vars[name] = MilpVar(name, kind, Fraction(lb), Fraction(ub), stage)
        return name

    def add(self, name: str, terms: Iterable[tuple[str, Fraction]], sense: str, rhs) -> None:
        if sense not in ("<=", ">=", "="):
            raise ModelError(f"bad sense {sense!r}")
        merged = _merge(terms)
        for v, _ in merged:
            if v not in self.vars:
                raise ModelError(f"constraint {name} references undeclared variable {v}")
        self.constraints.append(Constraint(name, merged, sense, Fraction(rhs)))

    def bounds_of(self, terms) -> tuple[Fraction, Fraction]:
        lo = hi = Fraction(0)
        for v, c in terms:
            var = self.vars[v]
            if c > 0:
                lo += c * var.lb
                hi += c * var.ub
            else:
                lo += c * var.ub
                hi += c * var.lb
        return lo, hi

    def add_vif(self, name: str, guard: Guard, terms, sense: str, rhs) -> None:
        """Impose ``terms sense rhs`` only when ``guard`` is 1, with the smallest box-valid M."""
        terms = _merge(terms)
        rhs = Fraction(rhs)
        if sense == "=":
            self.add_vif(name + "_le", guard, terms, "<=", rhs)
            self.add_vif(name + "_ge", guard, terms, ">=", rhs)
            return
        lo, hi = self.bounds_of(terms)
        big_m = hi - rhs if sense == "<=" else rhs - lo
        if big_m <= 0:
            # implied by the variable boxes
            return
        # terms + M*g <= rhs + M   resp.   terms - M*g >= rhs - M
        sign = 1 if sense == "<=" else -1
        row = list(terms) + [(v, sign * big_m * c) for v, c in guard.terms]
        self.add(name, row, sense, rhs + sign * big_m * (1 - guard.const))
        self.big_m.append(BigMRecord(name, terms, sense, rhs, big_m, guard))

    def set_objective(self, terms: Iterable[tuple[str, Fraction]]) -> None:
        merged = _merge(terms)
        for v, _ in merged:
            if v not in self.vars:
                raise ModelError(f"objective references undeclared variable {v}")
        self.objective = dict(merged)

    # -------------------------------------------------------------- evaluation
    def objective_value(self, assignment: Mapping[str, Fraction]) -> Fraction:
        return sum((c * Fraction(assignment[v]) for v, c in self.objective.items()), Fraction(0))

    def violations(self, assignment: Mapping[str, Fraction]) -> list[str]:
        """Exact feasibility check of ``assignment`` against bounds, integrality and rows."""
        bad = []
        for v, var in self.vars.items():
            if v not in assignment:
                bad.append(f"{v}: unassigned")
                continue
            x = Fraction(assignment[v])
            if not var.lb <= x <= var.ub:
                bad.append(f"{v}: {x} outside [{var.lb}, {var.ub}]")
            if var.is_integral and x.denominator != 1:
                bad.append(f"{v}: {x} not integral")
        for con in self.constraints:
            lhs = sum((c * Fraction(assignment.get(v, 0)) for v, c in con.terms), Fraction(0))
            ok = lhs <= con.rhs if con.sense == "<=" else lhs >= con.rhs if con.sense == ">=" else lhs == con.rhs
            if not ok:
                bad.append(f"{con.name}: {lhs} {con.sense} {con.rhs} fails")
        return bad

    def counts(self) -> dict[str, int]:
        kinds = [v.kind for v in self.vars.values()]
        return {
            "variables": len(kinds),
            "binary": kinds.count(BINARY),
            "integer": kinds.count(INTEGER),
            "constraints": len(self.constraints),
            "nonzeros": sum(len(c.terms) for c in self.constraints),
        }


def check_big_m(model: MilpModel) -> list[str]:
    """Confirm every linearized row is slack whenever its guard is 0.

    With the guard at 0 the row reads ``terms <= rhs + M`` (or ``>= rhs - M``);
    this must hold for every point of the variable boxes.
    """
    problems = []
    for rec in model.big_m:
        for v, _ in rec.guard.terms:
            if model.vars[v].kind != BINARY:
                problems.append(f"{rec.constraint}: guard variable {v} is not binary")
        lo, hi = model.bounds_of(rec.terms)
        if rec.sense == "<=" and hi > rec.rhs + rec.big_m:
            problems.append(f"{rec.constraint}: max {hi} exceeds relaxed rhs {rec.rhs + rec.big_m}")
        if rec.sense == ">=" and lo < rec.rhs - rec.big_m:
            problems.append(f"{rec.constraint}: min {lo} below relaxed rhs {rec.rhs - rec.big_m}")
    return problems
