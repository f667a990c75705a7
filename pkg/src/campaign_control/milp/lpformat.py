"""CPLEX-LP text emission, ORD priority files, and a small LP linter.

Constraint rows are multiplied by the least common multiple of their
denominators so that every emitted coefficient is an integer and nothing is
lost in decimal conversion.  Rows where that would push a coefficient past
``MAX_SCALED`` (instances given with many decimal digits) are written
unscaled instead; their coefficients then terminate or are rounded to 17
significant digits.  Objective coefficients keep their scale (the
solver-reported objective must be comparable to the exact one) and are
written with 17 significant digits when they do not terminate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from ..numeric import format_decimal
from .model import BINARY, INTEGER, MilpModel

LINE_WIDTH = 250
MAX_SCALED = 10**9
_SENSES = {"<=": "<=", ">=": ">=", "=": "="}


def _num(value: Fraction) -> str:
    return format_decimal(Fraction(value), significant=17)


def _scaled(con) -> tuple[list[tuple[str, Fraction]], Fraction]:
    den = 1
    for _, c in con.terms:
        den = math.lcm(den, c.denominator)
    den = math.lcm(den, con.rhs.denominator)
    terms = [(v, c * den) for v, c in con.terms]
    if max([abs(c) for _, c in terms] + [abs(con.rhs * den)]) > MAX_SCALED:
        return list(con.terms), con.rhs
    return terms, con.rhs * den


def _linear(terms) -> list[str]:
    tokens = []
    for i, (v, c) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = v if mag == 1 else f"{_num(mag)} {v}"
        tokens.append(f"{'-' if sign == '-' else ''}{body}" if i == 0 else f"{sign} {body}")
    return tokens


def _wrap(head: str, tokens: list[str], out: list[str]) -> None:
    line = head
    for tok in tokens:
        if len(line) + 1 + len(tok) > LINE_WIDTH and line.strip():
            out.append(line)
            line = "   "
        line = f"{line} {tok}" if line else tok
    out.append(line)


def emit_lp(model: MilpModel) -> str:
    out = [f"\\ {model.name}", "Maximize"]
    _wrap(" obj:", _linear(list(model.objective.items())), out)
    out.append("Subject To")
    for con in model.constraints:
        terms, rhs = _scaled(con)
        _wrap(f" {con.name}:", _linear(terms) + [_SENSES[con.sense], _num(rhs)], out)
    out.append("Bounds")
    for var in model.vars.values():
        if var.kind == BINARY:
            continue
        if var.lb == var.ub:
            out.append(f" {var.name} = {_num(var.lb)}")
        else:
            out.append(f" {_num(var.lb)} <= {var.name} <= {_num(var.ub)}")
    binaries = [v.name for v in model.vars.values() if v.kind == BINARY]
    generals = [v.name for v in model.vars.values() if v.kind == INTEGER]
    if binaries:
        out.append("Binary")
        _wrap("", binaries, out)
    if generals:
        out.append("General")
        _wrap("", generals, out)
    out.append("End")
    return "\n".join(out) + "\n"


def priorities(model: MilpModel) -> dict[str, int]:
    """Earlier stages branch first: priority ``N + 1 - stage`` for integral variables."""
    N = model.info.get("N", 0)
    return {v.name: N + 1 - v.stage for v in model.vars.values()
            if v.kind in (BINARY, INTEGER) and v.stage is not None}


def emit_priorities(model: MilpModel) -> str:
    lines = ["NAME " + model.name]
    for name, prio in priorities(model).items():
        lines.append(f"    {name} {prio}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- parsing

class LpSyntaxError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class ParsedLp:
    objective: dict[str, Fraction] = field(default_factory=dict)
    constraints: dict[str, tuple[dict[str, Fraction], str, Fraction]] = field(default_factory=dict)
    bounds: dict[str, tuple[Fraction, Fraction]] = field(default_factory=dict)
    binaries: list[str] = field(default_factory=list)
    generals: list[str] = field(default_factory=list)

    @property
    def variables(self) -> set[str]:
        names = set(self.objective) | set(self.bounds) | set(self.binaries) | set(self.generals)
        for terms, _, _ in self.constraints.values():
            names |= set(terms)
        return names


_SECTIONS = ("maximize", "subject to", "bounds", "binary", "general", "end")
_NAME = r"[A-Za-z_][A-Za-z0-9_.]*"
_NUMBER = r"[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?"
_TERM = re.compile(rf"\s*([+-])?\s*({_NUMBER})?\s*({_NAME})\s*")
_NUM_ONLY = re.compile(rf"\s*([+-]?{_NUMBER})\s*")


def _parse_terms(text: str, lineno: int) -> dict[str, Fraction]:
    terms: dict[str, Fraction] = {}
    pos = 0
    first = True
    while pos < len(text):
        if not text[pos:].strip():
            break
        m = _TERM.match(text, pos)
        if not m or (not first and m.group(1) is None):
            raise LpSyntaxError(lineno, f"cannot parse linear term near {text[pos:pos + 30]!r}")
        sign = -1 if m.group(1) == "-" else 1
        coef = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        name = m.group(3)
        if name in terms:
            raise LpSyntaxError(lineno, f"variable {name} repeated in one row")
        terms[name] = sign * coef
        pos = m.end()
        first = False
    return terms


def _logical_lines(text: str):
    """Yield (line number, section keyword or None, content) with continuation lines joined."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS:
            if current:
                yield current
                current = None
            yield (lineno, key, "")
            continue
        if raw.startswith("    ") and current is not None:
            current = (current[0], None, current[2] + " " + line.strip())
        else:
            if current:
                yield current
            current = (lineno, None, line.strip())
    if current:
        yield current


def parse_lp(text: str) -> ParsedLp:
    lp = ParsedLp()
    section = None
    seen: list[str] = []
    for lineno, key, body in _logical_lines(text):
        if key is not None:
            if seen and _SECTIONS.index(key) <= _SECTIONS.index(seen[-1]):
                raise LpSyntaxError(lineno, f"section {key!r} out of order")
            if key == "subject to" and "maximize" not in seen:
                raise LpSyntaxError(lineno, "missing objective section")
            seen.append(key)
            section = key
            continue
        if section is None:
            raise LpSyntaxError(lineno, "content before the first section")
        if section == "end":
            raise LpSyntaxError(lineno, "content after End")
        if section == "maximize":
            name, _, expr = body.partition(":")
            if name.strip() != "obj":
                raise LpSyntaxError(lineno, "objective must be labelled obj")
            lp.objective.update(_parse_terms(expr, lineno))
        elif section == "subject to":
            m = re.fullmatch(rf"({_NAME})\s*:(.*?)(<=|>=|=)\s*([+-]?{_NUMBER})", body)
            if not m:
                raise LpSyntaxError(lineno, f"malformed constraint {body[:40]!r}")
            name = m.group(1)
            if name in lp.constraints:
                raise LpSyntaxError(lineno, f"duplicate constraint name {name}")
            lp.constraints[name] = (_parse_terms(m.group(2), lineno), m.group(3), Fraction(m.group(4)))
        elif section == "bounds":
            m = re.fullmatch(rf"([+-]?{_NUMBER})\s*<=\s*({_NAME})\s*<=\s*([+-]?{_NUMBER})", body)
            if m:
                lo, name, hi = Fraction(m.group(1)), m.group(2), Fraction(m.group(3))
            else:
                m = re.fullmatch(rf"({_NAME})\s*=\s*([+-]?{_NUMBER})", body)
                if not m:
                    raise LpSyntaxError(lineno, f"malformed bound {body!r}")
                name, lo = m.group(1), Fraction(m.group(2))
                hi = lo
            if lo > hi:
                raise LpSyntaxError(lineno, f"empty bound range for {name}")
            if name in lp.bounds:
                raise LpSyntaxError(lineno, f"bound for {name} given twice")
            lp.bounds[name] = (lo, hi)
        else:
            names = body.split()
            for name in names:
                if not re.fullmatch(_NAME, name):
                    raise LpSyntaxError(lineno, f"bad variable name {name!r}")
            (lp.binaries if section == "binary" else lp.generals).extend(names)
    if not seen or seen[-1] != "end":
        raise LpSyntaxError(len(text.splitlines()), "missing End")
    return lp


def lint_lp(text: str) -> list[str]:
    """Return a list of problems; empty means the text is a well-formed LP file."""
    try:
        lp = parse_lp(text)
    except LpSyntaxError as exc:
        return [str(exc)]
    problems = []
    binaries = set(lp.binaries)
    if len(binaries) != len(lp.binaries):
        problems.append("variable listed twice under Binary")
    for name in binaries & set(lp.generals):
        problems.append(f"{name} is both binary and general")
    for name in sorted(binaries & set(lp.bounds)):
        problems.append(f"binary {name} has explicit bounds")
    for name in sorted(lp.variables - binaries - set(lp.bounds)):
        problems.append(f"{name} has no declared bounds")
    for name, (terms, _, _) in lp.constraints.items():
        if not terms:
            problems.append(f"constraint {name} is empty")
    return problems
