"""Reading solver output back and re-checking it in exact arithmetic."""

from __future__ import annotations

import logging
import re
import tempfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from ..dynamics import (Instance, InstanceError, PerturbationUndefined, Trajectory, convinced_count,
                        perturbed_objective, simulate)
from .model import BINARY, INTEGER, MilpModel

log = logging.getLogger(__name__)

BINARY_TOLERANCE = Fraction(1, 10**6)
_BINARY_NAME = re.compile(r"(z|v|l|r|c|kappa|conf|conv|p|q)_\d+(_\d+)*")


class SolutionError(ValueError):
    """Malformed solution text, a missing control, or a fractional binary."""


class SolutionMismatch(SolutionError):
    """The solution names variables the model does not have."""


@dataclass
class SolutionMap:
    assignments: dict[str, Fraction] = field(default_factory=dict)
    objective: Fraction | None = None

    def __getitem__(self, name: str) -> Fraction:
        return self.assignments[name]

    def __contains__(self, name: str) -> bool:
        return name in self.assignments


def _number(text: str, where: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise SolutionError(f"{where}: not a finite number: {text!r}") from None


def _parse_xml(text: str) -> SolutionMap:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise SolutionError(f"malformed XML solution: {exc}") from None
    sol = SolutionMap()
    header = root.find("header")
    if header is not None and "objectiveValue" in header.attrib:
        sol.objective = _number(header.attrib["objectiveValue"], "header objectiveValue")
    for var in root.iter("variable"):
        name, value = var.attrib.get("name"), var.attrib.get("value")
        if name is None or value is None:
            raise SolutionError("XML <variable> without name or value")
        sol.assignments[name] = _number(value, name)
    return sol


_OBJECTIVE = re.compile(r"#?\s*objective(?:\s+value)?\s*[:=]?\s*(\S+)", re.IGNORECASE)


def _parse_text(text: str) -> SolutionMap:
    sol = SolutionMap()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _OBJECTIVE.fullmatch(line)
        if m:
            sol.objective = _number(m.group(1), f"line {lineno}")
            continue
        if line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise SolutionError(f"line {lineno}: expected 'name value', got {raw!r}")
        # a trailing "(obj:...)" column is tolerated
        sol.assignments[parts[0]] = _number(parts[1], f"line {lineno}")
    return sol


def parse_solution(text: str, model: MilpModel | None = None) -> SolutionMap:
    """Parse plain ``name value`` lines or a CPLEX-style XML solution.

    Values are converted exactly (``"4.5e-1"`` becomes ``9/20``).  Binaries,
    recognized from ``model`` when given or from their name otherwise, are
    snapped to 0/1 when within ``1e-6``; anything further away is an error.
    """
    sol = _parse_xml(text) if text.lstrip().startswith("<") else _parse_text(text)
    if model is not None:
        unknown = sorted(set(sol.assignments) - set(model.vars))
        if unknown:
            raise SolutionMismatch(f"solution names {len(unknown)} unknown variable(s), e.g. {unknown[:3]}")
    for name, value in sol.assignments.items():
        if model is not None:
            kind = model.vars[name].kind
        else:
            kind = BINARY if _BINARY_NAME.fullmatch(name) else None
        if kind in (BINARY, INTEGER):
            snapped = round(value)
            if abs(value - snapped) > BINARY_TOLERANCE:
                raise SolutionError(f"{name} = {float(value)} is not integral within {float(BINARY_TOLERANCE)}")
            if kind == BINARY and snapped not in (0, 1):
                raise SolutionError(f"binary {name} = {snapped}")
            sol.assignments[name] = Fraction(snapped)
    return sol


def extract_control(solution: SolutionMap | Mapping[str, Fraction], N: int,
                    snap_denominator: int | None = None) -> tuple[Fraction, ...]:
    """Control sequence ``x_0_0 .. x_{N-1}_0``.

    Values a hair outside ``[0, 1]`` (solver round-off) are clamped.  With
    ``snap_denominator`` each value is replaced by the closest fraction whose
    denominator does not exceed it.
    """
    values = solution.assignments if isinstance(solution, SolutionMap) else solution
    controls = []
    for t in range(N):
        name = f"x_{t}_0"
        if name not in values:
            raise SolutionError(f"solution lacks control variable {name}")
        u = Fraction(values[name])
        if not -BINARY_TOLERANCE <= u <= 1 + BINARY_TOLERANCE:
            raise SolutionError(f"{name} = {float(u)} outside [0, 1]")
        u = min(Fraction(1), max(Fraction(0), u))
        if snap_denominator:
            u = u.limit_denominator(snap_denominator)
        controls.append(u)
    return tuple(controls)


@dataclass(frozen=True)
class BandHit:
    """A distance inside the safety band, where the lower-bound model is not reliable."""

    stage: int
    a: int  # 0 = control
    b: int
    distance: Fraction


@dataclass
class VerifyReport:
    count: int
    perturbed: Fraction | None
    trajectory: Trajectory
    band_hits: list[BandHit]
    #: voters that end within ``|eps_hat|`` outside the conviction interval
    near_misses: list[int] = field(default_factory=list)

    @property
    def states(self):
        return self.trajectory.states


def band_hits(instance: Instance, trajectory: Trajectory, eps_hat: Fraction) -> list[BandHit]:
    eps, width = instance.epsilon, abs(Fraction(eps_hat))
    hits = []
    for t, u in enumerate(trajectory.controls):
        state = trajectory.states[t]
        points = [(0, u)] + list(enumerate(state, start=1))
        for ai, (a, xa) in enumerate(points):
            for b, xb in points[ai + 1:]:
                d = abs(xa - xb)
                if eps < d <= eps + width:
                    hits.append(BandHit(t, a, b, d))
    return hits


def verify_control(instance: Instance, controls: Sequence[Fraction],
                   eps_hat: Fraction = Fraction(1, 100_000)) -> VerifyReport:
    traj = simulate(instance, controls, stages=len(controls))
    try:
        pert = perturbed_objective(traj, instance) if traj.stages else None
    except (PerturbationUndefined, InstanceError):
        pert = None
    hits = band_hits(instance, traj, eps_hat) if instance.is_bc else []
    width = abs(Fraction(eps_hat))
    misses = [i for i, x in enumerate(traj.final, start=1)
              if instance.left - width <= x < instance.left or instance.right < x <= instance.right + width]
    return VerifyReport(convinced_count(traj.final, instance.left, instance.right), pert, traj, hits, misses)


# ---------------------------------------------------------------------- optional external solver

def highs_available() -> bool:
    try:
        import highspy  # noqa: F401
    except ImportError:
        return False
    return True


def solve_with_highs(model: MilpModel, time_limit: float = 3600.0, verbose: bool = False) -> SolutionMap:
    """Write ``model`` as LP, solve it with HiGHS, and read the values back.

    HiGHS is an optional dependency (``pip install artifact[solver]``).
    """
    try:
        import highspy
    except ImportError:
        raise RuntimeError("HiGHS is not installed; install the 'solver' extra") from None
    from .lpformat import emit_lp

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / f"{model.name}.lp"
        path.write_text(emit_lp(model))
        h = highspy.Highs()
        h.setOptionValue("output_flag", verbose)
        h.setOptionValue("time_limit", float(time_limit))
        h.setOptionValue("mip_rel_gap", 0.0)
        h.setOptionValue("mip_abs_gap", 1e-3)
        if h.readModel(str(path)) != highspy.HighsStatus.kOk:
            raise RuntimeError("HiGHS rejected the emitted LP file")
        h.run()
    status = h.modelStatusToString(h.getModelStatus())
    if h.getInfo().primal_solution_status != 2:  # 2 = feasible
        raise RuntimeError(f"HiGHS found no feasible solution (status {status})")
    log.info("HiGHS finished %s with status %s", model.name, status)
    values = h.getSolution().col_value
    lines = [f"objective {h.getInfo().objective_function_value!r}"]
    lines += [f"{h.getColName(i)[1]} {float(value)!r}" for i, value in enumerate(values)]
    return parse_solution("\n".join(lines), model)


def milp_inner(kind: str = "bc-advanced", eps_hat: Fraction = Fraction(1, 100_000),
               time_limit: float = 600.0, snap_denominator: int | None = None):
    """Inner solver for :func:`~campaign_control.heuristics.mpc` backed by HiGHS."""
    from .builders import MilpBuildOptions, build_model

    def solve(sub: Instance, horizon: int) -> tuple[Fraction, ...]:
        model = build_model(kind, sub, horizon, MilpBuildOptions(eps_hat=eps_hat))
        return extract_control(solve_with_highs(model, time_limit), horizon, snap_denominator)
    return solve


def repair_control(instance: Instance, controls: Sequence[Fraction],
                   eps_hat: Fraction = Fraction(1, 100_000)) -> tuple[Fraction, ...]:
    """Pull controls that sit just beyond some voter's reach onto the reach edge.

    A floating-point solver may put the control at distance ``eps + 1e-16``
    from a voter it treats as influenced.  Stage by stage, any control whose
    distance to a voter lies in ``(eps, eps + |eps_hat|]`` is moved to
    exactly ``eps`` from that voter (the nearest such voter first), and the
    run continues from the exactly simulated state.
    """
    eps, width = instance.epsilon, abs(Fraction(eps_hat))
    repaired = []
    profile = instance.start
    for u in controls:
        u = Fraction(u)
        near = [x for x in profile if eps < abs(u - x) <= eps + width]
        if near:
            x = min(near, key=lambda v: abs(u - v))
            u = x + eps if u > x else x - eps
            u = min(Fraction(1), max(Fraction(0), u))
        repaired.append(u)
        profile = simulate(instance.with_start(profile), [u]).final
    return tuple(repaired)


def best_exact_control(instance: Instance, controls: Sequence[Fraction],
                       eps_hat: Fraction = Fraction(1, 100_000),
                       snap_denominator: int = 10**6) -> tuple[str, tuple[Fraction, ...], VerifyReport]:
    """Try the raw, edge-repaired and snapped variants of a float control; keep the best.

    Every candidate is verified exactly, so the returned count is always
    achievable; the label says which variant won (ties prefer the raw one).
    """
    raw = tuple(Fraction(u) for u in controls)
    snapped = tuple(u.limit_denominator(snap_denominator) for u in raw)
    candidates = [("raw", raw), ("repaired", repair_control(instance, raw, eps_hat)),
                  ("snapped", snapped), ("snapped+repaired", repair_control(instance, snapped, eps_hat))]
    best = None
    for label, cand in candidates:
        report = verify_control(instance, cand, eps_hat)
        if best is None or report.count > best[2].count:
            best = (label, cand, report)
    return best
