"""Solver settings used for the reference MILP runs, as an interactive-CPLEX command file."""

from __future__ import annotations

SOLVER_PARAMETERS: tuple[tuple[str, str, str], ...] = (
    ("simplex tolerance feasibility", "1e-09", ""),
    ("simplex tolerance optimality", "1e-3", ""),
    ("mip strategy variableselection", "3", "strong branching"),
    ("mip tolerance absmipgap", "1e-3", ""),
    ("emphasis numerical", "yes", ""),
    ("timelimit", "3600", "only where a time limit applies"),
)


def emit_parameters(lp_file: str | None = None, ord_file: str | None = None, time_limit: bool = True) -> str:
    """A command script: ``cplex < script`` reads the model, applies the settings and optimizes."""
    lines = []
    if lp_file:
        lines.append(f"read {lp_file}")
    if ord_file:
        lines.append(f"read {ord_file} ord")
    for name, value, note in SOLVER_PARAMETERS:
        if name == "timelimit" and not time_limit:
            continue
        lines.append(f"set {name} {value}")
    lines.append("optimize")
    if lp_file:
        stem = lp_file.rsplit(".", 1)[0]
        lines.append(f"write {stem}.sol")
    lines.append("quit")
    return "\n".join(lines) + "\n"
