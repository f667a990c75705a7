"""Trajectory CSV reading and standalone SVG rendering."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numeric import format_rational, parse_rational, to_decimal

WIDTH, HEIGHT, MARGIN = 640, 400, 48


class CsvFormatError(ValueError):
    pass


@dataclass
class TrajectoryTable:
    """Opinions by stage; ``controls[t]`` is the control applied in stage ``t``."""

    states: list[list[Fraction]]
    controls: list[Fraction]
    convinced: list[bool]

    @property
    def stages(self) -> int:
        return len(self.states) - 1


def write_trajectory_csv(fh, states: Sequence[Sequence[Fraction]], controls: Sequence[Fraction],
                         left: Fraction, right: Fraction, digits: int = 12, exact: bool = False) -> None:
    fmt = format_rational if exact else (lambda v: to_decimal(v, digits))
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["stage", "agent", "opinion", "convinced"])
    last = len(states) - 1
    for t, state in enumerate(states):
        if t < len(controls):
            w.writerow([t, "control", fmt(controls[t]), ""])
        for i, x in enumerate(state, start=1):
            flag = int(left <= x <= right) if t == last else ""
            w.writerow([t, i, fmt(x), flag])


def read_trajectory_csv(fh) -> TrajectoryTable:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["stage", "agent", "opinion", "convinced"]:
        raise CsvFormatError("expected header stage,agent,opinion,convinced")
    states: dict[int, dict[int, Fraction]] = {}
    controls: dict[int, Fraction] = {}
    flags: dict[int, bool] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            t = int(row["stage"])
            value = parse_rational(row["opinion"])
        except (TypeError, ValueError) as exc:
            raise CsvFormatError(f"line {lineno}: {exc}") from None
        agent = (row["agent"] or "").strip()
        if agent == "control":
            controls[t] = value
            continue
        if not agent.isdigit() or int(agent) < 1:
            raise CsvFormatError(f"line {lineno}: bad agent {agent!r}")
        states.setdefault(t, {})[int(agent)] = value
        if (row["convinced"] or "").strip() in ("0", "1"):
            flags[int(agent)] = row["convinced"].strip() == "1"
    if not states:
        raise CsvFormatError("trajectory is empty")
    stages = sorted(states)
    if stages != list(range(len(stages))):
        raise CsvFormatError("stages are not contiguous from 0")
    n = len(states[0])
    if any(sorted(states[t]) != list(range(1, n + 1)) for t in stages):
        raise CsvFormatError("every stage must list voters 1..n")
    return TrajectoryTable(
        [[states[t][i] for i in range(1, n + 1)] for t in stages],
        [controls[t] for t in sorted(controls)],
        [flags.get(i, False) for i in range(1, n + 1)],
    )


def render_svg(table: TrajectoryTable, band: tuple[Fraction, Fraction] | None = None,
               epsilon: Fraction | None = None, title: str = "") -> str:
    """Voters as circles joined by polylines, controls as squares, conviction band shaded."""
    cols = max(1, table.stages)
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(t) -> float:
        return MARGIN + pw * t / cols

    def py(v) -> float:
        return MARGIN + ph * (1 - float(v))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="20" text-anchor="middle">{_escape(title)}</text>')
    if band is not None:
        lo, hi = band
        out.append(f'<rect class="conviction" x="{MARGIN}" y="{py(hi):.2f}" width="{pw}" '
                   f'height="{py(lo) - py(hi):.2f}" fill="#ffe9a8" fill-opacity="0.7"/>')
    if epsilon is not None:
        half = pw / cols / 4
        for t, u in enumerate(table.controls):
            top, bottom = min(Fraction(1), u + epsilon), max(Fraction(0), u - epsilon)
            out.append(f'<rect class="reach" x="{px(t) - half:.2f}" y="{py(top):.2f}" width="{2 * half:.2f}" '
                       f'height="{py(bottom) - py(top):.2f}" fill="#c8d8f0" fill-opacity="0.5"/>')
    # axes
    out.append(f'<line x1="{MARGIN}" y1="{MARGIN + ph}" x2="{MARGIN + pw}" y2="{MARGIN + ph}" stroke="black"/>')
    out.append(f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{MARGIN + ph}" stroke="black"/>')
    for t in range(table.stages + 1):
        out.append(f'<text x="{px(t):.2f}" y="{MARGIN + ph + 16}" text-anchor="middle">{t}</text>')
    for k in range(0, 11, 2):
        out.append(f'<text x="{MARGIN - 6}" y="{py(Fraction(k, 10)) + 4:.2f}" text-anchor="end">{k / 10:.1f}</text>')
    out.append(f'<text x="{MARGIN + pw / 2:.2f}" y="{HEIGHT - 8}" text-anchor="middle">stage</text>')
    out.append(f'<text x="14" y="{MARGIN + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {MARGIN + ph / 2:.2f})">opinion</text>')
    n = len(table.states[0])
    for i in range(n):
        colour = "#1f6f3f" if table.convinced[i] else "#444444"
        points = " ".join(f"{px(t):.2f},{py(state[i]):.2f}" for t, state in enumerate(table.states))
        out.append(f'<polyline class="voter" points="{points}" fill="none" stroke="{colour}" stroke-width="1"/>')
        for t, state in enumerate(table.states):
            out.append(f'<circle cx="{px(t):.2f}" cy="{py(state[i]):.2f}" r="3" fill="{colour}"/>')
    for t, u in enumerate(table.controls):
        out.append(f'<rect class="control" x="{px(t) - 4:.2f}" y="{py(u) - 4:.2f}" width="8" height="8" fill="#c0392b"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
