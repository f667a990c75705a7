"""Canonical instances, random instance generation and the JSON instance format."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

from .dynamics import BC, DG, Instance, InstanceError
from .numeric import format_rational, parse_rational, round_significant

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SIGNIFICANT_DIGITS = 16


class SchemaError(InstanceError):
    """Instance file is structurally invalid."""


def benchmark(horizon: int = 10) -> Instance:
    """Eleven equidistant voters, eps = 0.15, conviction interval [0.375, 0.625]."""
    return Instance(
        start=tuple(Fraction(k, 10) for k in range(11)),
        dynamics=BC(Fraction(3, 20)),
        left=Fraction(3, 8),
        right=Fraction(5, 8),
        horizon=horizon,
        name="benchmark",
    )


def benchmark_dg(horizon: int = 1) -> Instance:
    """The benchmark start profile under uniform DeGroot weights and no control weight."""
    n = 11
    row = (Fraction(0),) + (Fraction(1, n),) * n
    return Instance(benchmark().start, DG((row,) * n), Fraction(3, 8), Fraction(5, 8), horizon, "benchmark-dg")


def six_voter_example(horizon: int = 6) -> Instance:
    return Instance(
        start=tuple(Fraction(k, 5) for k in range(6)),
        dynamics=BC(Fraction(1, 5)),
        left=Fraction(3, 8),
        right=Fraction(5, 8),
        horizon=horizon,
        name="six-voter",
    )


@dataclass(frozen=True)
class AlternativesVector:
    alternatives: tuple[Fraction, ...]
    favored: int  # 1-based

    def __post_init__(self):
        alts = tuple(Fraction(a) for a in self.alternatives)
        if list(alts) != sorted(alts):
            raise InstanceError("alternatives must be sorted")
        if any(not 0 <= a <= 1 for a in alts):
            raise InstanceError("alternatives must lie in [0, 1]")
        object.__setattr__(self, "alternatives", alts)


def alternatives_to_interval(alts: AlternativesVector) -> tuple[Fraction, Fraction]:
    """Voters closest to the favored alternative: midpoints to its neighbours."""
    a, j = alts.alternatives, alts.favored
    if not 1 < j < len(a):
        raise InstanceError(
            f"favored alternative {j} sits at the boundary of {len(a)} alternatives; no interval rule")
    return (a[j - 2] + a[j - 1]) / 2, (a[j - 1] + a[j]) / 2


@dataclass(frozen=True)
class RandomSpec:
    n: int = 11
    epsilon_range: tuple[Fraction, Fraction] = (Fraction(1, 10), Fraction(1, 5))
    distance_range: tuple[Fraction, Fraction] = (Fraction(1, 10), Fraction(1, 5))
    precision: int = SIGNIFICANT_DIGITS


class UniformSource(Protocol):
    def random(self) -> float: ...


def quantize(value, digits: int = SIGNIFICANT_DIGITS) -> Fraction:
    """Realize a draw as a decimal with ``digits`` significant digits."""
    return round_significant(Fraction(value), digits)


def interval_from_party(o: Fraction, delta: Fraction) -> tuple[Fraction, Fraction]:
    return max(Fraction(0), o - delta), min(Fraction(1), o + delta)


def _uniform(rng: UniformSource, lo: Fraction, hi: Fraction, digits: int) -> Fraction:
    return quantize(lo + (hi - lo) * quantize(rng.random(), digits), digits)


def make_random_instance(start: Sequence, epsilon, party_opinion, conviction_distance,
                         horizon: int = 0, name: str = "") -> Instance:
    o, delta = Fraction(party_opinion), Fraction(conviction_distance)
    left, right = interval_from_party(o, delta)
    return Instance(tuple(Fraction(x) for x in start), BC(Fraction(epsilon)), left, right, horizon, name)


def random_instance(spec: RandomSpec, rng: UniformSource, horizon: int = 0) -> Instance:
    """Uniform start opinions, eps, party opinion and conviction distance."""
    d = spec.precision
    start = sorted(quantize(rng.random(), d) for _ in range(spec.n))
    eps = _uniform(rng, *spec.epsilon_range, d)
    o = quantize(rng.random(), d)
    delta = _uniform(rng, *spec.distance_range, d)
    return make_random_instance(start, eps, o, delta, horizon, "random")


def _reference_raw() -> list[dict]:
    with resources.files(__package__).joinpath("data/reference_samples.json").open() as fh:
        return json.load(fh)["samples"]


def reference_sample(k: int, horizon: int = 0) -> Instance:
    """Published random sample ``k`` (1..5), values stored verbatim."""
    raw = _reference_raw()
    if not 1 <= k <= len(raw):
        raise IndexError(f"sample {k} out of range 1..{len(raw)}")
    s = raw[k - 1]
    return make_random_instance([parse_rational(x) for x in s["start"]], parse_rational(s["epsilon"]),
                                parse_rational(s["party_opinion"]), parse_rational(s["conviction_distance"]),
                                horizon, f"sample{k}")


def reference_samples(horizon: int = 0) -> list[Instance]:
    return [reference_sample(k, horizon) for k in range(1, len(_reference_raw()) + 1)]


# ---------------------------------------------------------------- file format

def instance_to_dict(instance: Instance) -> dict:
    data = {"schema_version": SCHEMA_VERSION, "name": instance.name}
    if instance.is_bc:
        data["dynamics"] = "bc"
        data["epsilon"] = format_rational(instance.epsilon)
    else:
        data["dynamics"] = "dg"
        data["weights"] = [[format_rational(w) for w in row] for row in instance.weights]
    data["start"] = [format_rational(x) for x in instance.start]
    data["interval"] = [format_rational(instance.left), format_rational(instance.right)]
    data["horizon"] = instance.horizon
    return data


def _field(data: dict, key: str):
    if key not in data:
        raise SchemaError(f"instance file is missing field {key!r}")
    return data[key]


def _rational(value, where: str) -> Fraction:
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if not isinstance(value, str):
        raise SchemaError(f"field {where}: expected a 'p/q' or decimal string, got {value!r}")
    try:
        return parse_rational(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"field {where}: {exc}") from exc


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise SchemaError("instance file must contain a JSON object")
    version = _field(data, "schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"field schema_version: unsupported version {version!r}")
    kind = _field(data, "dynamics")
    start = _field(data, "start")
    if not isinstance(start, list):
        raise SchemaError("field start: expected a list")
    start = [_rational(x, f"start[{k}]") for k, x in enumerate(start)]
    interval = _field(data, "interval")
    if not isinstance(interval, list) or len(interval) != 2:
        raise SchemaError("field interval: expected [left, right]")
    left, right = (_rational(x, f"interval[{k}]") for k, x in enumerate(interval))
    horizon = data.get("horizon", 0)
    if not isinstance(horizon, int) or isinstance(horizon, bool):
        raise SchemaError("field horizon: expected an integer")
    if kind == "bc":
        dyn = BC(_rational(_field(data, "epsilon"), "epsilon"))
    elif kind == "dg":
        rows = _field(data, "weights")
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise SchemaError("field weights: expected a list of rows")
        dyn = DG(tuple(tuple(_rational(w, f"weights[{i}][{j}]") for j, w in enumerate(row))
                       for i, row in enumerate(rows)))
    else:
        raise SchemaError(f"field dynamics: expected 'bc' or 'dg', got {kind!r}")
    if start != sorted(start):
        log.warning("start opinions are not sorted; sorting them (voter numbering follows the sorted order)")
    return Instance(tuple(start), dyn, left, right, horizon, data.get("name", ""))


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=2) + "\n")


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return instance_from_dict(data)
