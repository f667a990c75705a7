"""Bounded-confidence (BC) and DeGroot (DG) opinion dynamics with a controller.

Voters are indexed ``1..n`` in the public API; index ``0`` is the controller.
Profiles are tuples of :class:`~fractions.Fraction` and every comparison is an
exact rational comparison.  Confidence (``|x_j - x_i| <= eps``) and conviction
(``l <= x <= r``) are closed tests.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from . import _kernel

log = logging.getLogger(__name__)

Profile = tuple[Fraction, ...]

#: Marker placed in a confidence set when the control is within reach.
CONTROL = 0


class InstanceError(ValueError):
    """An instance or control violates a model invariant."""


class PerturbationUndefined(InstanceError):
    """The perturbed objective divides by ``l`` and ``1 - r``; neither may be zero."""


@dataclass(frozen=True)
class BC:
    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if not 0 < self.epsilon < 1:
            raise InstanceError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class DG:
    """Row-stochastic weights; ``weights[i][0]`` is voter ``i+1``'s weight on the control."""

    weights: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(w) for w in row) for row in self.weights)
        object.__setattr__(self, "weights", rows)
        n = len(rows)
        for i, row in enumerate(rows, start=1):
            if len(row) != n + 1:
                raise InstanceError(f"weight row {i} has {len(row)} entries, expected {n + 1}")
            if any(w < 0 for w in row):
                raise InstanceError(f"weight row {i} has a negative entry")
            if sum(row) != 1:
                raise InstanceError(f"weight row {i} sums to {sum(row)}, not 1")


Dynamics = Union[BC, DG]


def _check_unit(values: Sequence[Fraction], what: str) -> None:
    for k, v in enumerate(values):
        if not 0 <= v <= 1:
            raise InstanceError(f"{what} {k} = {v} is outside [0, 1]")


@dataclass(frozen=True)
class Instance:
    """A campaign problem.  Start opinions are sorted on construction."""

    start: Profile
    dynamics: Dynamics
    left: Fraction
    right: Fraction
    horizon: int = 0
    name: str = ""

    def __post_init__(self):
        start = tuple(Fraction(x) for x in self.start)
        if not start:
            raise InstanceError("an instance needs at least one voter")
        _check_unit(start, "start opinion")
        left, right = Fraction(self.left), Fraction(self.right)
        if not 0 <= left < right <= 1:
            raise InstanceError(f"conviction interval [{left}, {right}] must satisfy 0 <= l < r <= 1")
        if self.horizon < 0:
            raise InstanceError("horizon must be non-negative")
        order = sorted(range(len(start)), key=start.__getitem__)
        dyn = self.dynamics
        if order != list(range(len(start))):
            log.info("start opinions of %s were not sorted; voters renumbered", self.name or "instance")
            start = tuple(start[k] for k in order)
            if isinstance(dyn, DG):
                dyn = DG(tuple((dyn.weights[k][0],) + tuple(dyn.weights[k][m + 1] for m in order) for k in order))
        if isinstance(dyn, DG) and len(dyn.weights) != len(start):
            raise InstanceError("weight matrix size does not match the number of voters")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "dynamics", dyn)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def n(self) -> int:
        return len(self.start)

    @property
    def is_bc(self) -> bool:
        return isinstance(self.dynamics, BC)

    @property
    def epsilon(self) -> Fraction:
        if not isinstance(self.dynamics, BC):
            raise InstanceError("DG instances have no confidence radius")
        return self.dynamics.epsilon

    @property
    def weights(self):
        if not isinstance(self.dynamics, DG):
            raise InstanceError("BC instances have no weight matrix")
        return self.dynamics.weights

    @property
    def omega(self) -> Fraction:
        """Smallest control weight over all voters."""
        return min(row[0] for row in self.weights)

    @property
    def center(self) -> Fraction:
        return (self.left + self.right) / 2

    def with_start(self, start: Sequence[Fraction], horizon: int | None = None) -> "Instance":
        return Instance(tuple(start), self.dynamics, self.left, self.right,
                        self.horizon if horizon is None else horizon, self.name)

    def with_horizon(self, horizon: int) -> "Instance":
        return Instance(self.start, self.dynamics, self.left, self.right, horizon, self.name)


@dataclass(frozen=True)
class Trajectory:
    states: tuple[Profile, ...]
    controls: tuple[Fraction, ...] = field(default=())

    @property
    def final(self) -> Profile:
        return self.states[-1]

    @property
    def stages(self) -> int:
        return len(self.states) - 1


def confidence_set(profile: Sequence[Fraction], control: Fraction | None, i: int,
                   epsilon: Fraction) -> frozenset[int]:
    """Members of voter ``i``'s confidence set; ``CONTROL`` (0) marks the control."""
    n = len(profile)
    if not 1 <= i <= n:
        raise IndexError(f"voter index {i} out of range 1..{n}")
    x = profile[i - 1]
    members = {j for j in range(1, n + 1) if abs(profile[j - 1] - x) <= epsilon}
    if control is not None and abs(control - x) <= epsilon:
        members.add(CONTROL)
    return frozenset(members)


def bc_step(profile: Sequence[Fraction], control: Fraction | None, epsilon: Fraction) -> Profile:
    """Controlled BC update; voter order of the input is preserved in the output."""
    profile = tuple(Fraction(x) for x in profile)
    if control is not None:
        control = Fraction(control)
        if not 0 <= control <= 1:
            raise InstanceError(f"control {control} is outside [0, 1]")
    order = sorted(range(len(profile)), key=profile.__getitem__)
    sorted_out = _kernel.to_fractions(
        _kernel.bc_step(_kernel.from_fractions([profile[k] for k in order]), Fraction(epsilon), control))
    out = [Fraction(0)] * len(profile)
    for pos, k in enumerate(order):
        out[k] = sorted_out[pos]
    return tuple(out)


def dg_step(profile: Sequence[Fraction], control: Fraction | None, weights) -> Profile:
    """Controlled DG update ``x_i' = sum_j w_ij x_j`` with ``x_0`` the control."""
    n = len(profile)
    if len(weights) != n:
        raise InstanceError("weight matrix size does not match the profile")
    out = []
    for i, row in enumerate(weights, start=1):
        if sum(row) != 1:
            raise InstanceError(f"weight row {i} sums to {sum(row)}, not 1")
        if control is None and row[0] != 0:
            raise InstanceError(f"voter {i} has control weight {row[0]} but no control was given")
        value = sum((w * x for w, x in zip(row[1:], profile)), Fraction(0))
        if control is not None:
            value += row[0] * Fraction(control)
        out.append(value)
    return tuple(out)


def step(instance: Instance, profile: Sequence[Fraction], control: Fraction | None) -> Profile:
    if instance.is_bc:
        return bc_step(profile, control, instance.epsilon)
    return dg_step(profile, control, instance.weights)


def simulate(instance: Instance, controls: Sequence[Fraction] = (), stages: int | None = None) -> Trajectory:
    """Run the dynamics from the start profile.

    ``controls`` has length ``stages`` (default: the instance horizon) or is
    empty for an uncontrolled run.
    """
    controls = tuple(Fraction(u) for u in controls)
    if stages is None:
        stages = len(controls) if controls else instance.horizon
    if controls and len(controls) != stages:
        raise InstanceError(f"expected {stages} controls, got {len(controls)}")
    _check_unit(controls, "control")
    if instance.is_bc:
        eps = instance.epsilon
        prof = _kernel.from_fractions(instance.start)
        states = [instance.start]
        for t in range(stages):
            prof = _kernel.bc_step(prof, eps, controls[t] if controls else None)
            states.append(_kernel.to_fractions(prof))
    else:
        states = [instance.start]
        for t in range(stages):
            states.append(dg_step(states[-1], controls[t] if controls else None, instance.weights))
    return Trajectory(tuple(states), controls)


def conviction_set(profile: Sequence[Fraction], left: Fraction, right: Fraction) -> frozenset[int]:
    return frozenset(i for i, x in enumerate(profile, start=1) if left <= x <= right)


def convinced_count(profile: Sequence[Fraction], left: Fraction, right: Fraction) -> int:
    return sum(1 for x in profile if left <= x <= right)


def distance_left(x: Fraction, left: Fraction) -> Fraction:
    return max(Fraction(0), left - x)


def distance_right(x: Fraction, right: Fraction) -> Fraction:
    return max(Fraction(0), x - right)


def perturbed_objective(trajectory: Trajectory, instance: Instance) -> Fraction:
    """Convinced count plus one minus the normalized mean distance of stray opinions.

    Stages ``1..N`` contribute; left distances are scaled by ``1/l`` and right
    distances by ``1/(1-r)``, so the fractional part lies in ``[0, 1]``.
    """
    left, right = instance.left, instance.right
    if left == 0 or right == 1:
        raise PerturbationUndefined("perturbed objective needs l > 0 and r < 1")
    N = trajectory.stages
    if N < 1:
        raise InstanceError("perturbed objective needs at least one stage")
    n = len(trajectory.final)
    dl = sum(distance_left(x, left) for state in trajectory.states[1:] for x in state)
    dr = sum(distance_right(x, right) for state in trajectory.states[1:] for x in state)
    penalty = dl / (N * left * n) + dr / (N * (1 - right) * n)
    return convinced_count(trajectory.final, left, right) + 1 - penalty
