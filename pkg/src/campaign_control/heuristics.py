"""Strongest-guy search, receding-horizon control, and the constructive policies.

A strongest-guy control places the controller exactly at confidence distance
from one chosen voter, on the side of the conviction interval's center, or at
the center itself (index 0).  Restricting every stage to those ``n + 1``
placements turns the control problem into a search over index sequences.
"""

from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernel
from .dynamics import (Instance, InstanceError, PerturbationUndefined, Trajectory, convinced_count,
                       perturbed_objective, simulate)

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 5_000_000
THREADS_ENV = "CAMPAIGN_CONTROL_THREADS"

InnerSolver = Callable[[Instance, int], Sequence[Fraction]]


class BudgetExceeded(RuntimeError):
    pass


class InnerSolverError(RuntimeError):
    def __init__(self, stage: int, cause: BaseException):
        self.stage = stage
        super().__init__(f"inner solver failed at stage {stage}: {cause}")


@dataclass(frozen=True)
class SearchOptions:
    mode: str = "exhaustive"  # exhaustive | beam | random
    width: int = 16
    samples: int = 10_000
    seed: int = 0
    delta: Fraction = Fraction(0)
    budget: int = DEFAULT_BUDGET
    workers: int | None = None

    def __post_init__(self):
        if self.mode not in ("exhaustive", "beam", "random"):
            raise ValueError(f"unknown search mode {self.mode!r}")
        if self.width < 1:
            raise ValueError("beam width must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        object.__setattr__(self, "delta", Fraction(self.delta))


@dataclass(frozen=True)
class SearchResult:
    count: int
    controls: tuple[Fraction, ...]
    sequence: tuple[int, ...] | None
    provenance: str
    optimal_in_space: bool = False
    objective: Fraction | None = None
    evaluations: int = 0
    trajectory: Trajectory | None = field(default=None, compare=False, repr=False)


# ------------------------------------------------------------------ placement

def _mu_int(prof: _kernel.IntProfile, i: int, eps: Fraction, center: Fraction, delta: Fraction) -> Fraction:
    if i == 0:
        return center
    nums, den = prof
    x = Fraction(nums[i - 1], den)
    if x <= center:
        return min(x + eps - delta, Fraction(1))
    return max(x - eps + delta, Fraction(0))


def mu(instance: Instance, profile: Sequence[Fraction], i: int, delta: Fraction = Fraction(0)) -> Fraction:
    """Control position pulling voter ``i`` at (almost) full strength toward the center."""
    if not 0 <= i <= instance.n:
        raise IndexError(f"index {i} outside 0..{instance.n}")
    c = instance.center
    if i == 0:
        return c
    x = Fraction(profile[i - 1])
    if x <= c:
        return min(x + instance.epsilon - delta, Fraction(1))
    return max(x - instance.epsilon + delta, Fraction(0))


def apply_index_sequence(instance: Instance, sequence: Sequence[int], delta: Fraction = Fraction(0)):
    """Realize an index sequence: returns ``(controls, trajectory, convinced count)``."""
    eps, c, delta = instance.epsilon, instance.center, Fraction(delta)
    prof = _kernel.from_fractions(instance.start)
    states, controls = [instance.start], []
    for i in sequence:
        if not 0 <= i <= instance.n:
            raise IndexError(f"index {i} outside 0..{instance.n}")
        u = _mu_int(prof, i, eps, c, delta)
        controls.append(u)
        prof = _kernel.bc_step(prof, eps, u)
        states.append(_kernel.to_fractions(prof))
    traj = Trajectory(tuple(states), tuple(controls))
    return tuple(controls), traj, convinced_count(traj.final, instance.left, instance.right)


# ------------------------------------------------------------------ exhaustive

class _Exhaustive:
    """Depth-first enumeration with subtree memoization.

    The winner is the lexicographically smallest sequence reaching the maximum
    count, which is exactly what a plain enumeration keeping the first strict
    improvement returns.  Subtrees are keyed by ``(profile, depth)``; their
    best suffix does not depend on how the profile was reached.
    """

    def __init__(self, instance: Instance, delta: Fraction):
        self.n = instance.n
        self.eps = instance.epsilon
        self.center = instance.center
        self.delta = delta
        self.left, self.right = instance.left, instance.right
        self.memo: dict = {}
        self.steps = 0

    def best(self, prof, depth: int) -> tuple[int, tuple[int, ...]]:
        if depth == 0:
            return _kernel.count_in(prof, self.left, self.right), ()
        key = (prof, depth)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        best_count, best_seq = -1, ()
        by_control: dict[Fraction, tuple[int, tuple[int, ...]]] = {}
        for i in range(self.n + 1):
            u = _mu_int(prof, i, self.eps, self.center, self.delta)
            res = by_control.get(u)
            if res is None:
                self.steps += 1
                res = self.best(_kernel.bc_step(prof, self.eps, u), depth - 1)
                by_control[u] = res
            if res[0] > best_count:
                best_count, best_seq = res[0], (i,) + res[1]
                if best_count == self.n:
                    break
        self.memo[key] = (best_count, best_seq)
        return best_count, best_seq


def _exhaustive_branch(args):
    instance, delta, first, N = args
    ex = _Exhaustive(instance, delta)
    prof = _kernel.from_fractions(instance.start)
    u = _mu_int(prof, first, ex.eps, ex.center, delta)
    count, seq = ex.best(_kernel.bc_step(prof, ex.eps, u), N - 1)
    return count, (first,) + seq, ex.steps + 1


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def _finish(instance: Instance, sequence, delta, provenance, optimal, evaluations) -> SearchResult:
    controls, traj, count = apply_index_sequence(instance, sequence, delta)
    try:
        objective = perturbed_objective(traj, instance) if sequence else None
    except PerturbationUndefined:
        objective = None
    return SearchResult(count, controls, tuple(sequence), provenance, optimal, objective, evaluations, traj)


def _search_exhaustive(instance: Instance, N: int, opts: SearchOptions) -> SearchResult:
    space = (instance.n + 1) ** N
    if space > opts.budget:
        raise BudgetExceeded(
            f"exhaustive search over {space} sequences exceeds the budget of {opts.budget}; "
            "use beam or random mode")
    label = "strongest-guy" if opts.delta == 0 else f"strongest-guy(delta={opts.delta})"
    if N == 0:
        return _finish(instance, (), opts.delta, label + "/exhaustive", True, 1)
    workers = worker_count(opts.workers)
    if workers == 1:
        ex = _Exhaustive(instance, opts.delta)
        _, seq = ex.best(_kernel.from_fractions(instance.start), N)
        return _finish(instance, seq, opts.delta, label + "/exhaustive", True, ex.steps)
    tasks = [(instance, opts.delta, i, N) for i in range(instance.n + 1)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_exhaustive_branch, tasks))
    # max count, ties to the smallest sequence: same answer as the sequential scan
    count, seq, _ = min(results, key=lambda r: (-r[0], r[1]))
    steps = sum(r[2] for r in results)
    return _finish(instance, seq, opts.delta, label + "/exhaustive", True, steps)


# ------------------------------------------------------------------ beam / random

def _stage_score(prof, instance: Instance) -> tuple:
    nums, den = prof
    xs = [Fraction(a, den) for a in nums]
    inside = convinced_count(xs, instance.left, instance.right)
    gap = sum(max(Fraction(0), instance.left - x) + max(Fraction(0), x - instance.right) for x in xs)
    return inside, -gap


def _search_beam(instance: Instance, N: int, opts: SearchOptions) -> SearchResult:
    eps, c, delta = instance.epsilon, instance.center, opts.delta
    beam = [((), _kernel.from_fractions(instance.start))]
    evaluations = 0
    for _ in range(N):
        children = []
        for seq, prof in beam:
            seen = set()
            for i in range(instance.n + 1):
                u = _mu_int(prof, i, eps, c, delta)
                if u in seen:
                    continue
                seen.add(u)
                child = _kernel.bc_step(prof, eps, u)
                evaluations += 1
                children.append((seq + (i,), child))
        scored = sorted(children, key=lambda sc: (tuple(-v for v in _stage_score(sc[1], instance)), sc[0]))
        beam = scored[: opts.width]
    best = min(beam, key=lambda sc: (-_kernel.count_in(sc[1], instance.left, instance.right), sc[0]))
    return _finish(instance, best[0], delta, f"strongest-guy/beam({opts.width})", False, evaluations)


def _search_random(instance: Instance, N: int, opts: SearchOptions) -> SearchResult:
    rng = np.random.default_rng(opts.seed)
    eps, c, delta = instance.epsilon, instance.center, opts.delta
    start = _kernel.from_fractions(instance.start)
    best_count, best_seq = -1, ()
    for _ in range(opts.samples):
        seq = tuple(int(k) for k in rng.integers(0, instance.n + 1, size=N))
        prof = start
        for i in seq:
            prof = _kernel.bc_step(prof, eps, _mu_int(prof, i, eps, c, delta))
        count = _kernel.count_in(prof, instance.left, instance.right)
        if count > best_count or (count == best_count and seq < best_seq):
            best_count, best_seq = count, seq
    return _finish(instance, best_seq, delta, f"strongest-guy/random({opts.samples},seed={opts.seed})",
                   False, opts.samples * N)


def strongest_guy_search(instance: Instance, N: int, options: SearchOptions | None = None) -> SearchResult:
    """Best index sequence of length ``N``.

    Exhaustive mode is optimal over the whole sequence space; beam and random
    modes only give lower bounds (``optimal_in_space`` is False).
    """
    opts = options or SearchOptions()
    if not instance.is_bc:
        raise InstanceError("strongest-guy search needs bounded-confidence dynamics")
    if opts.delta >= instance.epsilon:
        raise ValueError("delta must be smaller than epsilon")
    if opts.mode == "exhaustive":
        return _search_exhaustive(instance, N, opts)
    if opts.mode == "beam":
        return _search_beam(instance, N, opts)
    return _search_random(instance, N, opts)


def modified_strongest_guy(instance: Instance, N: int, delta: Fraction = Fraction(1, 10**6),
                           options: SearchOptions | None = None) -> SearchResult:
    """Strongest-guy search with placements pulled back by ``delta`` from full reach."""
    opts = options or SearchOptions()
    return strongest_guy_search(instance, N, SearchOptions(opts.mode, opts.width, opts.samples, opts.seed,
                                                           Fraction(delta), opts.budget, opts.workers))


# ------------------------------------------------------------------ MPC

def strongest_guy_inner(options: SearchOptions | None = None) -> InnerSolver:
    def solve(sub: Instance, horizon: int) -> tuple[Fraction, ...]:
        return strongest_guy_search(sub, horizon, options).controls
    return solve


def mpc(instance: Instance, N: int, mpc_horizon: int, inner_solver: InnerSolver,
        mode: str = "sliding", nudge: Fraction = Fraction(1, 10**6)):
    """Receding-horizon control: solve a short problem, apply its first control, repeat.

    ``mode="growing"`` re-simulates the applied prefix from the start each
    iteration and, when the inner solver fails, retries once with the last
    applied control nudged by ``+-nudge``.  Returns ``(controls, count, trajectory)``.
    """
    if mpc_horizon < 1:
        raise ValueError("MPC horizon must be >= 1")
    if mode not in ("sliding", "growing"):
        raise ValueError(f"unknown MPC mode {mode!r}")
    applied: list[Fraction] = []
    profile = instance.start
    for t in range(N):
        h = min(mpc_horizon, N - t)
        if mode == "growing":
            profile = simulate(instance, applied, stages=t).final
        sub = instance.with_start(profile, horizon=h)
        try:
            plan = inner_solver(sub, h)
        except Exception as exc:
            if mode != "growing" or not applied:
                raise InnerSolverError(t, exc) from exc
            plan = None
            for sign in (1, -1):
                trial = min(Fraction(1), max(Fraction(0), applied[-1] + sign * nudge))
                profile = simulate(instance, applied[:-1] + [trial], stages=t).final
                try:
                    plan = inner_solver(instance.with_start(profile, horizon=h), h)
                    applied[-1] = trial
                    break
                except Exception:
                    continue
            if plan is None:
                raise InnerSolverError(t, exc) from exc
        if len(plan) < 1:
            raise InnerSolverError(t, ValueError("inner solver returned no control"))
        u = Fraction(plan[0])
        applied.append(u)
        profile = simulate(instance.with_start(profile), [u]).final
    traj = simulate(instance, applied, stages=N)
    return tuple(applied), convinced_count(traj.final, instance.left, instance.right), traj


# ------------------------------------------------------------------ constructive policies

def convince_all_bound(n: int, eps: Fraction) -> int:
    """Stage bound ``ceil((2n + 1) / eps) + 2`` of the convince-everyone policy."""
    q = (2 * n + 1) / Fraction(eps)
    return -(-q.numerator // q.denominator) + 2


def convince_all_policy(instance: Instance) -> tuple[Trajectory, int]:
    """Convince every voter: first merge all opinions, then walk the cluster into ``[l, r]``.

    Requires start opinions and the conviction interval to lie in ``[eps, 1 - eps]``.
    """
    eps, left, right, n = instance.epsilon, instance.left, instance.right, instance.n
    lo, hi = eps, 1 - eps
    if not (all(lo <= x <= hi for x in instance.start) and lo <= left and right <= hi):
        raise InstanceError("start opinions and conviction interval must lie in [eps, 1 - eps]")
    states = [instance.start]
    controls: list[Fraction] = []

    def done(p):
        return all(left <= x <= right for x in p)

    def push(u):
        controls.append(u)
        states.append(simulate(instance.with_start(states[-1]), [u]).final)

    # phase 1: merge
    while not done(states[-1]) and states[-1][-1] - states[-1][0] > eps:
        push(states[-1][0] + eps)
    p = states[-1]
    if not done(p) and p[-1] != p[0]:
        push((p[0] + p[-1]) / 2)
    # phase 2: move the cluster
    step = eps / (n + 1)
    while not done(states[-1]):
        x = states[-1][0]
        if x < left:
            push(x + eps if left - x >= step else x + (n + 1) * (left - x))
        else:
            push(x - eps if x - right >= step else x - (n + 1) * (x - right))
    return Trajectory(tuple(states), tuple(controls)), len(controls)


def constant_control_bound(omega: Fraction, delta: Fraction) -> int:
    """Smallest ``t`` with ``(1 - omega)**t <= delta``, i.e. ``ceil(log delta / log(1 - omega))``."""
    if not 0 < omega <= 1 or not 0 < delta < 1:
        raise ValueError("need 0 < omega <= 1 and 0 < delta < 1")
    t, power = 0, Fraction(1)
    while power > delta:
        power *= 1 - omega
        t += 1
    return t


def constant_control_policy(instance: Instance, target: Fraction, delta: Fraction) -> tuple[Trajectory, int]:
    """Hold the control at ``target`` until every DG opinion is within ``delta`` of it.

    The envelope ``|x_i^t - target| <= (1 - omega)**t`` is checked at every stage.
    """
    omega = instance.omega
    if omega == 0:
        raise InstanceError("some voter ignores the control (omega = 0); the target is unreachable")
    target, delta = Fraction(target), Fraction(delta)
    if not 0 <= target <= 1:
        raise ValueError("target must lie in [0, 1]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    states = [instance.start]
    controls: list[Fraction] = []
    envelope = Fraction(1)
    while any(abs(x - target) > delta for x in states[-1]):
        controls.append(target)
        states.append(simulate(instance.with_start(states[-1]), [target]).final)
        envelope *= 1 - omega
        worst = max(abs(x - target) for x in states[-1])
        if worst > envelope:
            raise AssertionError(f"envelope violated at stage {len(controls)}: {worst} > {envelope}")
    return Trajectory(tuple(states), tuple(controls)), len(controls)
