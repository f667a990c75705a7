"""Genetic search over control sequences.

A chromosome holds one control opinion per stage.  Every fitness value is
computed from an exact simulation; genes are drawn from the grid ``k/10^6``
so they stay exact rationals.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernel
from .dynamics import Instance, convinced_count, simulate

log = logging.getLogger(__name__)

GENE_GRID = 10**6
MAX_SPREAD_SCORE = Fraction(10)
#: weight of an opinion at the centre of the interval under BD2A (1 at the borders)
BD2A_CENTER_WEIGHT = Fraction(4, 5)

FITNESS_KINDS = ("MV", "D2P2", "BD2A", "BD2M", "MDBFL", "MDBFLS", "MDBFL2CS")
SELECTORS = ("WRS", "BCS")

Genes = tuple[Fraction, ...]


@dataclass(frozen=True)
class Chromosome:
    genes: Genes

    def __post_init__(self):
        genes = tuple(Fraction(g) for g in self.genes)
        if any(not 0 <= g <= 1 for g in genes):
            raise ValueError("genes must lie in [0, 1]")
        object.__setattr__(self, "genes", genes)

    def __len__(self) -> int:
        return len(self.genes)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 500
    generations: int = 250
    mutation_rate: Fraction = Fraction(1, 15)
    crossovers: int = 2
    selector: str = "BCS"
    survival_ratio: Fraction = Fraction(95, 100)
    fitness: str = "MV"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mutation_rate", Fraction(self.mutation_rate))
        object.__setattr__(self, "survival_ratio", Fraction(self.survival_ratio))
        if self.population_size < 2:
            raise ValueError("population needs at least two chromosomes")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation rate must lie in [0, 1]")
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}; expected one of {SELECTORS}")
        if not 0 < self.survival_ratio <= 1:
            raise ValueError("survival ratio must lie in (0, 1]")
        if self.fitness not in FITNESS_KINDS:
            raise ValueError(f"unknown fitness {self.fitness!r}; expected one of {FITNESS_KINDS}")

    @property
    def mutations_per_generation(self) -> int:
        return math.floor(self.population_size * self.mutation_rate)


# ---------------------------------------------------------------------- fitness

def final_profile(instance: Instance, genes: Sequence[Fraction]) -> tuple[Fraction, ...]:
    if instance.is_bc:
        prof = _kernel.from_fractions(instance.start)
        for u in genes:
            prof = _kernel.bc_step(prof, instance.epsilon, u)
        return _kernel.to_fractions(prof)
    return simulate(instance, genes).final


def _outside_weight(x: Fraction, left: Fraction, right: Fraction) -> Fraction:
    """1 inside ``[l, r]``, falling linearly to 0 at the unit-interval edge."""
    if x < left:
        return max(Fraction(0), 1 - (left - x) / left)
    if x > right:
        return max(Fraction(0), 1 - (x - right) / (1 - right))
    return Fraction(1)


def _border_weight(x: Fraction, left: Fraction, right: Fraction) -> Fraction:
    if not left <= x <= right:
        return _outside_weight(x, left, right)
    half = (right - left) / 2
    if half == 0:
        return Fraction(1)
    depth = min(x - left, right - x) / half
    return 1 - (1 - BD2A_CENTER_WEIGHT) * depth


def _spread_ratio(profile, left, right) -> Fraction:
    d = max(profile) - min(profile)
    width = right - left
    if d <= width:
        return Fraction(0)
    return min(Fraction(1), (d - width) / (1 - width))


def evaluate(kind: str, instance: Instance, profile: Sequence[Fraction]) -> Fraction:
    """Fitness of a final profile."""
    left, right = instance.left, instance.right
    if kind == "MV":
        return Fraction(convinced_count(profile, left, right))
    if kind == "D2P2":
        return sum((_outside_weight(x, left, right) for x in profile), Fraction(0))
    if kind == "BD2A":
        return sum((_border_weight(x, left, right) for x in profile), Fraction(0))
    if kind == "BD2M":
        count = convinced_count(profile, left, right)
        stray = [x for x in profile if not left <= x <= right]
        if not stray:
            return Fraction(count)
        nearest = min(stray, key=lambda x: max(left - x, x - right))
        return count + _outside_weight(nearest, left, right)
    if kind == "MDBFL":
        return MAX_SPREAD_SCORE * (1 - _spread_ratio(profile, left, right))
    if kind == "MDBFLS":
        return MAX_SPREAD_SCORE * (1 - _spread_ratio(profile, left, right)) ** 2
    if kind == "MDBFL2CS":
        c = instance.center
        s = (min(profile) - c) ** 2 + (max(profile) - c) ** 2
        worst = c**2 + (1 - c) ** 2
        return MAX_SPREAD_SCORE * (1 - s / worst)
    raise ValueError(f"unknown fitness {kind!r}")


def fitness(kind: str, instance: Instance, chromosome: Chromosome | Sequence[Fraction]) -> Fraction:
    genes = chromosome.genes if isinstance(chromosome, Chromosome) else tuple(chromosome)
    return evaluate(kind, instance, final_profile(instance, genes))


def max_fitness(kind: str, instance: Instance) -> Fraction:
    """Value at which evolution stops early."""
    if kind in ("MV", "D2P2", "BD2A", "BD2M"):
        return Fraction(instance.n)
    return MAX_SPREAD_SCORE


# ---------------------------------------------------------------------- operators

def random_gene(rng: np.random.Generator) -> Fraction:
    return Fraction(int(rng.integers(0, GENE_GRID + 1)), GENE_GRID)


def random_chromosome(N: int, rng: np.random.Generator) -> Chromosome:
    return Chromosome(tuple(random_gene(rng) for _ in range(N)))


def select(population: list[Chromosome], scores: Sequence[Fraction], selector: str,
           rng: np.random.Generator, survival_ratio: Fraction = Fraction(95, 100)) -> list[Chromosome]:
    """Next population of the same size.

    ``WRS`` samples with replacement proportionally to the score; ``BCS``
    keeps the best ``ceil(rho * size)`` and refills by uniform resampling of
    the survivors.
    """
    size = len(population)
    if size == 0:
        raise ValueError("empty population")
    if any(s < 0 for s in scores):
        raise ValueError("selection needs non-negative scores")
    if selector == "WRS":
        total = sum(scores)
        if total == 0:
            log.warning("all scores are zero; roulette falls back to uniform sampling")
            picks = rng.integers(0, size, size)
        else:
            p = np.array([float(s / total) for s in scores])
            picks = rng.choice(size, size=size, replace=True, p=p / p.sum())
        return [population[k] for k in picks]
    if selector == "BCS":
        keep = math.ceil(Fraction(survival_ratio) * size)
        order = sorted(range(size), key=lambda k: (-scores[k], k))[:keep]
        survivors = [population[k] for k in order]
        refill = rng.integers(0, keep, size - keep)
        return survivors + [survivors[k] for k in refill]
    raise ValueError(f"unknown selector {selector!r}")


def crossover_at(c1: Chromosome, c2: Chromosome, cut: int) -> tuple[Chromosome, Chromosome]:
    """Swap genes ``cut..N`` (1-based): cut 7 on 10 genes exchanges the last four."""
    if len(c1) != len(c2):
        raise ValueError("crossover needs chromosomes of equal length")
    if not 1 <= cut <= len(c1):
        raise ValueError(f"cut point {cut} outside 1..{len(c1)}")
    k = cut - 1
    return (Chromosome(c1.genes[:k] + c2.genes[k:]), Chromosome(c2.genes[:k] + c1.genes[k:]))


def crossover(c1: Chromosome, c2: Chromosome, rng: np.random.Generator) -> tuple[Chromosome, Chromosome]:
    if len(c1) == 0:
        return c1, c2
    return crossover_at(c1, c2, int(rng.integers(1, len(c1) + 1)))


def mutate(chromosome: Chromosome, rng: np.random.Generator) -> Chromosome:
    if len(chromosome) == 0:
        return chromosome
    genes = list(chromosome.genes)
    genes[int(rng.integers(0, len(genes)))] = random_gene(rng)
    return Chromosome(tuple(genes))


# ---------------------------------------------------------------------- loop

@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: Fraction
    best_count: int


@dataclass
class GaResult:
    best: Chromosome
    best_fitness: Fraction
    best_count: int
    history: list[GenerationRecord] = field(default_factory=list)
    evaluations: int = 0


def ga_run(instance: Instance, N: int, config: GaConfig = GaConfig(),
           progress: Callable[[GenerationRecord], None] | None = None) -> GaResult:
    """Evolve control sequences of length ``N``; deterministic for a given seed.

    The best chromosome seen so far is kept outside the population, so the
    history is non-decreasing even though operators may destroy it.
    """
    rng = np.random.default_rng(config.seed)
    cache: dict[Genes, tuple[Fraction, int]] = {}
    target = max_fitness(config.fitness, instance)

    def score(ch: Chromosome) -> tuple[Fraction, int]:
        hit = cache.get(ch.genes)
        if hit is None:
            prof = final_profile(instance, ch.genes)
            hit = (evaluate(config.fitness, instance, prof), convinced_count(prof, instance.left, instance.right))
            cache[ch.genes] = hit
        return hit

    population = [random_chromosome(N, rng) for _ in range(config.population_size)]
    best: Chromosome | None = None
    best_key = None
    history: list[GenerationRecord] = []

    generation = 0
    while True:
        results = [score(ch) for ch in population]
        for ch, (fit, count) in zip(population, results):
            if best_key is None or (fit, count) > best_key:
                best, best_key = ch, (fit, count)
        record = GenerationRecord(generation, best_key[0], best_key[1])
        history.append(record)
        if progress:
            progress(record)
        if generation >= config.generations or best_key[0] >= target:
            break
        generation += 1

        population = select(population, [f for f, _ in results], config.selector, rng, config.survival_ratio)
        for _ in range(config.crossovers):
            a, b = (int(k) for k in rng.choice(len(population), size=2, replace=False))
            population[a], population[b] = crossover(population[a], population[b], rng)
        for _ in range(config.mutations_per_generation):
            k = int(rng.integers(0, len(population)))
            population[k] = mutate(population[k], rng)

    return GaResult(best, best_key[0], best_key[1], history, len(cache))


def write_history(history: Sequence[GenerationRecord], path, digits: int = 12) -> None:
    from .numeric import to_decimal

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "best_fitness", "best_count"])
        for rec in history:
            w.writerow([rec.generation, to_decimal(rec.best_fitness, digits), rec.best_count])
