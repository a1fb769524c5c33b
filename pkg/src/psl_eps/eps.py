"""Evolutionary preference sampling.

Training alternates between periods of ``period`` iterations.  The first
period samples preferences uniformly from the simplex.  At the end of every
period the preferences used in it are ranked by the objectives their model
solutions scored (non-dominated sorting, then crowding distance), the best
``select_fraction`` of them become the population, and the next period's
training preferences are bred from that population with simulated binary
crossover, polynomial mutation and a simplex repair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import EvaluatedPreference, simplex_project
from .model import Adam, OptimizerConfig, ParetoSetModel, training_step
from .problems import EvaluationCounter
from .scalarize import DEFAULT_EPSILON, IdealPoint, Scalarization


@dataclass(frozen=True)
class EpsConfig:
    period: int = 100
    select_fraction: float = 0.1
    crossover_prob: float = 0.9
    mutation_prob: float = 0.9
    eta_c: float = 15.0
    eta_m: float = 20.0

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("period must be a positive integer")
        if not 0.0 < self.select_fraction <= 1.0:
            raise ValueError("select_fraction must lie in (0, 1]")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.eta_c <= 0 or self.eta_m <= 0:
            raise ValueError("distribution indices must be positive")


def sample_uniform(rng: np.random.Generator, count: int, n_obj: int) -> np.ndarray:
    """``count`` preferences distributed uniformly on the simplex.

    Normalised i.i.d. exponentials give a flat Dirichlet sample.
    """
    if count < 1 or n_obj < 2:
        raise ValueError("need count >= 1 and at least two objectives")
    e = rng.standard_exponential((count, n_obj))
    return e / e.sum(axis=1, keepdims=True)


def _objectives(entries) -> np.ndarray:
    if len(entries) and isinstance(entries[0], EvaluatedPreference):
        return np.array([e.objectives for e in entries], dtype=float)
    return np.asarray(entries, dtype=float)


def fast_nondominated_sort(entries) -> list[list[int]]:
    """Partition indices into successive non-dominated fronts.

    ``entries`` is a sequence of ``EvaluatedPreference`` or an ``(n, m)``
    objective array.  Indices within a front are ascending.
    """
    F = _objectives(entries)
    n = len(F)
    if n == 0:
        return []
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(counts == 0)
    while current.size:
        fronts.append(current.tolist())
        counts = counts - dom[current].sum(axis=0)
        counts[current] = -1
        current = np.flatnonzero(counts == 0)
    return fronts


def crowding_distance(front) -> np.ndarray:
    """Crowding distance of each member of a front.

    Members at either end of any objective's ordering get ``inf``; the
    others sum their normalised neighbour gaps.  Objectives with zero range
    add nothing.
    """
    F = _objectives(front)
    n = len(F)
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for j in range(F.shape[1]):
        order = np.argsort(F[:, j], kind="stable")
        col = F[order, j]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = col[-1] - col[0]
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def subset_size(n: int, select_fraction: float) -> int:
    # guard against 0.1 * 800 landing a hair above 80
    return max(1, math.ceil(select_fraction * n - 1e-9))


def select_subset(archive, select_fraction: float) -> list[int]:
    """Indices of the ``ceil(select_fraction * n)`` best archive entries.

    Whole fronts are taken in rank order; the front that would overflow is
    cut by descending crowding distance, ties going to the lower index.
    """
    F = _objectives(archive)
    if len(F) == 0:
        raise ValueError("cannot select from an empty archive")
    k = subset_size(len(F), select_fraction)
    chosen: list[int] = []
    for front in fast_nondominated_sort(F):
        if len(chosen) + len(front) <= k:
            chosen.extend(front)
            if len(chosen) == k:
                break
            continue
        cd = crowding_distance(F[front])
        order = sorted(range(len(front)), key=lambda i: (-cd[i], front[i]))
        chosen.extend(front[i] for i in order[: k - len(chosen)])
        break
    return chosen


def sbx_blend(y1: float, y2: float, betaq_low: float, betaq_high: float) -> tuple[float, float]:
    """Children of ``y1 <= y2`` for given spread factors (1 reproduces the parents)."""
    mid = 0.5 * (y1 + y2)
    half = 0.5 * (y2 - y1)
    return mid - betaq_low * half, mid + betaq_high * half


def _sbx_betaq(u, beta, eta):
    alpha = 2.0 - beta ** -(eta + 1.0)
    if u <= 1.0 / alpha:
        return (u * alpha) ** (1.0 / (eta + 1.0))
    return (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))


def sbx(p1, p2, rng, eta, lower=0.0, upper=1.0):
    """Bounded simulated binary crossover (Deb & Agrawal, NSGA-II variant).

    Each gene is crossed with probability 0.5; crossed children are
    randomly swapped between the two offspring.
    """
    c1 = np.array(p1, dtype=float)
    c2 = np.array(p2, dtype=float)
    for i in range(len(c1)):
        if rng.random() > 0.5 or abs(c1[i] - c2[i]) <= 1e-14:
            continue
        y1, y2 = min(c1[i], c2[i]), max(c1[i], c2[i])
        u = rng.random()
        bq_low = _sbx_betaq(u, 1.0 + 2.0 * (y1 - lower) / (y2 - y1), eta)
        bq_high = _sbx_betaq(u, 1.0 + 2.0 * (upper - y2) / (y2 - y1), eta)
        a, b = sbx_blend(y1, y2, bq_low, bq_high)
        a = min(max(a, lower), upper)
        b = min(max(b, lower), upper)
        if rng.random() <= 0.5:
            a, b = b, a
        c1[i], c2[i] = a, b
    return c1, c2


def polynomial_mutation(x, rng, eta, prob, lower=0.0, upper=1.0):
    """Bounded polynomial mutation applied gene-wise with probability ``prob``."""
    y = np.array(x, dtype=float)
    span = upper - lower
    power = 1.0 / (eta + 1.0)
    for i in range(len(y)):
        if rng.random() >= prob:
            continue
        d1 = (y[i] - lower) / span
        d2 = (upper - y[i]) / span
        u = rng.random()
        if u <= 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            dq = val**power - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            dq = 1.0 - val**power
        y[i] = min(max(y[i] + dq * span, lower), upper)
    return y


def _repair(child, fallback):
    if child.sum() <= 0.0:
        return np.array(fallback, dtype=float)
    return simplex_project(child)


def generate_offspring(population, rng: np.random.Generator, count: int, config: EpsConfig) -> np.ndarray:
    """Breed ``count`` new preferences from the population's preferences.

    Parents are drawn uniformly at random (two distinct members per pair).
    A one-member population can only be mutated.
    """
    pop = np.atleast_2d(np.asarray(population, dtype=float))
    n = len(pop)
    if n == 0:
        raise ValueError("empty population")
    children = []
    while len(children) < count:
        if n == 1:
            child = polynomial_mutation(pop[0], rng, config.eta_m, config.mutation_prob)
            children.append(_repair(child, pop[0]))
            continue
        i, j = rng.choice(n, size=2, replace=False)
        p1, p2 = pop[i], pop[j]
        if rng.random() < config.crossover_prob:
            c1, c2 = sbx(p1, p2, rng, config.eta_c)
        else:
            c1, c2 = p1.copy(), p2.copy()
        for child, parent in ((c1, p1), (c2, p2)):
            child = polynomial_mutation(child, rng, config.eta_m, config.mutation_prob)
            children.append(_repair(child, parent))
    return np.array(children[:count])


@dataclass
class IterationRecord:
    iteration: int
    loss: float
    objectives: np.ndarray
    preferences: np.ndarray
    source: str


@dataclass
class TrainingResult:
    model: ParetoSetModel
    records: list[IterationRecord] = field(default_factory=list)
    n_evaluations: int = 0
    ideal: IdealPoint | None = None
    populations: list[np.ndarray] = field(default_factory=list)


def _train(problem, model, scalarization, optimizer_config, sampler, on_step=None, callback=None,
           epsilon=DEFAULT_EPSILON):
    counter = EvaluationCounter(problem)
    optimizer = Adam(optimizer_config)
    ideal = IdealPoint.empty(problem.n_obj, epsilon)
    result = TrainingResult(model)
    for t in range(1, optimizer_config.max_iterations + 1):
        prefs, source = sampler(t)
        step = training_step(model, prefs, counter, scalarization, ideal, optimizer)
        ideal = step.ideal
        record = IterationRecord(t, step.loss, step.objectives, prefs, source)
        result.records.append(record)
        if on_step is not None:
            on_step(record)
        if callback is not None:
            callback(t, model, record)
    result.n_evaluations = counter.count
    result.ideal = ideal
    return result


def run_uniform_training(problem, model: ParetoSetModel, scalarization: Scalarization,
                         optimizer_config: OptimizerConfig, rng: np.random.Generator,
                         callback: Callable | None = None, epsilon: float = DEFAULT_EPSILON) -> TrainingResult:
    """Baseline training with every batch drawn uniformly from the simplex."""
    batch = optimizer_config.batch_size

    def sampler(t):
        return sample_uniform(rng, batch, problem.n_obj), "uniform"

    return _train(problem, model, scalarization, optimizer_config, sampler, callback=callback, epsilon=epsilon)


def run_eps_training(problem, model: ParetoSetModel, scalarization: Scalarization,
                     optimizer_config: OptimizerConfig, eps_config: EpsConfig, rng: np.random.Generator,
                     callback: Callable | None = None, epsilon: float = DEFAULT_EPSILON) -> TrainingResult:
    """Train with evolutionary preference sampling.

    ``callback(iteration, model, record)`` runs after every update (used for
    periodic hypervolume evaluation); it must not draw from ``rng``.
    """
    T = eps_config.period
    if optimizer_config.max_iterations % T:
        raise ValueError(f"period {T} must divide max_iterations {optimizer_config.max_iterations}")
    batch = optimizer_config.batch_size
    population = None
    populations: list[np.ndarray] = []
    archive: list[IterationRecord] = []

    def sampler(t):
        if population is None:
            return sample_uniform(rng, batch, problem.n_obj), "uniform"
        return generate_offspring(population, rng, batch, eps_config), "population"

    def on_step(record):
        nonlocal population
        archive.append(record)
        if record.iteration % T:
            return
        prefs = np.concatenate([r.preferences for r in archive])
        objs = np.concatenate([r.objectives for r in archive])
        population = prefs[select_subset(objs, eps_config.select_fraction)]
        populations.append(population)
        archive.clear()

    result = _train(problem, model, scalarization, optimizer_config, sampler, on_step, callback, epsilon)
    result.populations = populations
    return result
