"""Building blocks shared by the reference algorithms."""
from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..core import Archive, Individual, Problem, RunResult

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EAConfig:
    pop_size: int = 100
    budget: int = 50_000
    p_x: float | tuple[float, float] = 0.9
    p_m: float | tuple[float, float] = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2:
            raise ConfigError("pop_size must be at least 2")
        if self.budget < self.pop_size:
            raise ConfigError("budget must cover at least the initial population")

    @property
    def generations(self) -> int:
        return self.budget // self.pop_size - 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# --------------------------------------------------------------------------- sorting


def domination_matrix(F: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when row i dominates row j."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


def fast_non_dominated_sort(F: np.ndarray) -> list[np.ndarray]:
    F = np.asarray(F, dtype=float)
    n = len(F)
    if n == 0:
        return []
    dom = domination_matrix(F)
    counts = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(counts == 0)
    while len(current):
        fronts.append(current)
        counts = counts - dom[current].sum(axis=0)
        counts[current] = -1
        current = np.flatnonzero(counts == 0)
    return fronts


def ranks_from_fronts(fronts: Sequence[np.ndarray], n: int) -> np.ndarray:
    rank = np.empty(n, dtype=int)
    for r, f in enumerate(fronts):
        rank[f] = r
    return rank


def crowding_distance(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        col = F[order, k]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


# --------------------------------------------------------------------------- reference directions


def das_dennis_count(m: int, h: int) -> int:
    return math.comb(h + m - 1, m - 1)


def das_dennis(m: int, h: int) -> np.ndarray:
    """All weight vectors with components in {0, 1/h, ..., 1} summing to one."""
    if m < 1 or h < 1:
        raise ConfigError("Das-Dennis needs m >= 1 objectives and h >= 1 partitions")
    rows = []

    def rec(prefix: list[int], left: int, depth: int):
        if depth == m - 1:
            rows.append(prefix + [left])
            return
        for v in range(left + 1):
            rec(prefix + [v], left - v, depth + 1)

    rec([], h, 0)
    return np.array(rows, dtype=float) / h


def partitions_for(m: int, pop_size: int) -> int:
    """Largest H whose lattice still fits in ``pop_size`` directions."""
    h = 1
    while das_dennis_count(m, h + 1) <= pop_size:
        h += 1
    return h


def perpendicular_distances(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Distance from every point to every line through the origin along ``directions``."""
    W = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    proj = points @ W.T
    # residual form avoids cancellation for points close to a line
    return np.linalg.norm(points[:, None, :] - proj[:, :, None] * W[None, :, :], axis=2)


def nsga3_normalize(F: np.ndarray) -> np.ndarray:
    """Translate by the ideal point and scale by hyperplane intercepts.

    Extreme points use the achievement scalarising function with 1e-6 off-axis
    weights. When the hyperplane is degenerate, or an intercept comes out
    non-positive, the observed nadir of the set is used instead.
    """
    ideal = F.min(axis=0)
    T = F - ideal
    m = F.shape[1]
    weights = np.full((m, m), 1e-6) + np.eye(m) * (1 - 1e-6)
    asf = (T[None, :, :] / weights[:, None, :]).max(axis=2)
    extremes = T[asf.argmin(axis=1)]
    intercepts = None
    try:
        b = np.linalg.solve(extremes, np.ones(m))
        with np.errstate(divide="ignore"):
            cand = 1.0 / b
        if np.all(np.isfinite(cand)) and np.all(cand > 1e-10):
            intercepts = cand
    except np.linalg.LinAlgError:
        pass
    if intercepts is None:
        intercepts = T.max(axis=0)
    intercepts = np.where(intercepts > 1e-10, intercepts, 1.0)
    return T / intercepts


# --------------------------------------------------------------------------- run plumbing


class RunState:
    """Seeded RNG, external archive and evaluation counting for one run."""

    def __init__(self, problem: Problem, config: EAConfig, algorithm: str):
        self.problem = problem
        self.config = config
        self.algorithm = algorithm
        self.rng = np.random.default_rng(config.seed)
        self.archive = Archive()
        self._t0 = time.perf_counter()
        self._start_evals = problem.evaluations
        self.diagnostics: dict[str, int] = {}

    def evaluate(self, genotypes: Sequence) -> list[Individual]:
        inds = [self.problem.evaluate(g) for g in genotypes]
        self.archive.update(inds)
        return inds

    def initial_population(self, size: int) -> list[Individual]:
        return self.evaluate([self.problem.random_genotype(self.rng) for _ in range(size)])

    def breed(self, a, b) -> tuple:
        p = self.problem
        c1, c2 = p.crossover(a, b, self.config.p_x, self.rng)
        return p.mutate(c1, self.config.p_m, self.rng), p.mutate(c2, self.config.p_m, self.rng)

    def offspring(self, pick: Callable[[], Individual], count: int) -> list:
        out = []
        while len(out) < count:
            c1, c2 = self.breed(pick().genotype, pick().genotype)
            out.append(c1)
            if len(out) < count:
                out.append(c2)
        return out

    def result(self, generations: int) -> RunResult:
        diag = dict(self.diagnostics)
        if hasattr(self.problem, "repairs"):
            diag["repairs"] = self.problem.repairs
        return RunResult.from_archive(
            self.archive,
            self.problem,
            algorithm=self.algorithm,
            instance=self.problem.name,
            seed=self.config.seed,
            evaluations=self.problem.evaluations - self._start_evals,
            wall_time=time.perf_counter() - self._t0,
            generations=generations,
            config=self.config.to_dict(),
            diagnostics=diag,
        )


def objective_matrix(pop: Sequence[Individual]) -> np.ndarray:
    return np.array([ind.objectives for ind in pop], dtype=float)


def binary_tournament(keys: np.ndarray, rng: np.random.Generator, size: int = 2) -> int:
    """Index with the lexicographically smallest key row among ``size`` random draws."""
    picks = rng.integers(0, len(keys), size=size)
    best = picks[0]
    for p in picks[1:]:
        if tuple(keys[p]) < tuple(keys[best]):
            best = p
    return int(best)
