from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Problem, RunResult
from .common import EAConfig, RunState, binary_tournament, domination_matrix, objective_matrix


@dataclass(frozen=True)
class Spea2Config(EAConfig):
    pop_size: int = 200
    p_x: float | tuple[float, float] = 0.99
    p_m: float | tuple[float, float] = 0.015
    archive_size: int | None = None  # defaults to pop_size


def _scaled(F: np.ndarray) -> np.ndarray:
    # objectives live on very different scales (time vs money), so measure
    # density in min-max normalised space
    lo, hi = F.min(axis=0), F.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (F - lo) / span


def pairwise_distances(F: np.ndarray) -> np.ndarray:
    diff = F[:, None, :] - F[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def spea2_fitness(F: np.ndarray) -> np.ndarray:
    """Raw fitness (summed strength of dominators) plus k-th nearest neighbour density."""
    n = len(F)
    dom = domination_matrix(F)
    strength = dom.sum(axis=1)
    raw = (dom * strength[:, None]).sum(axis=0).astype(float)
    if n == 1:
        return raw + 0.5
    k = min(int(math.floor(math.sqrt(n))), n - 1)
    dist = np.sort(pairwise_distances(_scaled(F)), axis=1)
    sigma_k = dist[:, k]  # column 0 is the point itself
    return raw + 1.0 / (sigma_k + 2.0)


def truncate(F: np.ndarray, idx: np.ndarray, limit: int) -> np.ndarray:
    """Drop, one at a time, the point whose sorted neighbour distances are lexicographically smallest."""
    idx = np.asarray(idx)
    if len(idx) <= limit:
        return idx
    D = pairwise_distances(_scaled(F[idx]))
    np.fill_diagonal(D, np.inf)
    alive = np.ones(len(idx), dtype=bool)
    for _ in range(len(idx) - limit):
        live = np.flatnonzero(alive)
        rows = np.sort(D[np.ix_(live, live)], axis=1)
        victim = live[np.lexsort(rows.T[::-1])[0]]
        alive[victim] = False
    return idx[alive]


def environmental_selection(F: np.ndarray, fitness: np.ndarray, limit: int) -> np.ndarray:
    nondominated = np.flatnonzero(fitness < 1.0)
    if len(nondominated) > limit:
        return truncate(F, nondominated, limit)
    if len(nondominated) == limit:
        return nondominated
    order = np.argsort(fitness, kind="stable")
    return order[:limit]


def spea2_run(problem: Problem, config: Spea2Config) -> RunResult:
    state = RunState(problem, config, "spea2")
    rng = state.rng
    limit = config.archive_size or config.pop_size
    pop = state.initial_population(config.pop_size)
    elite: list = []

    for gen in range(config.generations + 1):
        union = pop + elite
        F = objective_matrix(union)
        fit = spea2_fitness(F)
        keep = environmental_selection(F, fit, limit)
        elite = [union[i] for i in keep]
        if gen == config.generations:
            break
        keys = fit[keep][:, None]
        children = state.offspring(lambda: elite[binary_tournament(keys, rng)], config.pop_size)
        pop = state.evaluate(children)

    return state.result(config.generations)
