from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Problem, RunResult
from .common import (
    EAConfig,
    RunState,
    binary_tournament,
    crowding_distance,
    fast_non_dominated_sort,
    objective_matrix,
)


@dataclass(frozen=True)
class Nsga2Config(EAConfig):
    pop_size: int = 300
    p_x: float | tuple[float, float] = 0.99
    p_m: float | tuple[float, float] = 0.015
    tour_size: int = 2


def rank_and_crowding(F: np.ndarray) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    fronts = fast_non_dominated_sort(F)
    rank = np.empty(len(F), dtype=int)
    crowd = np.empty(len(F))
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance(F[front])
    return fronts, rank, crowd


def nsga2_survival(F: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of the ``n`` survivors by rank, then by decreasing crowding distance."""
    fronts, _, crowd = rank_and_crowding(F)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= n:
            chosen.extend(front.tolist())
            if len(chosen) == n:
                break
            continue
        # shuffle first so equal crowding values are broken at random
        shuffled = rng.permutation(front)
        order = shuffled[np.argsort(-crowd[shuffled], kind="stable")]
        chosen.extend(order[: n - len(chosen)].tolist())
        break
    return np.array(chosen, dtype=int)


def nsga2_run(problem: Problem, config: Nsga2Config) -> RunResult:
    state = RunState(problem, config, "nsga2")
    rng = state.rng
    pop = state.initial_population(config.pop_size)
    _, rank, crowd = rank_and_crowding(objective_matrix(pop))

    for _ in range(config.generations):
        keys = np.column_stack([rank, -crowd])
        children = state.offspring(lambda: pop[binary_tournament(keys, rng, config.tour_size)], config.pop_size)
        merged = pop + state.evaluate(children)
        F = objective_matrix(merged)
        keep = nsga2_survival(F, config.pop_size, rng)
        pop = [merged[i] for i in keep]
        _, rank, crowd = rank_and_crowding(F[keep])

    return state.result(config.generations)
