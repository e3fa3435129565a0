"""U-NSGA-III: NSGA-III reference-direction survival with niche-aware mating."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Problem, RunResult
from .common import (
    ConfigError,
    EAConfig,
    RunState,
    das_dennis,
    fast_non_dominated_sort,
    nsga3_normalize,
    objective_matrix,
    partitions_for,
    perpendicular_distances,
)


@dataclass(frozen=True)
class UNsga3Config(EAConfig):
    pop_size: int = 100
    p_x: float | tuple[float, float] = 0.9
    p_m: float | tuple[float, float] = 0.005
    partitions: int | None = None  # None: largest H with at most pop_size directions


def reference_directions(m: int, pop_size: int, partitions: int | None) -> np.ndarray:
    h = partitions_for(m, pop_size) if partitions is None else partitions
    if h < 1:
        raise ConfigError("reference directions need at least one partition")
    return das_dennis(m, h)


@dataclass
class NicheInfo:
    rank: np.ndarray
    niche: np.ndarray
    distance: np.ndarray


def associate(F: np.ndarray, refs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Z = nsga3_normalize(F)
    d = perpendicular_distances(Z, refs)
    niche = d.argmin(axis=1)
    return niche, d[np.arange(len(F)), niche]


def nsga3_survival(F: np.ndarray, n: int, refs: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, NicheInfo]:
    fronts = fast_non_dominated_sort(F)
    selected: list[int] = []
    last = np.empty(0, dtype=int)
    for front in fronts:
        if len(selected) + len(front) > n:
            last = front
            break
        selected.extend(front.tolist())
        if len(selected) == n:
            break
    pool = np.array(selected + last.tolist(), dtype=int)
    rank = np.empty(len(F), dtype=int)
    for r, front in enumerate(fronts):
        rank[front] = r
    niche_pool, dist_pool = associate(F[pool], refs)
    niche = dict(zip(pool.tolist(), niche_pool.tolist()))
    dist = dict(zip(pool.tolist(), dist_pool.tolist()))

    if len(selected) < n:
        counts = np.zeros(len(refs), dtype=int)
        for i in selected:
            counts[niche[i]] += 1
        remaining = {j: [] for j in range(len(refs))}
        for i in last.tolist():
            remaining[niche[i]].append(i)
        active = np.ones(len(refs), dtype=bool)
        while len(selected) < n:
            masked = np.where(active, counts, np.iinfo(np.int64).max)
            lowest = np.flatnonzero(masked == masked.min())
            j = int(lowest[rng.integers(len(lowest))])
            members = remaining[j]
            if not members:
                active[j] = False
                continue
            if counts[j] == 0:
                pick = min(members, key=lambda i: dist[i])
            else:
                pick = members[int(rng.integers(len(members)))]
            members.remove(pick)
            selected.append(pick)
            counts[j] += 1

    keep = np.array(selected, dtype=int)
    info = NicheInfo(
        rank=rank[keep],
        niche=np.array([niche[i] for i in keep]),
        distance=np.array([dist[i] for i in keep]),
    )
    return keep, info


def niche_tournament(info: NicheInfo, rng: np.random.Generator) -> int:
    """Compare two random members by rank then reference distance when they share a niche."""
    a, b = (int(x) for x in rng.integers(0, len(info.rank), size=2))
    if info.niche[a] != info.niche[b]:
        return a if rng.random() < 0.5 else b
    if info.rank[a] != info.rank[b]:
        return a if info.rank[a] < info.rank[b] else b
    if info.distance[a] != info.distance[b]:
        return a if info.distance[a] < info.distance[b] else b
    return a if rng.random() < 0.5 else b


def unsga3_run(problem: Problem, config: UNsga3Config) -> RunResult:
    state = RunState(problem, config, "unsga3")
    rng = state.rng
    refs = reference_directions(problem.n_objectives, config.pop_size, config.partitions)
    pop = state.initial_population(config.pop_size)
    _, info = nsga3_survival(objective_matrix(pop), config.pop_size, refs, rng)

    for _ in range(config.generations):
        children = state.offspring(lambda: pop[niche_tournament(info, rng)], config.pop_size)
        merged = pop + state.evaluate(children)
        keep, info = nsga3_survival(objective_matrix(merged), config.pop_size, refs, rng)
        pop = [merged[i] for i in keep]

    state.diagnostics["reference_directions"] = len(refs)
    return state.result(config.generations)
