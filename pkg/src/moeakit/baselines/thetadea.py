"""θ-DEA: Pareto sorting followed by θ-dominance over clustered reference lines."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Problem, RunResult
from ..selection import pareto_tournament
from .common import EAConfig, RunState, fast_non_dominated_sort, nsga3_normalize, objective_matrix
from .unsga3 import reference_directions

# Axis-aligned directions get a very large θ so boundary solutions are kept,
# as in the original θ-DEA description.
AXIS_THETA = 1e6


@dataclass(frozen=True)
class ThetaDeaConfig(EAConfig):
    pop_size: int = 100
    p_x: float | tuple[float, float] = 0.6
    p_m: float | tuple[float, float] = 0.005
    tour_size: int = 2
    theta: float = 0.5
    partitions: int | None = None


def theta_distances(Z: np.ndarray, refs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cluster index, along-line distance d1 and perpendicular distance d2 per point."""
    W = refs / np.linalg.norm(refs, axis=1, keepdims=True)
    proj = Z @ W.T
    residual = Z[:, None, :] - proj[:, :, None] * W[None, :, :]
    perp = np.linalg.norm(residual, axis=2)
    cluster = perp.argmin(axis=1)
    rows = np.arange(len(Z))
    return cluster, proj[rows, cluster], perp[rows, cluster]


def theta_fitness(d1: np.ndarray, d2: np.ndarray, theta) -> np.ndarray:
    return d1 + theta * d2


def theta_survival(F: np.ndarray, n: int, refs: np.ndarray, theta: float, rng: np.random.Generator) -> np.ndarray:
    fronts = fast_non_dominated_sort(F)
    pool: list[int] = []
    for front in fronts:
        pool.extend(front.tolist())
        if len(pool) >= n:
            break
    pool_arr = np.array(pool, dtype=int)
    if len(pool_arr) == n:
        return pool_arr
    Z = nsga3_normalize(F[pool_arr])
    cluster, d1, d2 = theta_distances(Z, refs)
    is_axis = (refs > 0).sum(axis=1) == 1
    thetas = np.where(is_axis[cluster], AXIS_THETA, theta)
    D = theta_fitness(d1, d2, thetas)

    # θ-rank = position of a point inside its own cluster when sorted by D
    theta_rank = np.empty(len(pool_arr), dtype=int)
    for c in np.unique(cluster):
        members = np.flatnonzero(cluster == c)
        order = members[np.argsort(D[members], kind="stable")]
        theta_rank[order] = np.arange(len(order))

    chosen: list[int] = []
    for level in range(theta_rank.max() + 1):
        layer = np.flatnonzero(theta_rank == level)
        if len(chosen) + len(layer) <= n:
            chosen.extend(layer.tolist())
        else:
            chosen.extend(rng.choice(layer, size=n - len(chosen), replace=False).tolist())
        if len(chosen) == n:
            break
    return pool_arr[np.array(chosen, dtype=int)]


def thetadea_run(problem: Problem, config: ThetaDeaConfig) -> RunResult:
    state = RunState(problem, config, "thetadea")
    rng = state.rng
    refs = reference_directions(problem.n_objectives, config.pop_size, config.partitions)
    pop = state.initial_population(config.pop_size)

    for _ in range(config.generations):
        children = state.offspring(lambda: pareto_tournament(pop, config.tour_size, rng), config.pop_size)
        merged = pop + state.evaluate(children)
        keep = theta_survival(objective_matrix(merged), config.pop_size, refs, config.theta, rng)
        pop = [merged[i] for i in keep]

    state.diagnostics["reference_directions"] = len(refs)
    return state.result(config.generations)
