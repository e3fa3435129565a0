"""MOEA/D with weighted-sum decomposition over reference-point-normalised objectives."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Problem, RunResult
from .common import ConfigError, EAConfig, RunState, das_dennis, objective_matrix


@dataclass(frozen=True)
class MoeadConfig(EAConfig):
    """``pop_size`` is ignored for evolution: there is one subproblem per weight vector."""

    pop_size: int = 51
    p_x: float | tuple[float, float] = 0.2
    p_m: float | tuple[float, float] = 0.015
    nh_size: int = 6
    part_nr: int = 50

    def __post_init__(self):
        if self.nh_size < 2:
            raise ConfigError("neighbourhood size must be at least 2")
        if self.part_nr < 1:
            raise ConfigError("part_nr must be positive")

    def weights(self, m: int) -> np.ndarray:
        w = das_dennis(m, self.part_nr)
        if self.nh_size > len(w):
            raise ConfigError(f"neighbourhood size {self.nh_size} exceeds {len(w)} weight vectors")
        return w

    def generations_for(self, n_vectors: int) -> int:
        if self.budget < n_vectors:
            raise ConfigError("budget must cover one evaluation per subproblem")
        return self.budget // n_vectors - 1


def neighbourhoods(weights: np.ndarray, size: int) -> np.ndarray:
    d = np.sqrt(((weights[:, None, :] - weights[None, :, :]) ** 2).sum(axis=2))
    return np.argsort(d, axis=1, kind="stable")[:, :size]


def weighted_sum(z: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return z @ weights.T if z.ndim == 2 else weights @ z


def replace_neighbours(W: np.ndarray, hood: np.ndarray, Z: np.ndarray, pop: list, child, z_child: np.ndarray) -> int:
    """Put ``child`` into every neighbouring subproblem it strictly improves; return the count."""
    done = 0
    for j in hood:
        if W[j] @ z_child < W[j] @ Z[j]:
            pop[j] = child
            Z[j] = z_child
            done += 1
    return done


def moead_run(problem: Problem, config: MoeadConfig) -> RunResult:
    state = RunState(problem, config, "moead")
    rng = state.rng
    W = config.weights(problem.n_objectives)
    n = len(W)
    B = neighbourhoods(W, config.nh_size)
    generations = config.generations_for(n)
    perfect, nadir = problem.reference_points()
    span = np.where(nadir != perfect, nadir - perfect, 1.0)

    def scaled(f) -> np.ndarray:
        return (np.asarray(f, dtype=float) - perfect) / span

    pop = state.initial_population(n)
    Z = scaled(objective_matrix(pop))
    replacements = 0

    for _ in range(generations):
        children = []
        for i in range(n):
            k, l = rng.choice(B[i], size=2, replace=False)
            child, _ = state.breed(pop[k].genotype, pop[l].genotype)
            y = problem.evaluate(child)
            children.append(y)
            replacements += replace_neighbours(W, B[i], Z, pop, y, scaled(y.objectives))
        state.archive.update(children)

    state.diagnostics["subproblems"] = n
    state.diagnostics["replacements"] = replacements
    return state.result(generations)
