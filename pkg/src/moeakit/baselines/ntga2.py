"""NTGA2: Pareto tournaments on the population alternating with legacy gap selection on the archive."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core import Problem, RunResult
from ..selection import LegacyGapView, legacy_gap_values, pareto_tournament
from .common import EAConfig, RunState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ntga2Config(EAConfig):
    pop_size: int = 50
    p_x: float | tuple[float, float] = 0.6
    p_m: float | tuple[float, float] = 0.01
    tour_size: int = 6
    gs_tour_size: int = 20
    gs_generations: int = 50
    max_remutations: int = 100


def uses_gap_selection(generation: int, gs_generations: int) -> bool:
    """Blocks of ``gs_generations`` alternate: tournament first, then gap selection."""
    return (generation // gs_generations) % 2 == 1


def _gap_winner(view: LegacyGapView, tour_size: int, rng: np.random.Generator) -> int:
    picks = rng.integers(0, len(view.gap), size=tour_size)
    vals = view.gap[picks]
    tied = np.unique(picks[vals == vals.max()])
    return int(tied[rng.integers(len(tied))]) if len(tied) > 1 else int(tied[0])


def legacy_gap_pair(view: LegacyGapView, tour_size: int, rng: np.random.Generator) -> tuple[int, int]:
    """Archive row indices of two parents.

    The first wins a max-gap tournament; the second is one of its sorted
    neighbours in the dimension where its gap was largest. An edge winner
    has no interior neighbour pair, so a second tournament picks its mate.
    """
    n = len(view.gap)
    first = _gap_winner(view, tour_size, rng)
    if n == 1:
        return first, first
    dim = int(view.best_dim[first])
    pos = int(view.ranks[dim, first])
    order = view.orders[dim]
    if pos == 0 or pos == n - 1:
        second = _gap_winner(view, tour_size, rng)
    else:
        second = int(order[pos - 1] if rng.random() < 0.5 else order[pos + 1])
    return first, second


def ntga2_run(problem: Problem, config: Ntga2Config) -> RunResult:
    state = RunState(problem, config, "ntga2")
    rng = state.rng
    pop = state.initial_population(config.pop_size)
    remutations = 0
    forced_random = 0

    for gen in range(config.generations):
        gap_mode = uses_gap_selection(gen, config.gs_generations)
        if gap_mode:
            members = list(state.archive.entries)
            view = legacy_gap_values(state.archive.objective_matrix())
        seen: set[bytes] = set()
        children = []
        while len(children) < config.pop_size:
            if gap_mode:
                i, j = legacy_gap_pair(view, config.gs_tour_size, rng)
                a, b = members[i].individual, members[j].individual
            else:
                a = pareto_tournament(pop, config.tour_size, rng)
                b = pareto_tournament(pop, config.tour_size, rng)
            for child in state.breed(a.genotype, b.genotype):
                if len(children) == config.pop_size:
                    break
                key = problem.genotype_key(child)
                tries = 0
                while key in seen and tries < config.max_remutations:
                    child = problem.mutate(child, config.p_m, rng)
                    key = problem.genotype_key(child)
                    tries += 1
                remutations += tries
                # fall back to random genotypes; tiny search spaces may still run dry
                draws = 0
                while key in seen and draws < config.max_remutations:
                    child = problem.random_genotype(rng)
                    key = problem.genotype_key(child)
                    draws += 1
                if draws:
                    logger.debug("clone elimination drew %d random genotypes", draws)
                    forced_random += draws
                seen.add(key)
                children.append(child)
        pop = state.evaluate(children)

    state.diagnostics["remutations"] = remutations
    state.diagnostics["forced_random"] = forced_random
    return state.result(config.generations)
