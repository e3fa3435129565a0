"""The balanced non-dominated tournament GA.

Parents come only from the archive. Each generation draws one gap view, picks
``pop_size / 2`` parent pairs from it, bumps their selection counters, breeds
and evaluates the children, then merges the whole generation into the archive.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Archive, Problem, RunResult
from .selection import BalanceParams, calculate_gap_values, gap_tour_selection

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BntgaConfig:
    pop_size: int = 50
    budget: int = 50_000
    p_x: float | tuple[float, float] = 0.9
    p_m: float | tuple[float, float] = 0.01
    tour_size: int = 40
    balance: BalanceParams = field(default_factory=BalanceParams)
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError("pop_size must be a positive even number")
        if self.budget < self.pop_size:
            raise ValueError("budget must cover at least the initial population")
        if self.tour_size < 1:
            raise ValueError("tour_size must be >= 1")

    @property
    def generations(self) -> int:
        return self.budget // self.pop_size - 1

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["balance"] = dataclasses.asdict(self.balance)
        return d


GenerationHook = Callable[[int, Archive], None]


def run_bntga(problem: Problem, config: BntgaConfig, on_generation: GenerationHook | None = None) -> RunResult:
    """Run one seeded B-NTGA optimisation and return the final archive.

    ``on_generation(g, archive)`` is called after the archive update of every
    generation (``g = 0`` for the initial population); handy for instrumented runs.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    start_evals = problem.evaluations
    remainder = config.budget % config.pop_size
    if remainder:
        logger.info("budget leaves %d evaluations unused", remainder)

    archive = Archive()
    population = [problem.evaluate(problem.random_genotype(rng)) for _ in range(config.pop_size)]
    archive.update(population)
    if on_generation:
        on_generation(0, archive)

    for gen in range(config.generations):
        view = calculate_gap_values(archive, config.balance, rng, generation=gen)
        offspring = []
        for _ in range(config.pop_size // 2):
            first, second = gap_tour_selection(view, config.tour_size, rng)
            archive.increment_selection((first, second))
            c1, c2 = problem.crossover(
                first.individual.genotype, second.individual.genotype, config.p_x, rng
            )
            offspring.append(problem.evaluate(problem.mutate(c1, config.p_m, rng)))
            offspring.append(problem.evaluate(problem.mutate(c2, config.p_m, rng)))
        population = offspring
        archive.update(population)
        if on_generation:
            on_generation(gen + 1, archive)

    diagnostics = {
        "total_selections": archive.total_selections,
        "stale_selections": archive.stale_selections,
        "unused_budget": remainder,
    }
    if hasattr(problem, "repairs"):
        diagnostics["repairs"] = problem.repairs
    return RunResult.from_archive(
        archive,
        problem,
        algorithm="bntga",
        instance=problem.name,
        seed=config.seed,
        evaluations=problem.evaluations - start_evals,
        wall_time=time.perf_counter() - t0,
        generations=config.generations,
        config=config.to_dict(),
        diagnostics=diagnostics,
    )
