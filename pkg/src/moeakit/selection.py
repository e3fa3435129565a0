"""Gap-based parent selection over the archive, plus the plain Pareto tournament."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Archive, ArchiveEntry, ContractError, Individual

logger = logging.getLogger(__name__)

VARIANTS = ("plain", "simplified", "complex")


@dataclass(frozen=True)
class BalanceParams:
    """How gap values are turned into selection priorities.

    ``plain`` uses the raw gap, ``simplified`` divides it by the entry's
    selection count, ``complex`` adds the UCB-style exploration bonus.
    ``max_span=None`` recomputes the objective span from the archive on every
    call; ``normalize_gap`` divides gaps by that span before balancing.
    """

    variant: str = "simplified"
    lam: float = 1.0 / math.sqrt(2.0)
    max_span: float | None = None
    dimension_mode: str = "random"
    normalize_gap: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown balance variant {self.variant!r}")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lam must be finite and non-negative")
        if self.max_span is not None and not self.max_span > 0:
            raise ValueError("max_span must be positive")
        if self.dimension_mode not in ("random", "round_robin"):
            raise ValueError(f"unknown dimension mode {self.dimension_mode!r}")


@dataclass(frozen=True)
class GapView:
    """Archive snapshot sorted along one objective, with per-entry priorities."""

    dimension: int
    order: tuple[ArchiveEntry, ...]
    gap: np.ndarray
    gap_value: np.ndarray
    ns: np.ndarray
    damp_ties: bool = True

    def __len__(self) -> int:
        return len(self.order)


def one_dim_gaps(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort ``values`` and return (order, gap in sorted order).

    The gap of an interior point is the larger distance to its two sorted
    neighbours; both extremes get +inf.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    n = len(values)
    gaps = np.full(n, np.inf)
    if n > 2:
        sv = values[order]
        diffs = np.diff(sv)
        gaps[1:-1] = np.maximum(diffs[:-1], diffs[1:])
    return order, gaps


def archive_span(F: np.ndarray) -> float:
    if F.shape[0] < 2:
        return 0.0
    return float(np.max(F.max(axis=0) - F.min(axis=0)))


def calculate_gap_values(
    archive: Archive,
    params: BalanceParams,
    rng: np.random.Generator,
    generation: int = 0,
) -> GapView:
    if len(archive) == 0:
        raise ContractError("gap values need a non-empty archive")
    F = archive.objective_matrix()
    m = F.shape[1]
    if params.dimension_mode == "round_robin":
        dim = generation % m
    else:
        dim = int(rng.integers(m))
    order, gap = one_dim_gaps(F[:, dim])
    entries = tuple(archive.entries[i] for i in order)
    ns = np.array([e.ns for e in entries], dtype=float)

    span = None
    if params.variant == "complex" or params.normalize_gap:
        span = params.max_span if params.max_span is not None else archive_span(F)
        logger.debug("max span %.6g", span)
    if params.normalize_gap and span:
        gap = gap / span

    if params.variant == "plain":
        value = gap.copy()
    elif params.variant == "simplified":
        value = gap / ns
    else:
        ns_total = archive.total_selections
        # ln(NS * span) is negative or undefined early in a run; clamp the bonus to zero
        product = ns_total * span
        log_term = math.log(product) if product > 1.0 else 0.0
        value = gap / ns + params.lam * np.sqrt(log_term / ns)
    return GapView(
        dimension=dim,
        order=entries,
        gap=gap,
        gap_value=value,
        ns=ns,
        damp_ties=params.variant != "plain",
    )


def _tournament_winner(view: GapView, tour_size: int, rng: np.random.Generator) -> int:
    n = len(view)
    picks = rng.integers(0, n, size=tour_size)
    vals = view.gap_value[picks]
    best = vals.max()
    tied = np.unique(picks[vals == best])
    if len(tied) > 1 and view.damp_ties:
        ns = view.ns[tied]
        tied = tied[ns == ns.min()]
    if len(tied) == 1:
        return int(tied[0])
    return int(tied[rng.integers(len(tied))])


def gap_tour_selection(
    view: GapView, tour_size: int, rng: np.random.Generator
) -> tuple[ArchiveEntry, ArchiveEntry]:
    """Pick parent 1 by a gap-value tournament and parent 2 as one of its sorted neighbours."""
    if tour_size < 1:
        raise ContractError("tour_size must be >= 1")
    n = len(view)
    first = _tournament_winner(view, tour_size, rng)
    if n == 1:
        logger.warning("archive holds a single entry; both parents are the same individual")
        return view.order[0], view.order[0]
    if first == 0:
        second = 1
    elif first == n - 1:
        second = n - 2
    else:
        second = first - 1 if rng.random() < 0.5 else first + 1
    return view.order[first], view.order[second]


@dataclass(frozen=True)
class LegacyGapView:
    """Per-dimension gaps reduced by maximum, as used by NTGA2's gap selection."""

    gap: np.ndarray  # per archive row
    best_dim: np.ndarray  # dimension realising the maximum
    orders: tuple[np.ndarray, ...]  # sorted row indices per dimension
    ranks: np.ndarray  # ranks[d, row] = position of row in orders[d]


def legacy_gap_values(points: np.ndarray) -> LegacyGapView:
    F = np.asarray(points, dtype=float)
    n, m = F.shape
    per_dim = np.empty((m, n))
    orders = []
    ranks = np.empty((m, n), dtype=int)
    for d in range(m):
        order, gaps = one_dim_gaps(F[:, d])
        per_dim[d, order] = gaps
        ranks[d, order] = np.arange(n)
        orders.append(order)
    best_dim = per_dim.argmax(axis=0)
    return LegacyGapView(per_dim.max(axis=0), best_dim, tuple(orders), ranks)


def pareto_tournament(
    population: Sequence[Individual], tour_size: int, rng: np.random.Generator
) -> Individual:
    """Uniform choice among the non-dominated members of a sampled tournament."""
    n = len(population)
    if n == 1:
        return population[0]
    picks = np.unique(rng.integers(0, n, size=tour_size))
    if len(picks) == 1:
        return population[int(picks[0])]
    F = np.array([population[i].objectives for i in picks], dtype=float)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    undominated = picks[~(le & lt).any(axis=0)]
    if len(undominated) == 1:
        return population[int(undominated[0])]
    return population[int(undominated[rng.integers(len(undominated))])]
