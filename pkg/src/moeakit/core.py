"""Problem-agnostic Pareto machinery: dominance, individuals and the counted archive."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class ContractError(ValueError):
    """Raised when a caller breaks an operation's precondition."""


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    if len(a) != len(b):
        raise ContractError(f"objective vectors differ in length: {len(a)} != {len(b)}")
    strictly = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            strictly = True
    return strictly


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Boolean mask of rows not dominated by any other row and not a repeat of an earlier row."""
    F = np.asarray(points, dtype=float)
    n = F.shape[0]
    if n == 0:
        return np.zeros(0, dtype=bool)
    if n > 512:
        return _nondominated_mask_sorted(F)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    eq = le & ~lt
    earlier_equal = np.tril(eq, k=-1)  # eq[i, j] with j < i
    return ~dom.any(axis=0) & ~earlier_equal.any(axis=1)


def _nondominated_mask_sorted(F: np.ndarray) -> np.ndarray:
    # In lexicographic order a point can only be dominated (or repeated) by an
    # earlier one, so kept points are final.
    order = np.lexsort(F.T[::-1])
    mask = np.zeros(F.shape[0], dtype=bool)
    kept = np.empty_like(F)
    k = 0
    for idx in order:
        p = F[idx]
        if k and np.all(kept[:k] <= p, axis=1).any():
            continue
        kept[k] = p
        k += 1
        mask[idx] = True
    return mask


def nondominated_filter(points: np.ndarray) -> np.ndarray:
    F = np.asarray(points, dtype=float)
    if F.size == 0:
        return F.reshape(0, F.shape[1] if F.ndim == 2 else 0)
    return F[nondominated_mask(F)]


class Individual:
    """A genotype with its objective vector once evaluated."""

    __slots__ = ("genotype", "objectives")

    def __init__(self, genotype: Any, objectives: tuple[float, ...] | None = None):
        self.genotype = genotype
        self.objectives = objectives

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None

    def __repr__(self) -> str:
        return f"Individual(objectives={self.objectives})"


class ArchiveEntry:
    __slots__ = ("individual", "ns", "alive")

    def __init__(self, individual: Individual):
        self.individual = individual
        self.ns = 1
        self.alive = True

    @property
    def objectives(self) -> tuple[float, ...]:
        return self.individual.objectives

    def __repr__(self) -> str:
        return f"ArchiveEntry({self.objectives}, ns={self.ns})"


@dataclass
class ArchiveUpdate:
    inserted: list[ArchiveEntry] = field(default_factory=list)
    removed: list[ArchiveEntry] = field(default_factory=list)


class Archive:
    """Unbounded set of mutually non-dominated individuals with selection counters.

    Exact objective-vector duplicates are rejected; the first inserted copy stays.
    """

    def __init__(self) -> None:
        self.entries: list[ArchiveEntry] = []
        self.total_selections = 0
        self.stale_selections = 0
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def objective_matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.entries:
                self._matrix = np.array([e.objectives for e in self.entries], dtype=float)
            else:
                self._matrix = np.empty((0, 0))
        return self._matrix

    def objective_set(self) -> set[tuple[float, ...]]:
        return {e.objectives for e in self.entries}

    def update(self, candidates: Iterable[Individual]) -> ArchiveUpdate:
        """Merge evaluated candidates, keeping the non-dominated, de-duplicated union."""
        cands = list(candidates)
        for c in cands:
            if c.objectives is None:
                raise ContractError("cannot archive an unevaluated individual")
        report = ArchiveUpdate()
        if not cands:
            return report
        C = np.array([c.objectives for c in cands], dtype=float)
        keep = nondominated_mask(C)
        if self.entries:
            A = self.objective_matrix()
            if A.shape[1] != C.shape[1]:
                raise ContractError("candidate objective count differs from archive")
            le = np.all(A[:, None, :] <= C[None, :, :], axis=2)
            # an archive entry equal to or dominating a candidate blocks it
            keep &= ~le.any(axis=0)
            if keep.any():
                K = C[keep]
                le_ca = np.all(K[:, None, :] <= A[None, :, :], axis=2)
                lt_ca = np.any(K[:, None, :] < A[None, :, :], axis=2)
                doomed = (le_ca & lt_ca).any(axis=0)
                if doomed.any():
                    survivors = []
                    for entry, gone in zip(self.entries, doomed):
                        if gone:
                            entry.alive = False
                            report.removed.append(entry)
                        else:
                            survivors.append(entry)
                    self.entries = survivors
        for c, k in zip(cands, keep):
            if k:
                entry = ArchiveEntry(c)
                self.entries.append(entry)
                report.inserted.append(entry)
        if report.inserted or report.removed:
            self._matrix = None
        return report

    def increment_selection(self, entries: Iterable[ArchiveEntry]) -> None:
        for entry in entries:
            if not entry.alive:
                self.stale_selections += 1
                logger.warning("selection counter update for an entry no longer archived")
                continue
            entry.ns += 1
            self.total_selections += 1


class Problem:
    """Interface the evolution loops rely on.

    Subclasses fill in the genotype-level operations; ``evaluate`` counts calls
    so every algorithm shares one budget ledger.
    """

    name = "problem"
    n_objectives = 2

    def __init__(self) -> None:
        self.evaluations = 0

    def random_genotype(self, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def _objectives(self, genotype: Any) -> tuple[float, ...]:
        raise NotImplementedError

    def evaluate(self, genotype: Any) -> Individual:
        self.evaluations += 1
        return Individual(genotype, self._objectives(genotype))

    def crossover(self, a: Any, b: Any, p_x, rng: np.random.Generator) -> tuple[Any, Any]:
        raise NotImplementedError

    def mutate(self, genotype: Any, p_m, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def genotype_key(self, genotype: Any) -> bytes:
        raise NotImplementedError

    def genotype_to_json(self, genotype: Any) -> Any:
        raise NotImplementedError

    def reference_points(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


@dataclass
class RunResult:
    algorithm: str
    instance: str
    seed: int
    evaluations: int
    front: list[tuple[float, ...]]
    genotypes: list[Any]
    wall_time: float = 0.0
    generations: int = 0
    config: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_archive(cls, archive: Archive, problem: Problem, **kwargs) -> "RunResult":
        entries = sorted(archive.entries, key=lambda e: e.objectives)
        return cls(
            front=[tuple(float(v) for v in e.objectives) for e in entries],
            genotypes=[problem.genotype_to_json(e.individual.genotype) for e in entries],
            **kwargs,
        )
