"""Front quality measures and the paired signed-rank comparison."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import ContractError, nondominated_filter

logger = logging.getLogger(__name__)

PURITY_TOL = 1e-9


@dataclass(frozen=True)
class NormalizedFront:
    points: np.ndarray
    perfect: np.ndarray
    nadir: np.ndarray
    clamped: int = 0

    def __len__(self) -> int:
        return len(self.points)


def normalize(points, perfect, nadir) -> NormalizedFront:
    """Map each objective onto [0, 1] between the perfect and nadir values.

    Values outside the box are clamped and counted; a dimension whose perfect and
    nadir values coincide maps to 0.
    """
    perfect = np.asarray(perfect, dtype=float)
    nadir = np.asarray(nadir, dtype=float)
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return NormalizedFront(P.reshape(0, len(perfect)), perfect, nadir, 0)
    P = P.reshape(-1, len(perfect))
    span = nadir - perfect
    safe = np.where(span != 0, span, 1.0)
    Z = np.where(span != 0, (P - perfect) / safe, 0.0)
    out_of_range = (Z < 0) | (Z > 1)
    clamped = int(out_of_range.sum())
    if clamped:
        logger.debug("clamped %d normalized components into [0, 1]", clamped)
        Z = np.clip(Z, 0.0, 1.0)
    return NormalizedFront(Z, perfect, nadir, clamped)


def front_extent(points) -> tuple[np.ndarray, np.ndarray]:
    """Per-objective (min, max) of a point set, for TPF-extent normalization."""
    P = np.asarray(points, dtype=float)
    return P.min(axis=0), P.max(axis=0)


def build_tpfa(fronts: Iterable) -> np.ndarray:
    """Non-dominated, de-duplicated union of several fronts."""
    parts = [np.asarray(f, dtype=float) for f in fronts]
    parts = [p for p in parts if p.size]
    if not parts:
        return np.empty((0, 0))
    return nondominated_filter(np.vstack(parts))


def _points(front) -> np.ndarray:
    if isinstance(front, NormalizedFront):
        return front.points
    return np.asarray(front, dtype=float)


def nearest_distances(tpf: np.ndarray, pf: np.ndarray) -> np.ndarray:
    diff = tpf[:, None, :] - pf[None, :, :]
    return np.sqrt((diff**2).sum(axis=2)).min(axis=1)


def igd(pf, tpf, canonical: bool = False) -> float:
    """Inverted generational distance from ``tpf`` to ``pf``.

    The default is sqrt(sum d_i^2) / |tpf|; ``canonical=True`` returns the mean of d_i.
    """
    P = _points(pf)
    T = _points(tpf)
    if T.size == 0:
        raise ContractError("the reference front must be non-empty")
    if P.size == 0:
        logger.warning("IGD of an empty front is infinite")
        return math.inf
    d = nearest_distances(T, P)
    if canonical:
        return float(d.mean())
    return float(math.sqrt(float((d**2).sum())) / len(T))


def purity(pf_union, tpfa, tol: float = PURITY_TOL) -> float:
    """Fraction of the ``tpfa`` points that also appear in ``pf_union``."""
    T = _points(tpfa)
    P = _points(pf_union)
    if T.size == 0:
        raise ContractError("tpfa must be non-empty")
    if P.size == 0:
        return 0.0
    close = np.all(np.abs(T[:, None, :] - P[None, :, :]) <= tol, axis=2)
    return float(close.any(axis=1).sum()) / len(T)


# --------------------------------------------------------------------------- Wilcoxon

MIN_PAIRS = 5
EXACT_MAX_N = 25


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    verdict: str  # '+', '-', '≈' or 'insufficient data'
    n_effective: int
    w_plus: float
    w_minus: float


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sv = values[order]
    i = 0
    while i < len(sv):
        j = i
        while j + 1 < len(sv) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_cdf(ranks: np.ndarray, t: float) -> float:
    """P(W+ <= t) under H0 for the given (possibly tied, half-integer) ranks."""
    doubled = np.rint(2 * ranks).astype(int)
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled:
        counts[r:] = counts[r:] + counts[: total + 1 - r].copy()
    limit = int(math.floor(2 * t + 1e-9))
    return float(counts[: limit + 1].sum() / counts.sum())


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], lower_is_better: bool = True, alpha: float = 0.05) -> WilcoxonResult:
    """Two-sided paired signed-rank test of ``a`` against ``b``.

    The verdict is '+' when ``a`` is significantly better than ``b`` (smaller
    when ``lower_is_better``), '-' when significantly worse and '≈' otherwise.

    Parameters
    ----------
    a, b:
        Paired samples of equal length.
    lower_is_better:
        Direction used to turn a significant difference into a verdict.
    alpha:
        Significance level.
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape:
        raise ContractError("paired samples must have the same length")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, "≈", 0, 0.0, 0.0)
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if n < MIN_PAIRS:
        return WilcoxonResult(stat, math.nan, "insufficient data", n, w_plus, w_minus)
    if n <= EXACT_MAX_N:
        p = min(1.0, 2.0 * _exact_cdf(ranks, stat))
    else:
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - ((tie_counts**3 - tie_counts).sum()) / 48.0
        z = (stat - mean) / math.sqrt(var) if var > 0 else 0.0
        p = min(1.0, 2.0 * _normal_cdf(z))
    if p < alpha:
        a_better = (w_minus > w_plus) if lower_is_better else (w_plus > w_minus)
        verdict = "+" if a_better else "-"
    else:
        verdict = "≈"
    return WilcoxonResult(stat, p, verdict, n, w_plus, w_minus)
