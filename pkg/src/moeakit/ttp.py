"""Bi-objective travelling thief problem backend.

Objectives are (travel time, -profit) so both minimise. Tours always start at
the first city; items are collected when their city is visited and slow the
thief down from the leg leaving that city onwards.
"""
from __future__ import annotations

import io
import itertools
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree

from .core import ContractError, Problem, nondominated_filter


class TtpFormatError(ValueError):
    pass


EDGE_WEIGHT_TYPES = ("CEIL_2D", "EUC_2D", "EXACT_2D")


def distance_matrix(coords: np.ndarray, edge_weight_type: str = "CEIL_2D") -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff**2).sum(axis=2))
    if edge_weight_type == "CEIL_2D":
        return np.ceil(d)
    if edge_weight_type == "EUC_2D":
        return np.floor(d + 0.5)
    if edge_weight_type == "EXACT_2D":
        return d
    raise TtpFormatError(f"unsupported EDGE_WEIGHT_TYPE {edge_weight_type!r}")


class TtpInstance:
    def __init__(
        self,
        coords,
        profits,
        weights,
        item_cities,
        capacity: float,
        v_min: float,
        v_max: float,
        name: str = "ttp",
        edge_weight_type: str = "CEIL_2D",
        renting_ratio: float = 0.0,
        knapsack_type: str = "",
    ):
        self.name = name
        self.coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        self.profits = np.asarray(profits, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.item_cities = np.asarray(item_cities, dtype=np.int64)
        self.capacity = float(capacity)
        self.v_min = float(v_min)
        self.v_max = float(v_max)
        self.edge_weight_type = edge_weight_type
        self.renting_ratio = float(renting_ratio)
        self.knapsack_type = knapsack_type
        if self.capacity <= 0:
            raise ValueError("knapsack capacity must be positive")
        if not 0 < self.v_min <= self.v_max:
            raise ValueError("speeds must satisfy 0 < v_min <= v_max")
        if not (len(self.profits) == len(self.weights) == len(self.item_cities)):
            raise ValueError("item arrays differ in length")
        if len(self.item_cities) and (
            self.item_cities.min() < 0 or self.item_cities.max() >= self.n_cities
        ):
            raise ValueError("item assigned to a city that does not exist")
        if (self.weights < 0).any() or (self.profits < 0).any():
            raise ValueError("item profits and weights must be non-negative")
        self.dist = distance_matrix(self.coords, edge_weight_type)
        with np.errstate(divide="ignore"):
            self.ratio = np.where(self.weights > 0, self.profits / np.where(self.weights > 0, self.weights, 1), np.inf)

    @property
    def n_cities(self) -> int:
        return len(self.coords)

    @property
    def n_items(self) -> int:
        return len(self.profits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TtpInstance):
            return NotImplemented
        return (
            np.array_equal(self.coords, other.coords)
            and np.array_equal(self.profits, other.profits)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.item_cities, other.item_cities)
            and (self.capacity, self.v_min, self.v_max, self.edge_weight_type)
            == (other.capacity, other.v_min, other.v_max, other.edge_weight_type)
        )

    def __repr__(self) -> str:
        return f"TtpInstance({self.name!r}, cities={self.n_cities}, items={self.n_items})"


# --------------------------------------------------------------------------- parsing

_SECTION_NODES = re.compile(r"^NODE_COORD_SECTION", re.IGNORECASE)
_SECTION_ITEMS = re.compile(r"^ITEMS\s+SECTION", re.IGNORECASE)


def parse_ttp(stream: TextIO | str, name: str | None = None) -> TtpInstance:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    header: dict[str, str] = {}
    nodes: list[tuple[int, float, float]] = []
    items: list[tuple[int, float, float, int]] = []
    section = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if _SECTION_NODES.match(line):
            section = "nodes"
            continue
        if _SECTION_ITEMS.match(line):
            section = "items"
            continue
        if section is None:
            if ":" not in line:
                raise TtpFormatError(f"line {lineno}: expected 'KEY: value', got {line!r}")
            key, _, value = line.partition(":")
            header[" ".join(key.split()).upper()] = value.strip()
            continue
        toks = line.split()
        try:
            if section == "nodes":
                if len(toks) != 3:
                    raise ValueError
                nodes.append((int(toks[0]), float(toks[1]), float(toks[2])))
            else:
                if len(toks) != 4:
                    raise ValueError
                items.append((int(toks[0]), float(toks[1]), float(toks[2]), int(toks[3])))
        except ValueError:
            raise TtpFormatError(f"line {lineno}: malformed {section} row {line!r}") from None

    required = ("DIMENSION", "NUMBER OF ITEMS", "CAPACITY OF KNAPSACK", "MIN SPEED", "MAX SPEED")
    for key in required:
        if key not in header:
            raise TtpFormatError(f"missing header field {key}")
    if not nodes:
        raise TtpFormatError("missing NODE_COORD_SECTION")
    if int(header["DIMENSION"]) != len(nodes):
        raise TtpFormatError(f"DIMENSION {header['DIMENSION']} but {len(nodes)} nodes listed")
    if int(header["NUMBER OF ITEMS"]) != len(items):
        raise TtpFormatError(f"NUMBER OF ITEMS {header['NUMBER OF ITEMS']} but {len(items)} items listed")
    nodes.sort()
    if [n[0] for n in nodes] != list(range(1, len(nodes) + 1)):
        raise TtpFormatError("node indices must run 1..DIMENSION")
    items.sort()
    for _, _, _, city in items:
        if not 1 <= city <= len(nodes):
            raise TtpFormatError(f"item assigned to unknown city {city}")
    return TtpInstance(
        coords=[(x, y) for _, x, y in nodes],
        profits=[p for _, p, _, _ in items],
        weights=[w for _, _, w, _ in items],
        item_cities=[c - 1 for _, _, _, c in items],
        capacity=float(header["CAPACITY OF KNAPSACK"]),
        v_min=float(header["MIN SPEED"]),
        v_max=float(header["MAX SPEED"]),
        name=name or header.get("PROBLEM NAME", "ttp"),
        edge_weight_type=header.get("EDGE_WEIGHT_TYPE", "CEIL_2D").upper(),
        renting_ratio=float(header.get("RENTING RATIO", 0) or 0),
        knapsack_type=header.get("KNAPSACK DATA TYPE", ""),
    )


def load_ttp(path: str | Path) -> TtpInstance:
    path = Path(path)
    with open(path) as fh:
        return parse_ttp(fh, name=path.stem)


def serialize_ttp(inst: TtpInstance) -> str:
    out = [
        f"PROBLEM NAME: \t{inst.name}",
        f"KNAPSACK DATA TYPE: \t{inst.knapsack_type}",
        f"DIMENSION:\t{inst.n_cities}",
        f"NUMBER OF ITEMS: \t{inst.n_items}",
        f"CAPACITY OF KNAPSACK: \t{inst.capacity:.17g}",
        f"MIN SPEED: \t{inst.v_min:.17g}",
        f"MAX SPEED: \t{inst.v_max:.17g}",
        f"RENTING RATIO: \t{inst.renting_ratio:.17g}",
        f"EDGE_WEIGHT_TYPE:\t{inst.edge_weight_type}",
        "NODE_COORD_SECTION\t(INDEX, X, Y): ",
    ]
    for i, (x, y) in enumerate(inst.coords, start=1):
        out.append(f"{i}\t{x:.17g}\t{y:.17g}")
    out.append("ITEMS SECTION\t(INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER): ")
    for j in range(inst.n_items):
        out.append(
            f"{j + 1}\t{inst.profits[j]:.17g}\t{inst.weights[j]:.17g}\t{inst.item_cities[j] + 1}"
        )
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------- evaluation


@dataclass
class TtpGenotype:
    tour: np.ndarray  # permutation of city indices, tour[0] == 0
    picks: np.ndarray  # bool per item

    def copy(self) -> "TtpGenotype":
        return TtpGenotype(self.tour.copy(), self.picks.copy())


def picked_weight(inst: TtpInstance, picks: np.ndarray) -> float:
    return float(inst.weights[picks].sum())


def evaluate_ttp(inst: TtpInstance, genotype: TtpGenotype) -> tuple[float, float]:
    tour, picks = genotype.tour, genotype.picks
    if picked_weight(inst, picks) > inst.capacity:
        raise ContractError("picking plan exceeds knapsack capacity")
    city_weight = np.bincount(
        inst.item_cities[picks], weights=inst.weights[picks], minlength=inst.n_cities
    )
    carried = np.cumsum(city_weight[tour])
    speed = inst.v_max - carried / inst.capacity * (inst.v_max - inst.v_min)
    legs = inst.dist[tour, np.roll(tour, -1)]
    time = float((legs / speed).sum())
    profit = float(inst.profits[picks].sum())
    return time, -profit


def greedy_profit(inst: TtpInstance) -> float:
    """Fill the knapsack by descending profit/weight ratio, skipping items that do not fit."""
    order = sorted(range(inst.n_items), key=lambda j: (-inst.ratio[j], j))
    load = 0.0
    profit = 0.0
    for j in order:
        if load + inst.weights[j] <= inst.capacity:
            load += inst.weights[j]
            profit += inst.profits[j]
    return float(profit)


def mst_length(inst: TtpInstance) -> float:
    return float(minimum_spanning_tree(inst.dist).sum())


def ttp_reference_points(inst: TtpInstance) -> tuple[np.ndarray, np.ndarray]:
    best_time = mst_length(inst) / inst.v_max
    perfect = np.array([best_time, -greedy_profit(inst)])
    nadir = np.array([2.0 * best_time, 0.0])
    return perfect, nadir


# --------------------------------------------------------------------------- operators


def _pair(value) -> tuple[float, float]:
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ValueError("expected a (route, item) probability pair")
        return float(value[0]), float(value[1])
    return float(value), float(value)


def repair_picks(inst: TtpInstance, picks: np.ndarray) -> np.ndarray:
    """Drop picked items of lowest profit/weight until the capacity holds."""
    excess = picked_weight(inst, picks) - inst.capacity
    if excess <= 0:
        return picks
    picks = picks.copy()
    chosen = np.flatnonzero(picks)
    # lowest ratio first; among equal ratios drop the higher index first
    order = chosen[np.lexsort((-chosen, inst.ratio[chosen]))]
    dropped = np.cumsum(inst.weights[order])
    k = int(np.searchsorted(dropped, excess - 1e-12)) + 1
    picks[order[:k]] = False
    return picks


def order_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """OX on positions 1..n-1; position 0 keeps the start city."""
    n = len(a)
    if n <= 3:
        return a.copy(), b.copy()
    i, j = sorted(rng.choice(np.arange(1, n), size=2, replace=False))
    j += 1
    return _ox_child(a, b, i, j), _ox_child(b, a, i, j)


def _ox_child(keep: np.ndarray, fill: np.ndarray, i: int, j: int) -> np.ndarray:
    n = len(keep)
    child = keep.copy()
    kept = set(keep[i:j].tolist())
    tail = np.concatenate([fill[j:], fill[1:j]])
    donors = [c for c in tail.tolist() if c not in kept]
    slots = list(range(j, n)) + list(range(1, i))
    child[slots] = donors
    return child


def single_point_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator):
    m = len(a)
    if m < 2:
        return a.copy(), b.copy()
    cut = int(rng.integers(1, m))
    return np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]])


def ttp_crossover(inst: TtpInstance, a: TtpGenotype, b: TtpGenotype, p_x, rng: np.random.Generator):
    p_route, p_item = _pair(p_x)
    t1, t2 = a.tour.copy(), b.tour.copy()
    z1, z2 = a.picks.copy(), b.picks.copy()
    if rng.random() < p_route:
        t1, t2 = order_crossover(a.tour, b.tour, rng)
    if rng.random() < p_item:
        z1, z2 = single_point_crossover(a.picks, b.picks, rng)
    return TtpGenotype(t1, repair_picks(inst, z1)), TtpGenotype(t2, repair_picks(inst, z2))


def reverse_segment(tour: np.ndarray, i: int, j: int) -> np.ndarray:
    """Reverse positions i..j inclusive (1 <= i < j < n)."""
    out = tour.copy()
    out[i : j + 1] = out[i : j + 1][::-1]
    return out


def ttp_mutation(inst: TtpInstance, g: TtpGenotype, p_m, rng: np.random.Generator) -> TtpGenotype:
    p_route, p_item = _pair(p_m)
    tour, picks = g.tour, g.picks
    n = len(tour)
    if n > 2 and rng.random() < p_route:
        i, j = sorted(rng.choice(np.arange(1, n), size=2, replace=False))
        tour = reverse_segment(tour, int(i), int(j))
    if inst.n_items and rng.random() < p_item:
        picks = picks.copy()
        k = int(rng.integers(inst.n_items))
        picks[k] = not picks[k]
        picks = repair_picks(inst, picks)
    if tour is g.tour:
        tour = tour.copy()
    if picks is g.picks:
        picks = picks.copy()
    return TtpGenotype(tour, picks)


def random_ttp_genotype(inst: TtpInstance, rng: np.random.Generator) -> TtpGenotype:
    tour = np.concatenate([[0], 1 + rng.permutation(inst.n_cities - 1)]).astype(np.int64)
    picks = rng.random(inst.n_items) < rng.random()
    return TtpGenotype(tour, repair_picks(inst, picks))


def enumerate_pareto_front(inst: TtpInstance) -> np.ndarray:
    """Exact front by enumerating every tour and every feasible picking plan."""
    points = []
    plans = []
    for bits in itertools.product((False, True), repeat=inst.n_items):
        picks = np.array(bits, dtype=bool)
        if picked_weight(inst, picks) <= inst.capacity:
            plans.append(picks)
    for rest in itertools.permutations(range(1, inst.n_cities)):
        tour = np.array((0,) + rest, dtype=np.int64)
        for picks in plans:
            points.append(evaluate_ttp(inst, TtpGenotype(tour, picks)))
    return nondominated_filter(np.array(points))


class TtpProblem(Problem):
    n_objectives = 2

    def __init__(self, instance: TtpInstance):
        super().__init__()
        self.instance = instance
        self.name = instance.name

    def random_genotype(self, rng):
        return random_ttp_genotype(self.instance, rng)

    def _objectives(self, genotype):
        return evaluate_ttp(self.instance, genotype)

    def crossover(self, a, b, p_x, rng):
        return ttp_crossover(self.instance, a, b, p_x, rng)

    def mutate(self, genotype, p_m, rng):
        return ttp_mutation(self.instance, genotype, p_m, rng)

    def genotype_key(self, genotype) -> bytes:
        return genotype.tour.tobytes() + np.packbits(genotype.picks).tobytes()

    def genotype_to_json(self, genotype):
        return {
            "tour": [int(c) for c in genotype.tour],
            "picks": [int(j) for j in np.flatnonzero(genotype.picks)],
        }

    def genotype_from_json(self, data):
        picks = np.zeros(self.instance.n_items, dtype=bool)
        picks[data["picks"]] = True
        return TtpGenotype(np.asarray(data["tour"], dtype=np.int64), picks)

    def reference_points(self):
        return ttp_reference_points(self.instance)
