import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from moeakit.baselines import (
    ConfigError,
    MoeadConfig,
    Nsga2Config,
    Ntga2Config,
    Spea2Config,
    ThetaDeaConfig,
    UNsga3Config,
    crowding_distance,
    das_dennis,
    das_dennis_count,
    fast_non_dominated_sort,
    moead_run,
    nsga2_run,
    ntga2_run,
    partitions_for,
    perpendicular_distances,
    spea2_run,
    thetadea_run,
    unsga3_run,
)
from moeakit.baselines.common import nsga3_normalize
from moeakit.baselines.moead import neighbourhoods, replace_neighbours, weighted_sum
from moeakit.baselines.nsga2 import nsga2_survival
from moeakit.baselines.ntga2 import legacy_gap_pair, uses_gap_selection
from moeakit.baselines.spea2 import environmental_selection, spea2_fitness, truncate
from moeakit.baselines.thetadea import theta_distances, theta_fitness, theta_survival
from moeakit.baselines.unsga3 import nsga3_survival, reference_directions
from moeakit.core import dominates
from moeakit.msrcpsp import MsrcpspProblem, load_instance
from moeakit.selection import legacy_gap_values
from moeakit.ttp import TtpProblem, load_ttp

from conftest import FIXTURES


def brute_ranks(F):
    """Rank = length of the longest chain of dominators above a point."""
    n = len(F)
    rank = [None] * n
    remaining = set(range(n))
    r = 0
    while remaining:
        layer = {i for i in remaining if not any(dominates(F[j], F[i]) for j in remaining if j != i)}
        for i in layer:
            rank[i] = r
        remaining -= layer
        r += 1
    return rank


def test_sort_example():
    F = np.array([[1, 1], [2, 2], [1, 2]], dtype=float)
    assert [f.tolist() for f in fast_non_dominated_sort(F)] == [[0], [2], [1]]


@pytest.mark.parametrize("m", [2, 3, 5])
def test_sort_matches_bruteforce(m):
    rng = np.random.default_rng(m)
    for _ in range(5):
        F = rng.integers(0, 10, size=(int(rng.integers(1, 200)), m)).astype(float)
        rank = np.empty(len(F), dtype=int)
        for r, f in enumerate(fast_non_dominated_sort(F)):
            rank[f] = r
        assert rank.tolist() == brute_ranks([tuple(x) for x in F])


def test_crowding_collinear():
    d = crowding_distance(np.array([[0, 2], [1, 1], [2, 0]], dtype=float))
    assert math.isinf(d[0]) and math.isinf(d[2]) and math.isfinite(d[1])
    assert d[1] == pytest.approx(2.0)


def test_das_dennis_two_objectives():
    assert das_dennis(2, 4).tolist() == [[0, 1], [0.25, 0.75], [0.5, 0.5], [0.75, 0.25], [1, 0]]


@pytest.mark.parametrize("m,h", [(2, 4), (3, 2), (5, 4), (3, 12), (2, 50), (5, 7)])
def test_das_dennis_lattice(m, h):
    W = das_dennis(m, h)
    assert len(W) == das_dennis_count(m, h) == math.comb(h + m - 1, m - 1)
    assert np.allclose(W.sum(axis=1), 1, atol=1e-12)
    assert np.allclose(W * h, np.round(W * h))
    assert len({tuple(w) for w in W}) == len(W)


def test_das_dennis_rejects_zero_partitions():
    with pytest.raises(ConfigError):
        das_dennis(3, 0)


def test_partitions_for():
    assert partitions_for(2, 100) == 99
    assert partitions_for(5, 200) == 5 and das_dennis_count(5, 5) == 126
    assert partitions_for(3, 91) == 12


def test_perpendicular_distance():
    assert perpendicular_distances(np.array([[1.0, 1.0]]), np.array([[1.0, 0.0]]))[0, 0] == pytest.approx(1.0)


def test_nsga3_normalize_maps_extremes_to_unit_intercepts():
    F = np.array([[0, 10], [5, 5], [10, 0]], dtype=float) + 3
    Z = nsga3_normalize(F)
    assert Z.min() == pytest.approx(0)
    assert Z[0].tolist() == pytest.approx([0, 1]) and Z[2].tolist() == pytest.approx([1, 0])


def test_nsga3_normalize_degenerate_falls_back():
    F = np.array([[1, 1], [1, 1]], dtype=float)
    assert np.all(np.isfinite(nsga3_normalize(F)))


def test_unsga3_rejects_bad_partitions():
    with pytest.raises(ConfigError):
        reference_directions(3, 10, 0)


def test_theta_zero_is_along_line_distance():
    Z = np.array([[0.3, 0.3], [0.4, 0.1]])
    _, d1, d2 = theta_distances(Z, np.array([[0.5, 0.5], [1.0, 0.0]]))
    assert np.array_equal(theta_fitness(d1, d2, 0.0), d1)


def test_point_on_line_has_zero_perpendicular_distance():
    cluster, d1, d2 = theta_distances(np.array([[0.2, 0.2]]), np.array([[0.5, 0.5], [1.0, 0.0]]))
    assert cluster[0] == 0 and d2[0] == pytest.approx(0, abs=1e-12)
    assert d1[0] == pytest.approx(math.sqrt(0.08))


def test_weighted_sum_examples():
    assert weighted_sum(np.array([0.2, 0.4]), np.array([1.0, 0.0])) == pytest.approx(0.2)
    assert weighted_sum(np.array([0.2, 0.4]), np.array([0.5, 0.5])) == pytest.approx(0.3)


def test_moead_vector_count_and_neighbourhood_error():
    assert len(MoeadConfig(part_nr=50).weights(2)) == 51
    assert len(MoeadConfig(part_nr=7, nh_size=2).weights(5)) == 330
    with pytest.raises(ConfigError):
        MoeadConfig(part_nr=3, nh_size=6).weights(2)


def test_neighbourhood_contains_self():
    W = das_dennis(2, 10)
    B = neighbourhoods(W, 3)
    assert all(i in B[i] for i in range(len(W)))


@given(st.integers(0, 10_000))
def test_replacement_never_worsens_subproblems(seed):
    rng = np.random.default_rng(seed)
    W = das_dennis(3, 4)
    Z = rng.random((len(W), 3))
    before = (W * Z).sum(axis=1)
    pop = list(range(len(W)))
    hood = rng.choice(len(W), size=5, replace=False)
    replace_neighbours(W, hood, Z, pop, "child", rng.random(3))
    assert np.all((W * Z).sum(axis=1) <= before)


def test_spea2_single_and_pair():
    assert spea2_fitness(np.array([[1.0, 1.0]]))[0] < 1
    fit = spea2_fitness(np.array([[1.0, 3.0], [3.0, 1.0]]))
    assert np.all(fit < 1)
    fit = spea2_fitness(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))
    # raw fitness: 0, strength(0)=2, strength(0)+strength(1)=2+1
    assert np.floor(fit).tolist() == [0, 2, 3]


def test_spea2_truncation_removes_one_per_overflow():
    F = np.array([[i, 10 - i] for i in range(11)], dtype=float)
    kept = truncate(F, np.arange(11), 10)
    assert len(kept) == 10


def test_spea2_truncation_keeps_extremes():
    rng = np.random.default_rng(0)
    x = np.sort(rng.random(60))
    F = np.column_stack([x, 1 - x])
    kept = truncate(F, np.arange(60), 8)
    assert 0 in kept and 59 in kept and len(kept) == 8


def test_spea2_environmental_selection_fills_with_dominated():
    F = np.array([[1, 1], [2, 2], [3, 3], [4, 4]], dtype=float)
    keep = environmental_selection(F, spea2_fitness(F), 3)
    assert sorted(keep.tolist()) == [0, 1, 2]


def test_ntga2_block_schedule():
    assert [uses_gap_selection(g, 50) for g in (0, 49, 50, 99, 100, 150)] == [False, False, True, True, False, True]


def test_legacy_gap_pair_neighbours():
    pts = np.array([[i, 20 - i] for i in range(20)], dtype=float)
    view = legacy_gap_values(pts)
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = legacy_gap_pair(view, 20, rng)
        assert 0 <= a < 20 and 0 <= b < 20


@pytest.mark.parametrize("survival", ["nsga2", "nsga3", "theta"])
def test_survival_picks_unique_indices(survival):
    rng = np.random.default_rng(1)
    F = rng.random((60, 3))
    refs = das_dennis(3, 4)
    if survival == "nsga2":
        keep = nsga2_survival(F, 30, rng)
    elif survival == "nsga3":
        keep, info = nsga3_survival(F, 30, refs, rng)
        assert len(info.rank) == 30
    else:
        keep = theta_survival(F, 30, refs, 0.5, rng)
    assert len(keep) == 30 == len(set(keep.tolist()))


def test_nsga2_survival_keeps_first_front():
    rng = np.random.default_rng(2)
    F = rng.random((40, 2))
    first = fast_non_dominated_sort(F)[0]
    keep = nsga2_survival(F, max(len(first), 20), rng)
    assert set(first.tolist()) <= set(keep.tolist())


# --------------------------------------------------------------------------- full runs

RUNNERS = {
    "nsga2": (nsga2_run, Nsga2Config, dict(pop_size=20)),
    "unsga3": (unsga3_run, UNsga3Config, dict(pop_size=20)),
    "thetadea": (thetadea_run, ThetaDeaConfig, dict(pop_size=20)),
    "ntga2": (ntga2_run, Ntga2Config, dict(pop_size=20, gs_generations=3)),
    "spea2": (spea2_run, Spea2Config, dict(pop_size=20)),
    "moead": (moead_run, MoeadConfig, dict(part_nr=9, nh_size=4)),
}


@pytest.fixture(scope="module")
def tiny():
    return load_instance(FIXTURES / "msrcpsp_tiny.def")


@pytest.mark.parametrize("name", sorted(RUNNERS))
@pytest.mark.parametrize("mode", [2, 5])
def test_runs_are_deterministic_and_budgeted(tiny, name, mode):
    run, cfg_cls, kw = RUNNERS[name]
    if name == "moead" and mode == 5:
        kw = dict(part_nr=3, nh_size=4)
    cfg = cfg_cls(budget=600, seed=3, **kw)
    p1, p2 = MsrcpspProblem(tiny, mode), MsrcpspProblem(tiny, mode)
    a, b = run(p1, cfg), run(p2, cfg)
    assert json.dumps([a.front, a.genotypes]) == json.dumps([b.front, b.genotypes])
    assert a.evaluations == p1.evaluations <= 600
    F = [tuple(f) for f in a.front]
    assert all(not dominates(x, y) for x in F for y in F)


@pytest.mark.parametrize("name", sorted(RUNNERS))
def test_runs_on_ttp(name):
    inst = load_ttp(FIXTURES / "ttp_tiny.ttp")
    run, cfg_cls, kw = RUNNERS[name]
    res = run(TtpProblem(inst), cfg_cls(budget=300, seed=0, p_x=(0.5, 0.5), p_m=(0.5, 0.5), **kw))
    assert res.evaluations <= 300 and res.front


def test_nsga2_ledger(tiny):
    p = MsrcpspProblem(tiny)
    res = nsga2_run(p, Nsga2Config(pop_size=30, budget=1000))
    assert res.generations == 1000 // 30 - 1
    assert res.evaluations == 30 * (res.generations + 1)


class KeySpy(MsrcpspProblem):
    def __init__(self, inst):
        super().__init__(inst)
        self.keys = []

    def evaluate(self, genotype):
        self.keys.append(self.genotype_key(genotype))
        return super().evaluate(genotype)


def test_ntga2_clone_elimination(tiny):
    p = KeySpy(tiny)
    cfg = Ntga2Config(pop_size=20, budget=400, p_x=0.0, p_m=0.05, seed=1, gs_generations=5)
    res = ntga2_run(p, cfg)
    assert res.diagnostics["remutations"] >= 1
    for g in range(1, res.generations + 1):
        block = p.keys[20 * g : 20 * (g + 1)]
        assert len(set(block)) == 20


def test_perpendicular_distance_exact_on_line():
    d = perpendicular_distances(np.array([[0.2, 0.2], [0.3, 0.1]]), np.array([[1.0, 1.0], [3.0, 1.0]]))
    assert d[0, 0] == pytest.approx(0, abs=1e-15) and d[1, 1] == pytest.approx(0, abs=1e-15)
