import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from moeakit.core import ContractError
from moeakit.ttp import (
    TtpFormatError,
    TtpGenotype,
    TtpInstance,
    TtpProblem,
    distance_matrix,
    enumerate_pareto_front,
    evaluate_ttp,
    greedy_profit,
    load_ttp,
    mst_length,
    order_crossover,
    parse_ttp,
    random_ttp_genotype,
    repair_picks,
    reverse_segment,
    serialize_ttp,
    ttp_crossover,
    ttp_mutation,
    ttp_reference_points,
)

from conftest import FIXTURES


@pytest.fixture(scope="module")
def eil():
    return load_ttp(FIXTURES / "eil51_n50_like.ttp")


@pytest.fixture(scope="module")
def tiny():
    return load_ttp(FIXTURES / "ttp_tiny.ttp")


def hand_instance():
    return TtpInstance(
        coords=[(0, 0), (3, 0), (3, 4), (0, 4)],
        profits=[10, 6, 8],
        weights=[4, 2, 3],
        item_cities=[1, 2, 3],
        capacity=7,
        v_min=0.2,
        v_max=1.0,
        edge_weight_type="EXACT_2D",
    )


def slow_time(inst, tour, picks):
    """Leg-by-leg travel time with an explicit running load."""
    load = 0.0
    total = 0.0
    n = len(tour)
    for k in range(n):
        city = tour[k]
        for j in range(inst.n_items):
            if picks[j] and inst.item_cities[j] == city:
                load += inst.weights[j]
        nxt = tour[(k + 1) % n]
        x1, y1 = inst.coords[city]
        x2, y2 = inst.coords[nxt]
        d = math.hypot(x1 - x2, y1 - y2)
        if inst.edge_weight_type == "CEIL_2D":
            d = math.ceil(d)
        speed = inst.v_max - load / inst.capacity * (inst.v_max - inst.v_min)
        total += d / speed
    return total


# --------------------------------------------------------------------------- parsing


def test_eil51_fixture_shape(eil):
    assert (eil.n_cities, eil.n_items) == (51, 50)


@pytest.mark.parametrize("name", ["eil51_n50_like.ttp", "ttp_tiny.ttp"])
def test_round_trip(name):
    inst = load_ttp(FIXTURES / name)
    assert parse_ttp(serialize_ttp(inst)) == inst


def test_capacity_zero_rejected(tiny):
    text = serialize_ttp(tiny).replace("CAPACITY OF KNAPSACK: \t10", "CAPACITY OF KNAPSACK: \t0")
    with pytest.raises(ValueError):
        parse_ttp(text)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t.replace("DIMENSION:\t5", "DIMENSION:\t6"),
        lambda t: t.replace("NUMBER OF ITEMS: \t5", "NUMBER OF ITEMS: \t4"),
        lambda t: t.split("NODE_COORD_SECTION")[0],
        lambda t: t.replace("MAX SPEED", "TOP SPEED"),
        lambda t: t.replace("5\t22\t6\t3", "5\t22\t6\t9"),
        lambda t: t.replace("5\t22\t6\t3", "5\t22\t6"),
    ],
)
def test_malformed_files(tiny, mutate):
    with pytest.raises(TtpFormatError):
        parse_ttp(mutate(serialize_ttp(tiny)))


def test_invalid_speeds():
    with pytest.raises(ValueError):
        TtpInstance([(0, 0), (1, 0)], [1], [1], [1], 5, v_min=2, v_max=1)


def test_distance_rounding_modes():
    c = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert distance_matrix(c, "CEIL_2D")[0, 1] == 2
    assert distance_matrix(c, "EUC_2D")[0, 1] == 1
    assert distance_matrix(c, "EXACT_2D")[0, 1] == pytest.approx(math.sqrt(2))
    with pytest.raises(TtpFormatError):
        distance_matrix(c, "GEO")


# --------------------------------------------------------------------------- evaluation


def test_empty_knapsack(eil):
    tour = np.arange(eil.n_cities)
    t, p = evaluate_ttp(eil, TtpGenotype(tour, np.zeros(eil.n_items, bool)))
    length = eil.dist[tour, np.roll(tour, -1)].sum()
    assert t == pytest.approx(length / eil.v_max) and p == 0


def test_full_knapsack_on_last_city_travels_at_min_speed():
    inst = TtpInstance([(0, 0), (3, 0), (3, 4)], [5], [10], [2], 10, 0.1, 1.0, edge_weight_type="EXACT_2D")
    t, p = evaluate_ttp(inst, TtpGenotype(np.array([0, 1, 2]), np.array([True])))
    assert t == pytest.approx(3 + 4 + 5 / 0.1)
    assert p == -5


def test_overweight_is_contract_error(tiny):
    with pytest.raises(ContractError):
        evaluate_ttp(tiny, TtpGenotype(np.arange(5), np.ones(5, bool)))


def test_hand_instance_exhaustive():
    inst = hand_instance()
    seen = 0
    for rest in itertools.permutations([1, 2, 3]):
        tour = np.array((0,) + rest)
        for bits in itertools.product([False, True], repeat=3):
            picks = np.array(bits)
            if inst.weights[picks].sum() > inst.capacity:
                continue
            t, p = evaluate_ttp(inst, TtpGenotype(tour, picks))
            assert t == pytest.approx(slow_time(inst, tour, picks), abs=1e-12)
            assert p == -sum(inst.profits[j] for j in range(3) if bits[j])
            seen += 1
    assert seen == 6 * 7  # only the full plan is overweight


@given(st.integers(0, 10_000))
def test_random_genotypes_match_slow_oracle(seed):
    inst = load_ttp(FIXTURES / "eil51_n50_like.ttp")
    g = random_ttp_genotype(inst, np.random.default_rng(seed))
    assert evaluate_ttp(inst, g)[0] == pytest.approx(slow_time(inst, g.tour, g.picks), rel=1e-12)


@given(st.integers(0, 10_000))
def test_adding_an_item_slows_and_adds_profit(seed):
    inst = load_ttp(FIXTURES / "eil51_n50_like.ttp")
    rng = np.random.default_rng(seed)
    g = random_ttp_genotype(inst, rng)
    free = np.flatnonzero(~g.picks & (inst.weights + inst.weights[g.picks].sum() <= inst.capacity))
    if not len(free):
        return
    j = int(rng.choice(free))
    more = g.picks.copy()
    more[j] = True
    t0, p0 = evaluate_ttp(inst, g)
    t1, p1 = evaluate_ttp(inst, TtpGenotype(g.tour, more))
    assert t1 >= t0
    assert -p1 - (-p0) == pytest.approx(inst.profits[j])


def test_empty_knapsack_time_is_rotation_invariant(eil):
    rng = np.random.default_rng(0)
    tour = random_ttp_genotype(eil, rng).tour
    empty = np.zeros(eil.n_items, bool)
    base = evaluate_ttp(eil, TtpGenotype(tour, empty))[0]
    for k in (1, 7, 30):
        assert evaluate_ttp(eil, TtpGenotype(np.roll(tour, k), empty))[0] == pytest.approx(base)


# --------------------------------------------------------------------------- reference points


def test_collinear_mst():
    inst = TtpInstance([(0, 0), (1, 0), (2, 0)], [1], [1], [1], 5, 0.1, 2.0, edge_weight_type="EXACT_2D")
    assert mst_length(inst) == pytest.approx(2)
    perfect, nadir = ttp_reference_points(inst)
    assert perfect[0] == pytest.approx(1.0) and nadir[0] == pytest.approx(2.0)
    assert nadir[1] == 0


def test_greedy_takes_everything_when_it_fits():
    inst = TtpInstance([(0, 0), (1, 0)], [3, 4, 5], [1, 1, 1], [1, 1, 1], 10, 0.1, 1.0)
    assert greedy_profit(inst) == 12


def test_greedy_matches_second_implementation(eil):
    items = sorted(zip(-(eil.profits / eil.weights), range(eil.n_items)))
    load = profit = 0.0
    for _, j in items:
        if load + eil.weights[j] <= eil.capacity:
            load += eil.weights[j]
            profit += eil.profits[j]
    assert greedy_profit(eil) == profit
    assert ttp_reference_points(eil)[0][1] == -profit


def test_mst_matches_prim(eil):
    n = eil.n_cities
    in_tree = {0}
    total = 0.0
    best = eil.dist[0].copy()
    while len(in_tree) < n:
        cand = [(best[j], j) for j in range(n) if j not in in_tree]
        d, j = min(cand)
        total += d
        in_tree.add(j)
        best = np.minimum(best, eil.dist[j])
    assert mst_length(eil) == pytest.approx(total)


# --------------------------------------------------------------------------- operators


def test_identical_parents_identical_children(eil):
    rng = np.random.default_rng(0)
    g = random_ttp_genotype(eil, rng)
    c1, c2 = ttp_crossover(eil, g, g.copy(), (1.0, 1.0), rng)
    for c in (c1, c2):
        assert np.array_equal(c.tour, g.tour) and np.array_equal(c.picks, g.picks)


def test_zero_probability_crossover_copies(eil):
    rng = np.random.default_rng(1)
    a, b = random_ttp_genotype(eil, rng), random_ttp_genotype(eil, rng)
    c1, c2 = ttp_crossover(eil, a, b, 0.0, rng)
    assert np.array_equal(c1.tour, a.tour) and np.array_equal(c2.picks, b.picks)


def test_ox_fuzz_yields_permutations(eil):
    rng = np.random.default_rng(2)
    n = eil.n_cities
    for _ in range(10_000):
        a = np.concatenate([[0], 1 + rng.permutation(n - 1)])
        b = np.concatenate([[0], 1 + rng.permutation(n - 1)])
        for c in order_crossover(a, b, rng):
            assert c[0] == 0
            assert np.array_equal(np.sort(c), np.arange(n))


def test_ox_keeps_a_segment_of_the_first_parent():
    rng = np.random.default_rng(3)
    a = np.arange(10)
    b = np.array([0, 9, 8, 7, 6, 5, 4, 3, 2, 1])
    c1, _ = order_crossover(a, b, rng)
    same = np.flatnonzero(c1 == a)
    assert len(same) >= 2


def test_crossover_children_feasible(eil):
    rng = np.random.default_rng(4)
    for _ in range(2000):
        a, b = random_ttp_genotype(eil, rng), random_ttp_genotype(eil, rng)
        a.picks[:] = rng.random(eil.n_items) < 0.9
        for c in ttp_crossover(eil, a, b, (0.5, 1.0), rng):
            assert eil.weights[c.picks].sum() <= eil.capacity


def test_repair_drops_lowest_ratio_first():
    inst = TtpInstance([(0, 0), (1, 0)], [10, 1, 6], [5, 5, 3], [1, 1, 1], 8, 0.1, 1.0)
    kept = repair_picks(inst, np.array([True, True, True]))
    assert kept.tolist() == [True, False, True]


def test_mutation_zero_probability_is_identity(eil):
    rng = np.random.default_rng(5)
    g = random_ttp_genotype(eil, rng)
    m = ttp_mutation(eil, g, 0.0, rng)
    assert np.array_equal(m.tour, g.tour) and np.array_equal(m.picks, g.picks)
    assert m.tour is not g.tour


def test_double_reversal_is_identity():
    tour = np.arange(12)
    assert np.array_equal(reverse_segment(reverse_segment(tour, 3, 9), 3, 9), tour)


def test_mutation_fuzz_stays_feasible(eil):
    rng = np.random.default_rng(6)
    g = random_ttp_genotype(eil, rng)
    for _ in range(10_000):
        g = ttp_mutation(eil, g, (0.7, 0.7), rng)
        assert g.tour[0] == 0 and np.array_equal(np.sort(g.tour), np.arange(eil.n_cities))
        assert eil.weights[g.picks].sum() <= eil.capacity


def test_item_mutation_flips_one_bit(eil):
    rng = np.random.default_rng(7)
    g = random_ttp_genotype(eil, rng)
    g.picks[:] = False
    m = ttp_mutation(eil, g, (0.0, 1.0), rng)
    assert m.picks.sum() == 1


def test_tiny_front_is_nondominated(tiny):
    pf = enumerate_pareto_front(tiny)
    assert len(pf) == 6
    assert pf[0].tolist() == [40.0, 0.0]


def test_problem_json_round_trip(eil):
    p = TtpProblem(eil)
    g = p.random_genotype(np.random.default_rng(0))
    back = p.genotype_from_json(p.genotype_to_json(g))
    assert np.array_equal(back.tour, g.tour) and np.array_equal(back.picks, g.picks)
    assert p.genotype_key(back) == p.genotype_key(g)
