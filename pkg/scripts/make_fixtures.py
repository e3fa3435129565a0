"""Regenerate the synthetic instance fixtures under tests/fixtures.

The MS-RCPSP files copy the naming of the public 100-task/5-resource instances
(tasks_resources_relations_skilltypes) but their contents are random; each uses
its relation count as the generator seed. The TTP file uses the eil51 city
layout with one generated item per city after the first.
"""
from pathlib import Path

import numpy as np

from moeakit.msrcpsp import generate_instance, serialize_instance
from moeakit.ttp import TtpInstance, serialize_ttp

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

EIL51 = [
    (37, 52), (49, 49), (52, 64), (20, 26), (40, 30), (21, 47), (17, 63), (31, 62), (52, 33),
    (51, 21), (42, 41), (31, 32), (5, 25), (12, 42), (36, 16), (52, 41), (27, 23), (17, 33),
    (13, 13), (57, 58), (62, 42), (42, 57), (16, 57), (8, 52), (7, 38), (27, 68), (30, 48),
    (43, 67), (58, 48), (58, 27), (37, 69), (38, 46), (46, 10), (61, 33), (62, 63), (63, 69),
    (32, 22), (45, 35), (59, 15), (5, 6), (10, 17), (21, 10), (5, 64), (30, 15), (39, 10),
    (32, 39), (25, 32), (25, 55), (48, 28), (56, 37), (30, 40),
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for relations, skills in ((22, 15), (46, 15), (64, 9)):
        inst = generate_instance(100, 5, relations, skills, np.random.default_rng(relations))
        (OUT / f"{inst.name}.def").write_text(serialize_instance(inst))
    d5 = generate_instance(200, 20, 150, 9, np.random.default_rng(5), name="200_20_150_9_D5like")
    (OUT / f"{d5.name}.def").write_text(serialize_instance(d5))

    rng = np.random.default_rng(51)
    weights = rng.integers(1, 101, size=50)
    profits = weights + 100  # bounded strongly correlated
    ttp = TtpInstance(
        coords=EIL51,
        profits=profits,
        weights=weights,
        item_cities=np.arange(1, 51),
        capacity=4029,
        v_min=0.1,
        v_max=1.0,
        name="eil51_n50_like",
        edge_weight_type="CEIL_2D",
        renting_ratio=5.61,
        knapsack_type="bounded strongly corr",
    )
    (OUT / "eil51_n50_like.ttp").write_text(serialize_ttp(ttp))


if __name__ == "__main__":
    main()
