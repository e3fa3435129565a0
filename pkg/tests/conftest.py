from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def brute_nondominated(points) -> set[tuple]:
    """Quadratic reference filter: keep points no other point dominates, once each."""
    pts = [tuple(map(float, p)) for p in points]
    out = set()
    for p in pts:
        dominated = False
        for q in pts:
            if all(a <= b for a, b in zip(q, p)) and any(a < b for a, b in zip(q, p)):
                dominated = True
                break
        if not dominated:
            out.add(p)
    return out
