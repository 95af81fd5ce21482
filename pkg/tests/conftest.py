import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lanemetrics.lane_graph import build_lane_graph

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


@pytest.fixture
def unit_square():
    return list(UNIT_SQUARE)


@pytest.fixture
def two_lane_chain():
    """A(len 10) -> B(len 10), collinear along x."""
    return build_lane_graph(
        [
            {"id": "a", "centerline": [[0.0, 0.0], [10.0, 0.0]], "successors": ["b"]},
            {"id": "b", "centerline": [[10.0, 0.0], [20.0, 0.0]], "successors": []},
        ]
    )


@pytest.fixture
def diamond_graph():
    """A -> {B (len 5), C (len 7)} -> D."""
    h = np.sqrt(6.0)  # gives the C detour a length of exactly 7
    return build_lane_graph(
        [
            {"id": "a", "centerline": [[0.0, 0.0], [10.0, 0.0]], "successors": ["b", "c"]},
            {"id": "b", "centerline": [[10.0, 0.0], [15.0, 0.0]], "successors": ["d"]},
            {
                "id": "c",
                "centerline": [[10.0, 0.0], [12.5, float(h)], [15.0, 0.0]],
                "successors": ["d"],
            },
            {"id": "d", "centerline": [[15.0, 0.0], [25.0, 0.0]], "successors": []},
        ]
    )


def random_lane_graph(rng: np.random.Generator, max_segments: int = 20):
    """Random small graph with segment lengths in [5, 30] and random
    monotone adjacency; geometry is laid out on disjoint horizontal strips
    so construction always validates."""
    n = int(rng.integers(2, max_segments + 1))
    records = []
    for i in range(n):
        length = float(rng.uniform(5.0, 30.0))
        x0 = float(rng.uniform(-50.0, 50.0))
        y = 10.0 * i
        records.append(
            {
                "id": f"s{i:02d}",
                "centerline": [[x0, y], [x0 + length, y]],
                "successors": [],
            }
        )
    for i in range(n):
        for j in rng.choice(n, size=int(rng.integers(0, 3)), replace=False):
            if int(j) != i:
                records[i]["successors"].append(f"s{int(j):02d}")
    return build_lane_graph(records)
