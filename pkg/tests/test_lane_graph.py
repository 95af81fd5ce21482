import numpy as np
import pytest

from lanemetrics.geometry import point_at_arclength, point_in_polygon
from lanemetrics.lane_graph import (
    LaneGraphError,
    build_lane_graph,
    lane_polygon,
    polygon_table,
    segment_records,
)

from conftest import random_lane_graph


class TestBuildLaneGraph:
    def test_consistent_adjacency(self):
        graph = build_lane_graph(
            [
                {"id": "a", "centerline": [[0, 0], [10, 0]], "successors": ["b"]},
                {"id": "b", "centerline": [[10, 0], [20, 0]], "predecessors": ["a"]},
            ]
        )
        assert graph.segment("a").successors == ("b",)
        assert graph.segment("b").predecessors == ("a",)
        assert graph.repair_count == 0

    def test_symmetrizes_one_directional_links(self):
        graph = build_lane_graph(
            [
                {"id": "a", "centerline": [[0, 0], [10, 0]], "successors": ["b"]},
                {"id": "b", "centerline": [[10, 0], [20, 0]]},
            ]
        )
        assert graph.segment("b").predecessors == ("a",)

    def test_dangling_reference_dropped_with_warning_count(self):
        graph = build_lane_graph(
            [{"id": "a", "centerline": [[0, 0], [10, 0]], "successors": ["z"]}]
        )
        assert graph.segment("a").successors == ()
        assert graph.repair_count == 1

    def test_single_segment_graph(self):
        graph = build_lane_graph([{"id": "only", "centerline": [[0, 0], [5, 0]]}])
        assert len(graph) == 1
        assert graph.segment("only").length == pytest.approx(5.0)

    def test_empty_map_rejected(self):
        with pytest.raises(LaneGraphError, match="empty lane graph"):
            build_lane_graph([])

    def test_short_centerline_names_segment(self):
        with pytest.raises(LaneGraphError, match="bad-seg"):
            build_lane_graph([{"id": "bad-seg", "centerline": [[0, 0]]}])

    def test_duplicate_id_rejected(self):
        with pytest.raises(LaneGraphError, match="dup"):
            build_lane_graph(
                [
                    {"id": "dup", "centerline": [[0, 0], [1, 0]]},
                    {"id": "dup", "centerline": [[0, 1], [1, 1]]},
                ]
            )

    def test_self_reference_dropped(self):
        graph = build_lane_graph(
            [{"id": "a", "centerline": [[0, 0], [10, 0]], "successors": ["a"]}]
        )
        assert graph.segment("a").successors == ()

    def test_unknown_segment_lookup_names_id(self):
        graph = build_lane_graph([{"id": "a", "centerline": [[0, 0], [1, 0]]}])
        with pytest.raises(LaneGraphError, match="nope"):
            graph.segment("nope")

    @pytest.mark.parametrize("seed", range(20))
    def test_adjacency_symmetry_on_random_graphs(self, seed):
        graph = random_lane_graph(np.random.default_rng(seed))
        for seg in graph:
            for succ in seg.successors:
                assert seg.id in graph.segment(succ).predecessors
            for pred in seg.predecessors:
                assert seg.id in graph.segment(pred).successors


class TestLanePolygon:
    def test_straight_buffered_ring(self):
        graph = build_lane_graph([{"id": "a", "centerline": [[0, 0], [10, 0]]}])
        ring = lane_polygon(graph.segment("a"), half_width=2.0).ring
        expected = np.array([(0, 2), (10, 2), (10, -2), (0, -2)], dtype=float)
        assert np.allclose(ring, expected, atol=1e-12)

    def test_boundaries_take_precedence(self):
        graph = build_lane_graph(
            [
                {
                    "id": "a",
                    "centerline": [[0, 0], [10, 0]],
                    "left_boundary": [[0, 1.5], [10, 1.5]],
                    "right_boundary": [[0, -1.5], [10, -1.5]],
                }
            ]
        )
        ring = lane_polygon(graph.segment("a")).ring
        expected = np.array([(0, 1.5), (10, 1.5), (10, -1.5), (0, -1.5)], dtype=float)
        assert np.allclose(ring, expected, atol=1e-12)

    def test_interior_point_is_inside(self):
        graph = build_lane_graph([{"id": "a", "centerline": [[0, 0], [10, 0]]}])
        ring = lane_polygon(graph.segment("a"), half_width=2.0).ring
        assert point_in_polygon((5, 1), ring) is True

    def test_buffered_ring_contains_centerline_samples(self):
        # Gentle arc: every sampled centerline point must fall inside the
        # buffered polygon.
        angles = np.linspace(0.0, np.pi / 2, 12)
        arc = np.column_stack([30 * np.cos(angles), 30 * np.sin(angles)])
        graph = build_lane_graph([{"id": "arc", "centerline": arc.tolist()}])
        seg = graph.segment("arc")
        ring = lane_polygon(seg, half_width=2.0).ring
        rng = np.random.default_rng(3)
        for s in rng.uniform(0.0, seg.length, 100):
            assert point_in_polygon(point_at_arclength(seg.centerline, s), ring) is True

    def test_rejects_non_positive_half_width(self):
        graph = build_lane_graph([{"id": "a", "centerline": [[0, 0], [10, 0]]}])
        with pytest.raises(ValueError, match="half_width"):
            lane_polygon(graph.segment("a"), half_width=0.0)

    def test_polygon_table_covers_all_segments(self, two_lane_chain):
        table = polygon_table(two_lane_chain)
        assert set(table) == {"a", "b"}


def test_segment_records_round_trip(two_lane_chain):
    rebuilt = build_lane_graph(segment_records(two_lane_chain))
    assert set(rebuilt.segments) == set(two_lane_chain.segments)
    for seg in two_lane_chain:
        other = rebuilt.segment(seg.id)
        assert np.array_equal(seg.centerline.points, other.centerline.points)
        assert seg.successors == other.successors
        assert seg.predecessors == other.predecessors
