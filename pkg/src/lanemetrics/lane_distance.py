"""Threshold-bounded along-lane distance between lane points.

A path through the lane graph is monotone: it follows only successor
links or only predecessor links, never both. Mixing directions would
connect laterally parallel lanes through a shared successor and defeat
the wrong-lane semantics of the metric.

Distance definitions for a point (segment, s):
  same segment                 |s_to - s_from|
  forward  from -> m1..mj -> to  (len(from) - s_from) + sum(len(mi)) + s_to
  backward from -> m1..mj -> to  s_from + sum(len(mi)) + (len(to) - s_to)

The bounded search prunes once the accumulated distance reaches the
threshold and memoizes the best entry distance per segment, which keeps
it exact and terminating on cyclic maps (roundabouts).
"""

from __future__ import annotations

import heapq
from typing import NamedTuple, Optional

from .lane_graph import LaneGraph


class LanePoint(NamedTuple):
    segment_id: str
    s: float


class ReachResult(NamedTuple):
    reached: bool
    distance: Optional[float]


def _validate_ids(graph: LaneGraph, points: list[LanePoint]) -> None:
    for point in points:
        graph.segment(point.segment_id)  # raises naming any unknown id


def within_lane_distance(
    graph: LaneGraph,
    from_point: LanePoint,
    to_set: list[LanePoint],
    threshold: float,
) -> ReachResult:
    """Whether any target lane point is within ``threshold`` along the graph.

    Returns reached=True with the minimum along-lane distance over both
    directions and all targets when that minimum is below the threshold;
    reached=False with no distance otherwise.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    _validate_ids(graph, [from_point, *to_set])

    targets: dict[str, list[float]] = {}
    for target in to_set:
        targets.setdefault(target.segment_id, []).append(target.s)

    best = float("inf")
    for s_to in targets.get(from_point.segment_id, ()):
        best = min(best, abs(s_to - from_point.s))

    from_segment = graph.segment(from_point.segment_id)
    forward_seed = from_segment.length - from_point.s
    backward_seed = from_point.s

    for seed, links, target_cost in (
        # Forward: entry distance is measured to the segment's start, a
        # target on the segment then adds its s.
        (forward_seed, lambda seg: seg.successors, lambda seg, s: s),
        # Backward: entry distance is measured to the segment's end, a
        # target adds the remainder len - s.
        (backward_seed, lambda seg: seg.predecessors, lambda seg, s: seg.length - s),
    ):
        best_entry: dict[str, float] = {}
        heap: list[tuple[float, str]] = []
        if seed < threshold:
            for neighbor in links(from_segment):
                best_entry[neighbor] = seed
                heapq.heappush(heap, (seed, neighbor))
        while heap:
            entry, segment_id = heapq.heappop(heap)
            if entry > best_entry.get(segment_id, float("inf")):
                continue  # stale heap entry
            if entry >= threshold or entry >= best:
                continue
            segment = graph.segment(segment_id)
            for s_to in targets.get(segment_id, ()):
                best = min(best, entry + target_cost(segment, s_to))
            exit_cost = entry + segment.length
            if exit_cost >= threshold or exit_cost >= best:
                continue
            for neighbor in links(segment):
                if exit_cost < best_entry.get(neighbor, float("inf")):
                    best_entry[neighbor] = exit_cost
                    heapq.heappush(heap, (exit_cost, neighbor))

    if best < threshold:
        return ReachResult(True, best)
    return ReachResult(False, None)


def oracle_lane_distance(
    graph: LaneGraph,
    from_point: LanePoint,
    to_point: LanePoint,
    cap: float,
) -> Optional[float]:
    """Exact minimum along-lane distance by exhaustive path enumeration.

    Enumerates every monotone path with accumulated distance <= cap and
    returns the true minimum, or None when no such path exists. Test
    oracle only: exponential in the worst case.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    _validate_ids(graph, [from_point, to_point])

    candidates: list[float] = []
    if from_point.segment_id == to_point.segment_id:
        direct = abs(to_point.s - from_point.s)
        if direct <= cap:
            candidates.append(direct)

    from_segment = graph.segment(from_point.segment_id)

    def explore(segment_id: str, entry: float, forward: bool) -> None:
        segment = graph.segment(segment_id)
        if segment_id == to_point.segment_id:
            total = entry + (to_point.s if forward else segment.length - to_point.s)
            if total <= cap:
                candidates.append(total)
        exit_cost = entry + segment.length
        if exit_cost > cap:
            return
        for neighbor in segment.successors if forward else segment.predecessors:
            explore(neighbor, exit_cost, forward)

    forward_seed = from_segment.length - from_point.s
    if forward_seed <= cap:
        for neighbor in from_segment.successors:
            explore(neighbor, forward_seed, forward=True)
    backward_seed = from_point.s
    if backward_seed <= cap:
        for neighbor in from_segment.predecessors:
            explore(neighbor, backward_seed, forward=False)

    return min(candidates) if candidates else None


__all__ = ["LanePoint", "ReachResult", "oracle_lane_distance", "within_lane_distance"]
