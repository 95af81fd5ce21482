"""Lane assignment: bind a trajectory endpoint to candidate lane segments
with confidence scores combining distance and orientation agreement.

A segment is a candidate when its lane polygon contains the endpoint. The
confidence is p = w * p_d + (1 - w) * p_alpha with
p_d = max(0, 1 - d / c_dist) and p_alpha = max(0, 1 - dalpha / c_orient).
For a stationary trajectory (no usable heading) the orientation term is
dropped and p = p_d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (
    DEFAULT_HEADING_EPSILON,
    heading_at_end,
    heading_on_polyline_at,
    point_in_polygon,
    project_onto_polyline,
    wrapped_angle_diff,
)
from .lane_graph import DEFAULT_HALF_WIDTH, LaneGraph, lane_polygon
from .spatial_index import QUERY_INFLATION_SAFETY, CenterlineIndex, query_candidates


@dataclass(frozen=True)
class AssignmentConfig:
    """Tunable constants of the lane assignment confidence."""

    c_dist: float = 5.0
    c_orient: float = math.pi
    w: float = 0.5
    margin: float = 0.1
    epsilon_heading: float = DEFAULT_HEADING_EPSILON

    def __post_init__(self):
        if self.c_dist <= 0:
            raise ValueError("c_dist must be positive")
        if self.c_orient <= 0:
            raise ValueError("c_orient must be positive")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("w must be in [0, 1]")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")
        if self.epsilon_heading <= 0:
            raise ValueError("epsilon_heading must be positive")


@dataclass(frozen=True)
class LaneAssignment:
    """(segment, s, p) binding of an endpoint to a centerline.

    ``delta_alpha`` is None when the trajectory was stationary and the
    orientation term was dropped.
    """

    segment_id: str
    s: float
    p: float
    d: float
    delta_alpha: Optional[float]


def confidences(
    d: float, delta_alpha: Optional[float], cfg: AssignmentConfig
) -> tuple[float, Optional[float], float]:
    """(p_d, p_alpha, p) for a distance/orientation-difference pair.

    With ``delta_alpha`` None (stationary trajectory) the orientation term
    is dropped: p_alpha is None and p equals p_d.
    """
    p_d = max(0.0, 1.0 - d / cfg.c_dist)
    if delta_alpha is None:
        return p_d, None, p_d
    p_alpha = max(0.0, 1.0 - delta_alpha / cfg.c_orient)
    return p_d, p_alpha, cfg.w * p_d + (1.0 - cfg.w) * p_alpha


def get_lane_assignments(
    traj,
    graph: LaneGraph,
    index: CenterlineIndex,
    cfg: AssignmentConfig,
    half_width: float = DEFAULT_HALF_WIDTH,
    polygons: Optional[dict[str, np.ndarray]] = None,
) -> list[LaneAssignment]:
    """All lane assignments of a trajectory's endpoint, best first.

    ``traj`` is a point sequence or anything with a ``points`` array.
    Only the endpoint enters the polygon test and projection; earlier
    trajectory points only contribute to the heading estimate. Result is
    sorted by confidence descending, ties by ascending segment id. An
    empty list means the endpoint is not assignable to any lane.

    ``polygons`` optionally carries precomputed lane polygon rings (from
    ``lane_graph.polygon_table``) to avoid rebuilding them per call.
    """
    traj_points = traj.points if hasattr(traj, "points") else traj
    endpoint = traj_points[-1]
    alpha_traj = heading_at_end(traj_points, cfg.epsilon_heading)
    inflate = half_width + QUERY_INFLATION_SAFETY
    assignments = []
    for segment_id in query_candidates(index, endpoint, inflate):
        segment = graph.segments[segment_id]
        if polygons is not None:
            ring = polygons[segment_id]
        else:
            ring = lane_polygon(segment, half_width).ring
        if not point_in_polygon(endpoint, ring):
            continue
        proj = project_onto_polyline(endpoint, segment.centerline)
        if alpha_traj is None:
            delta_alpha = None
        else:
            alpha_lane = heading_on_polyline_at(segment.centerline, proj.s)
            delta_alpha = wrapped_angle_diff(alpha_traj, alpha_lane)
        _, _, p = confidences(proj.d, delta_alpha, cfg)
        assignments.append(
            LaneAssignment(segment_id=segment_id, s=proj.s, p=p, d=proj.d, delta_alpha=delta_alpha)
        )
    assignments.sort(key=lambda a: (-a.p, a.segment_id))
    return assignments


def select_ground_truth_assignment(assignments: list[LaneAssignment]) -> Optional[LaneAssignment]:
    """Most probable assignment, or None when the endpoint is unassignable."""
    return assignments[0] if assignments else None


def select_prediction_assignments(assignments: list[LaneAssignment], cfg: AssignmentConfig) -> list[LaneAssignment]:
    """Assignments whose confidence is within ``margin`` of the best one."""
    if not assignments:
        return []
    cutoff = assignments[0].p - cfg.margin
    return [a for a in assignments if a.p >= cutoff]


__all__ = [
    "AssignmentConfig",
    "LaneAssignment",
    "confidences",
    "get_lane_assignments",
    "select_ground_truth_assignment",
    "select_prediction_assignments",
]
