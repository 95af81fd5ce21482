"""Lane graph data model: segments with centerlines, optional boundaries,
and successor/predecessor adjacency.

Traversal is deliberately restricted to successor/predecessor links; no
left/right neighbor adjacency is modeled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from .geometry import Polyline

# Half lane width in meters used to buffer a centerline into a polygon
# when explicit boundaries are absent.
DEFAULT_HALF_WIDTH = 2.0


class LaneGraphError(ValueError):
    """Raised for structurally invalid lane graph inputs."""


@dataclass(frozen=True)
class LaneSegment:
    """One lane segment: centerline, optional boundaries, adjacency."""

    id: str
    centerline: Polyline
    left_boundary: Optional[Polyline] = None
    right_boundary: Optional[Polyline] = None
    successors: tuple[str, ...] = ()
    predecessors: tuple[str, ...] = ()

    @property
    def length(self) -> float:
        return self.centerline.length


@dataclass(frozen=True)
class LaneGraph:
    """Immutable id-keyed collection of lane segments.

    ``repair_count`` is the number of dangling adjacency references that
    were dropped while building the graph.
    """

    segments: dict[str, LaneSegment]
    repair_count: int = 0

    def segment(self, segment_id: str) -> LaneSegment:
        try:
            return self.segments[segment_id]
        except KeyError:
            raise LaneGraphError(f"unknown lane segment id '{segment_id}'") from None

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments.values())


@dataclass(frozen=True)
class LanePolygon:
    segment_id: str
    ring: np.ndarray = field(repr=False)


def _optional_polyline(record: Mapping, key: str, segment_id: str) -> Optional[Polyline]:
    raw = record.get(key)
    if raw is None:
        return None
    try:
        return Polyline(raw)
    except ValueError as exc:
        raise LaneGraphError(f"segment '{segment_id}': invalid {key}: {exc}") from exc


def build_lane_graph(raw_segments: Iterable[Mapping]) -> LaneGraph:
    """Build a validated LaneGraph from parsed segment records.

    Each record needs ``id`` and ``centerline``; ``left_boundary``,
    ``right_boundary``, ``successors`` and ``predecessors`` are optional.
    Dangling adjacency references are dropped (counted in
    ``repair_count``) and asymmetric links are symmetrized, so that
    b in successors(a) iff a in predecessors(b).
    """
    records = list(raw_segments)
    if not records:
        raise LaneGraphError("empty lane graph")

    centerlines: dict[str, Polyline] = {}
    boundaries: dict[str, tuple[Optional[Polyline], Optional[Polyline]]] = {}
    successors: dict[str, list[str]] = {}
    predecessors: dict[str, list[str]] = {}
    for record in records:
        segment_id = str(record["id"])
        if segment_id in centerlines:
            raise LaneGraphError(f"duplicate lane segment id '{segment_id}'")
        try:
            centerlines[segment_id] = Polyline(record["centerline"])
        except ValueError as exc:
            raise LaneGraphError(f"segment '{segment_id}': invalid centerline: {exc}") from exc
        boundaries[segment_id] = (
            _optional_polyline(record, "left_boundary", segment_id),
            _optional_polyline(record, "right_boundary", segment_id),
        )
        successors[segment_id] = [str(s) for s in record.get("successors", ())]
        predecessors[segment_id] = [str(s) for s in record.get("predecessors", ())]

    # Drop references to absent segments and self references, then
    # symmetrize what is left (union of both link directions).
    repair_count = 0
    known = centerlines.keys()
    for segment_id in known:
        for links in (successors[segment_id], predecessors[segment_id]):
            kept = []
            for other in links:
                if other not in known:
                    repair_count += 1
                elif other != segment_id and other not in kept:
                    kept.append(other)
            links[:] = kept

    for segment_id in known:
        for succ in successors[segment_id]:
            if segment_id not in predecessors[succ]:
                predecessors[succ].append(segment_id)
        for pred in predecessors[segment_id]:
            if segment_id not in successors[pred]:
                successors[pred].append(segment_id)

    segments = {
        segment_id: LaneSegment(
            id=segment_id,
            centerline=centerlines[segment_id],
            left_boundary=boundaries[segment_id][0],
            right_boundary=boundaries[segment_id][1],
            successors=tuple(successors[segment_id]),
            predecessors=tuple(predecessors[segment_id]),
        )
        for segment_id in centerlines
    }
    return LaneGraph(segments=segments, repair_count=repair_count)


def _vertex_normals(points: np.ndarray) -> np.ndarray:
    """Unit left normals at each polyline vertex.

    Interior vertices use the averaged direction of the two adjacent
    segments (miter); a near-180-degree reversal falls back to the
    following segment's direction.
    """
    deltas = np.diff(points, axis=0)
    tangents = deltas / np.hypot(deltas[:, 0], deltas[:, 1])[:, None]
    vertex_tangents = np.empty_like(points)
    vertex_tangents[0] = tangents[0]
    vertex_tangents[-1] = tangents[-1]
    if points.shape[0] > 2:
        mids = tangents[:-1] + tangents[1:]
        norms = np.hypot(mids[:, 0], mids[:, 1])
        degenerate = norms < 1e-9
        if degenerate.any():
            mids[degenerate] = tangents[1:][degenerate]
            norms = np.hypot(mids[:, 0], mids[:, 1])
        vertex_tangents[1:-1] = mids / norms[:, None]
    normals = np.empty_like(vertex_tangents)
    normals[:, 0] = -vertex_tangents[:, 1]
    normals[:, 1] = vertex_tangents[:, 0]
    return normals


def lane_polygon(segment: LaneSegment, half_width: float = DEFAULT_HALF_WIDTH) -> LanePolygon:
    """Polygon ring enclosing a lane segment.

    With boundaries present the ring is the left boundary followed by the
    reversed right boundary. Otherwise the centerline is buffered by
    ``half_width`` on each side, offsetting each vertex perpendicular to
    the local heading.
    """
    if segment.left_boundary is not None and segment.right_boundary is not None:
        ring = np.vstack([segment.left_boundary.points, segment.right_boundary.points[::-1]])
    else:
        if half_width <= 0:
            raise ValueError("half_width must be positive")
        pts = segment.centerline.points
        offsets = half_width * _vertex_normals(pts)
        ring = np.vstack([pts + offsets, (pts - offsets)[::-1]])
    ring.setflags(write=False)
    return LanePolygon(segment_id=segment.id, ring=ring)


def polygon_table(graph: LaneGraph, half_width: float = DEFAULT_HALF_WIDTH) -> dict[str, np.ndarray]:
    """Precompute every segment's polygon ring, keyed by segment id."""
    return {seg.id: lane_polygon(seg, half_width).ring for seg in graph}


def segment_records(graph: LaneGraph) -> list[dict]:
    """Reverse of build_lane_graph: plain records for serialization."""
    records = []
    for seg in graph:
        record: dict = {
            "id": seg.id,
            "centerline": seg.centerline.points.tolist(),
            "successors": list(seg.successors),
            "predecessors": list(seg.predecessors),
        }
        if seg.left_boundary is not None:
            record["left_boundary"] = seg.left_boundary.points.tolist()
        if seg.right_boundary is not None:
            record["right_boundary"] = seg.right_boundary.points.tolist()
        records.append(record)
    return records


__all__ = [
    "DEFAULT_HALF_WIDTH",
    "LaneGraph",
    "LaneGraphError",
    "LanePolygon",
    "LaneSegment",
    "build_lane_graph",
    "lane_polygon",
    "polygon_table",
    "segment_records",
]
