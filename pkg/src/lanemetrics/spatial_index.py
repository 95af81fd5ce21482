"""R-tree over minimum bounding rectangles of lane centerlines.

The index only restricts the candidate set for lane assignment; a linear
scan over the same rectangles must produce identical results, and both
query paths are kept so they can be tested against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from shapely import STRtree
from shapely.geometry import LineString, Point, box

from .lane_graph import LaneGraph

# Candidate query inflation in meters: the buffered half lane width plus a
# safety margin, because a lane polygon can extend beyond its centerline's
# bounding rectangle by about a half width (more at mitered corners).
QUERY_INFLATION_SAFETY = 1.0
DEFAULT_QUERY_INFLATION = 3.0


class Mbr(NamedTuple):
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def contains(self, x: float, y: float, inflate: float = 0.0) -> bool:
        return (
            self.min_x - inflate <= x <= self.max_x + inflate
            and self.min_y - inflate <= y <= self.max_y + inflate
        )


def centerline_mbr(points: np.ndarray) -> Mbr:
    return Mbr(
        float(points[:, 0].min()),
        float(points[:, 1].min()),
        float(points[:, 0].max()),
        float(points[:, 1].max()),
    )


@dataclass
class CenterlineIndex:
    """One (Mbr, segment id) entry per lane segment.

    ``linear_scan=True`` bypasses the R-tree and scans all rectangles;
    results are identical either way.
    """

    segment_ids: list[str]
    mbrs: list[Mbr]
    linear_scan: bool = False
    _tree: STRtree | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.segment_ids)


def build_index(graph: LaneGraph, linear_scan: bool = False) -> CenterlineIndex:
    """Index every segment's centerline bounding rectangle."""
    segment_ids = []
    mbrs = []
    geoms = []
    for seg in graph:
        segment_ids.append(seg.id)
        mbrs.append(centerline_mbr(seg.centerline.points))
        if not linear_scan:
            geoms.append(LineString(seg.centerline.points))
    tree = None if linear_scan else STRtree(geoms)
    return CenterlineIndex(segment_ids=segment_ids, mbrs=mbrs, linear_scan=linear_scan, _tree=tree)


def query_candidates(index: CenterlineIndex, point, inflate: float = DEFAULT_QUERY_INFLATION) -> list[str]:
    """Segments whose Mbr, inflated by ``inflate`` per side, contains the point."""
    if inflate < 0:
        raise ValueError("inflate must be non-negative")
    px, py = point
    x, y = float(px), float(py)
    if index.linear_scan or index._tree is None:
        return [sid for sid, mbr in zip(index.segment_ids, index.mbrs) if mbr.contains(x, y, inflate)]
    region = Point(x, y) if inflate == 0.0 else box(x - inflate, y - inflate, x + inflate, y + inflate)
    hits = index._tree.query(region)
    return [index.segment_ids[i] for i in sorted(int(i) for i in hits)]


__all__ = [
    "DEFAULT_QUERY_INFLATION",
    "QUERY_INFLATION_SAFETY",
    "CenterlineIndex",
    "Mbr",
    "build_index",
    "centerline_mbr",
    "query_candidates",
]
