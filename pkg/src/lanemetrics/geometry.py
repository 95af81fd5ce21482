"""Polyline and angle primitives: arc-length projection, point-in-polygon
containment, heading extraction and angle wrapping.

All functions are pure and operate on immutable inputs, so they are safe
for unrestricted parallel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Consecutive polyline points closer than this are considered duplicates.
DUPLICATE_TOLERANCE = 1e-9

# A query point within this distance of a polygon edge counts as on the
# boundary (and therefore inside).
ON_EDGE_TOLERANCE = 1e-9

# Default minimum displacement length used when extracting a heading from
# the tail of a trajectory.
DEFAULT_HEADING_EPSILON = 1e-3


@dataclass(frozen=True)
class Point2:
    """A finite 2D point in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


def as_point_array(points) -> np.ndarray:
    """Coerce a point sequence (Point2 objects, tuples, or an (N, 2) array)
    into a read-only float64 array of shape (N, 2)."""
    if isinstance(points, np.ndarray) and points.dtype == np.float64:
        arr = points
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"expected an (N, 2) point array, got shape {arr.shape}")
        return arr
    seq = [tuple(p) if isinstance(p, Point2) else p for p in points]
    arr = np.asarray(seq, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) point array, got shape {arr.shape}")
    return arr


def _as_xy(point) -> np.ndarray:
    if isinstance(point, Point2):
        return np.array([point.x, point.y], dtype=np.float64)
    arr = np.asarray(point, dtype=np.float64)
    if arr.shape != (2,):
        raise ValueError(f"expected a 2D point, got shape {arr.shape}")
    return arr


class Polyline:
    """An ordered 2D point sequence with cached cumulative arc-length.

    Construction rejects polylines with fewer than two points, non-finite
    coordinates, or consecutive duplicate points (distance below
    ``DUPLICATE_TOLERANCE``).
    """

    __slots__ = ("points", "segment_lengths", "cumulative_arclength")

    def __init__(self, points):
        pts = np.array(as_point_array(points), dtype=np.float64)
        if pts.shape[0] < 2:
            raise ValueError("polyline needs at least 2 points")
        if not np.isfinite(pts).all():
            raise ValueError("polyline contains non-finite coordinates")
        deltas = np.diff(pts, axis=0)
        seg = np.hypot(deltas[:, 0], deltas[:, 1])
        if (seg < DUPLICATE_TOLERANCE).any():
            i = int(np.argmax(seg < DUPLICATE_TOLERANCE))
            raise ValueError(f"consecutive duplicate points at index {i}")
        cum = np.empty(pts.shape[0], dtype=np.float64)
        cum[0] = 0.0
        np.cumsum(seg, out=cum[1:])
        pts.setflags(write=False)
        seg.setflags(write=False)
        cum.setflags(write=False)
        self.points = pts
        self.segment_lengths = seg
        self.cumulative_arclength = cum

    @property
    def length(self) -> float:
        return float(self.cumulative_arclength[-1])

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"Polyline({self.points.shape[0]} points, length={self.length:.3f})"


@dataclass(frozen=True)
class ArcProjection:
    """Result of projecting a point onto a polyline.

    ``s`` is the arc-length of the closest foot point, ``d`` the unsigned
    distance from the query to that foot point.
    """

    s: float
    d: float
    foot_point: Point2


def project_onto_polyline(query, line: Polyline) -> ArcProjection:
    """Project a point onto a polyline, minimizing distance globally.

    Returns the global minimum over all polyline segments; ties across
    segments are broken by the smaller arc-length ``s``.
    """
    q = _as_xy(query)
    pts = line.points
    a = pts[:-1]
    ab = pts[1:] - a
    len2 = np.einsum("ij,ij->i", ab, ab)
    t = np.einsum("ij,ij->i", q - a, ab) / len2
    np.clip(t, 0.0, 1.0, out=t)
    feet = a + t[:, None] * ab
    diff = feet - q
    dist2 = np.einsum("ij,ij->i", diff, diff)
    # argmin returns the first occurrence, which is the segment with the
    # smallest arc-length among ties.
    i = int(np.argmin(dist2))
    s = float(line.cumulative_arclength[i] + t[i] * line.segment_lengths[i])
    s = min(s, line.length)
    return ArcProjection(
        s=s,
        d=float(math.sqrt(dist2[i])),
        foot_point=Point2(float(feet[i, 0]), float(feet[i, 1])),
    )


def point_at_arclength(line: Polyline, s: float) -> np.ndarray:
    """Point on the polyline at arc-length ``s`` (clamped to [0, length])."""
    cum = line.cumulative_arclength
    s = min(max(s, 0.0), line.length)
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(line) - 2)
    t = (s - cum[i]) / line.segment_lengths[i]
    return line.points[i] + t * (line.points[i + 1] - line.points[i])


def point_in_polygon(query, ring) -> bool:
    """Even-odd containment test with an inclusive boundary.

    ``ring`` is an ordered vertex list; closure is implied. A point on an
    edge (within ``ON_EDGE_TOLERANCE``) counts as inside, so a point
    exactly on a shared lane edge belongs to both lanes. A degenerate ring
    (zero area) contains nothing.
    """
    q = _as_xy(query)
    verts = as_point_array(ring)
    if verts.shape[0] < 3:
        raise ValueError("polygon ring needs at least 3 vertices")
    x, y = q
    x1, y1 = verts[:, 0], verts[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)

    # Degenerate (zero-area) ring contains nothing.
    area2 = np.sum(x1 * y2 - x2 * y1)
    if area2 == 0.0:
        return False

    # Boundary check: squared distance from the query to every edge.
    ex, ey = x2 - x1, y2 - y1
    len2 = ex * ex + ey * ey
    t = np.where(len2 > 0.0, ((x - x1) * ex + (y - y1) * ey) / np.where(len2 > 0.0, len2, 1.0), 0.0)
    np.clip(t, 0.0, 1.0, out=t)
    dx, dy = x1 + t * ex - x, y1 + t * ey - y
    if (dx * dx + dy * dy).min() <= ON_EDGE_TOLERANCE * ON_EDGE_TOLERANCE:
        return True

    # Even-odd crossing count over edges straddling the horizontal through y.
    straddles = (y1 > y) != (y2 > y)
    if not straddles.any():
        return False
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x1 + (y - y1) * ex / ey
    crossings = int(np.count_nonzero(straddles & (x < x_cross)))
    return crossings % 2 == 1


def heading_at_end(points, epsilon: float = DEFAULT_HEADING_EPSILON):
    """Heading (atan2 convention) of a trajectory at its final point.

    Scans backward from the end for the last displacement longer than
    ``epsilon`` and returns its heading; returns None for a stationary
    trajectory with no such displacement.

    Accepts raw point sequences (duplicate points allowed, unlike
    ``Polyline``) because recorded trajectories may stutter at standstill.
    """
    pts = points.points if isinstance(points, Polyline) else as_point_array(points)
    for i in range(pts.shape[0] - 1, 0, -1):
        dx = pts[i, 0] - pts[i - 1, 0]
        dy = pts[i, 1] - pts[i - 1, 1]
        if math.hypot(dx, dy) > epsilon:
            return math.atan2(dy, dx)
    return None


def wrapped_angle_diff(a: float, b: float) -> float:
    """Absolute angle difference wrapped into [0, pi]."""
    return abs(math.atan2(math.sin(a - b), math.cos(a - b)))


def heading_on_polyline_at(line: Polyline, s: float) -> float:
    """Heading of the polyline segment containing arc-length ``s``.

    At interior vertices the following segment wins; at ``s == length``
    the final segment applies.
    """
    cum = line.cumulative_arclength
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(line) - 2)
    dx = line.points[i + 1, 0] - line.points[i, 0]
    dy = line.points[i + 1, 1] - line.points[i, 1]
    return math.atan2(dy, dx)
