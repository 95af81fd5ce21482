"""Lane miss labels per sequence, lane miss rate accumulation over a
dataset, and the Euclidean comparison metrics (minADE, minFDE, MR).

A prediction mode is a hit (label 0) when the along-lane distance from
the ground-truth lane point to any of the mode's assigned lane points is
below the velocity-dependent threshold s_hit = c_scale * v + c_const.
Two special cases: an unassignable ground truth falls back to a Euclidean
radius-s_hit check, and an unassignable prediction is always a miss.

Dataset evaluation is parallelized on sequence level; the reduction is
ordered by input position, so reports are independent of worker count.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field, fields
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .assignment import (
    AssignmentConfig,
    get_lane_assignments,
    select_ground_truth_assignment,
    select_prediction_assignments,
)
from .lane_distance import LanePoint, within_lane_distance
from .lane_graph import DEFAULT_HALF_WIDTH, LaneGraph, polygon_table
from .spatial_index import build_index

DEFAULT_AGENT_CLASSES = frozenset({"vehicle", "motorcyclist", "bus"})


@dataclass(frozen=True)
class Trajectory:
    """Timestamped 2D point sequence sampled every ``dt`` seconds."""

    points: np.ndarray = field(repr=False)
    dt: float = 0.1

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError(f"trajectory points must be (T, 2), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("trajectory contains non-finite coordinates")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]


@dataclass(frozen=True)
class PredictionSet:
    """k predicted modes, ordered by descending confidence.

    Probabilities are optional; when present they must already match the
    mode order (loading re-sorts) and sum to at most 1 (small slack).
    """

    modes: tuple[Trajectory, ...]
    probabilities: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        if modes:
            horizon = len(modes[0])
            dt = modes[0].dt
            for i, mode in enumerate(modes):
                if len(mode) != horizon:
                    raise ValueError(f"mode {i} has {len(mode)} points, expected {horizon}")
                if mode.dt != dt:
                    raise ValueError(f"mode {i} has dt {mode.dt}, expected {dt}")
        if self.probabilities is not None:
            probs = tuple(float(p) for p in self.probabilities)
            object.__setattr__(self, "probabilities", probs)
            if len(probs) != len(modes):
                raise ValueError("probabilities and modes differ in length")
            if any(not 0.0 <= p <= 1.0 for p in probs):
                raise ValueError("probabilities must lie in [0, 1]")
            if sum(probs) > 1.0 + 1e-6:
                raise ValueError("probabilities sum to more than 1")

    def __len__(self) -> int:
        return len(self.modes)


@dataclass(frozen=True)
class MetricConfig:
    """All tunable constants of the evaluation."""

    c_scale: float = 0.2
    c_const: float = 0.7
    euclidean_mr_threshold: float = 2.0
    assignment: AssignmentConfig = field(default_factory=AssignmentConfig)
    agent_class_filter: frozenset[str] = DEFAULT_AGENT_CLASSES
    half_width: float = DEFAULT_HALF_WIDTH

    def __post_init__(self):
        if self.c_scale < 0:
            raise ValueError("c_scale must be non-negative")
        if self.c_const <= 0:
            raise ValueError("c_const must be positive")
        if self.euclidean_mr_threshold <= 0:
            raise ValueError("euclidean_mr_threshold must be positive")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        object.__setattr__(self, "agent_class_filter", frozenset(self.agent_class_filter))


@dataclass
class MissMatrix:
    """Per-sequence, per-mode miss labels (1 miss, 0 hit), modes ordered
    by descending confidence."""

    rows: list[list[int]]
    fallback_count: int = 0


@dataclass(frozen=True)
class MetricReport:
    lmr_at_1: float
    lmr_at_k: float
    mr_at_1: float
    mr_at_k: float
    min_ade_at_1: float
    min_fde_at_1: float
    min_ade_at_k: float
    min_fde_at_k: float
    sequence_count: int
    fallback_count: int
    excluded_count: int = 0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class EvalSequence:
    """One evaluable sequence: ground truth, predictions, and the map."""

    sequence_id: str
    focal_agent_class: str
    ground_truth: Trajectory
    predictions: PredictionSet
    graph: LaneGraph


@dataclass(frozen=True)
class SequenceResult:
    sequence_id: str
    lane_labels: tuple[int, ...]
    used_fallback: bool
    min_ade_at_1: float
    min_fde_at_1: float
    mr_label_at_1: int
    min_ade_at_k: float
    min_fde_at_k: float
    mr_label_at_k: int


def average_velocity(traj: Trajectory) -> float:
    """Mean speed over the trajectory: path length / elapsed time.

    Uses the traveled path length (sum of consecutive displacements), not
    the net displacement, so curved motion at constant speed yields that
    speed.
    """
    if len(traj) < 2:
        raise ValueError("average velocity needs at least 2 points")
    deltas = np.diff(traj.points, axis=0)
    path_length = float(np.hypot(deltas[:, 0], deltas[:, 1]).sum())
    return path_length / ((len(traj) - 1) * traj.dt)


def hit_threshold(v: float, cfg: MetricConfig) -> float:
    """Velocity-dependent lane hit threshold c_scale * v + c_const."""
    if v < 0:
        raise ValueError("velocity must be non-negative")
    return cfg.c_scale * v + cfg.c_const


def get_is_miss(
    gt: Trajectory,
    preds: PredictionSet,
    graph: LaneGraph,
    index,
    cfg: MetricConfig,
    polygons: Optional[dict[str, np.ndarray]] = None,
) -> tuple[list[int], bool]:
    """Per-mode miss labels (1 miss, 0 hit) plus the fallback flag.

    The fallback flag is set when the ground truth endpoint has no lane
    assignment; labels then come from a Euclidean radius-s_hit check.
    """
    if len(preds) == 0:
        raise ValueError("no prediction modes")
    s_hit = hit_threshold(average_velocity(gt), cfg)
    gt_assignments = get_lane_assignments(
        gt.points, graph, index, cfg.assignment, cfg.half_width, polygons
    )
    gt_best = select_ground_truth_assignment(gt_assignments)

    if gt_best is None:
        gt_end = gt.endpoint
        labels = []
        for mode in preds.modes:
            endpoint_error = math.hypot(
                mode.points[-1, 0] - gt_end[0], mode.points[-1, 1] - gt_end[1]
            )
            labels.append(0 if endpoint_error < s_hit else 1)
        return labels, True

    gt_point = LanePoint(gt_best.segment_id, gt_best.s)
    labels = []
    for mode in preds.modes:
        assignments = get_lane_assignments(
            mode.points, graph, index, cfg.assignment, cfg.half_width, polygons
        )
        selected = select_prediction_assignments(assignments, cfg.assignment)
        if not selected:
            labels.append(1)
            continue
        to_set = [LanePoint(a.segment_id, a.s) for a in selected]
        result = within_lane_distance(graph, gt_point, to_set, s_hit)
        labels.append(0 if result.reached else 1)
    return labels, False


def accumulate_lmr(matrix: MissMatrix) -> tuple[float, float]:
    """(LMR@1, LMR@k): top-mode miss ratio and all-modes-miss ratio."""
    if not matrix.rows:
        raise ValueError("empty miss matrix")
    k = len(matrix.rows[0])
    if k == 0 or any(len(row) != k for row in matrix.rows):
        raise ValueError("miss matrix rows must share one non-zero mode count")
    labels = np.asarray(matrix.rows, dtype=np.int64)
    lmr_at_1 = float(labels[:, 0].mean())
    lmr_at_k = float(labels.all(axis=1).mean())
    return lmr_at_1, lmr_at_k


class EuclideanMetrics(NamedTuple):
    """minADE/minFDE values and MR labels at @1 and @k for one sequence."""

    min_ade_at_1: float
    min_fde_at_1: float
    mr_label_at_1: int
    min_ade_at_k: float
    min_fde_at_k: float
    mr_label_at_k: int


def euclidean_metrics(gt: Trajectory, preds: PredictionSet, threshold: float) -> EuclideanMetrics:
    """Euclidean displacement metrics for one sequence.

    @1 uses the highest-confidence mode. @k takes the minimum final
    displacement over all modes and reports the average displacement of
    that same mode; the miss label at @k requires every mode to end more
    than ``threshold`` away.
    """
    if len(preds) == 0:
        raise ValueError("no prediction modes")
    stacked = np.stack([mode.points for mode in preds.modes])
    if stacked.shape[1] != len(gt):
        raise ValueError(
            f"prediction horizon {stacked.shape[1]} does not match ground truth {len(gt)}"
        )
    offsets = stacked - gt.points[None, :, :]
    dists = np.hypot(offsets[..., 0], offsets[..., 1])
    ades = dists.mean(axis=1)
    fdes = dists[:, -1]

    best = int(np.argmin(fdes))  # ties resolved by confidence order
    return EuclideanMetrics(
        min_ade_at_1=float(ades[0]),
        min_fde_at_1=float(fdes[0]),
        mr_label_at_1=int(fdes[0] > threshold),
        min_ade_at_k=float(ades[best]),
        min_fde_at_k=float(fdes[best]),
        mr_label_at_k=int((fdes > threshold).all()),
    )


def evaluate_sequence(seq: EvalSequence, cfg: MetricConfig, linear_scan: bool = False) -> SequenceResult:
    """Evaluate one sequence against its own lane graph."""
    index = build_index(seq.graph, linear_scan=linear_scan)
    polygons = polygon_table(seq.graph, cfg.half_width)
    labels, used_fallback = get_is_miss(
        seq.ground_truth, seq.predictions, seq.graph, index, cfg, polygons
    )
    euclid = euclidean_metrics(seq.ground_truth, seq.predictions, cfg.euclidean_mr_threshold)
    return SequenceResult(
        sequence_id=seq.sequence_id,
        lane_labels=tuple(labels),
        used_fallback=used_fallback,
        min_ade_at_1=euclid.min_ade_at_1,
        min_fde_at_1=euclid.min_fde_at_1,
        mr_label_at_1=euclid.mr_label_at_1,
        min_ade_at_k=euclid.min_ade_at_k,
        min_fde_at_k=euclid.min_fde_at_k,
        mr_label_at_k=euclid.mr_label_at_k,
    )


def aggregate_results(results: Sequence[SequenceResult], excluded_count: int = 0) -> MetricReport:
    """Reduce per-sequence results into a MetricReport.

    Order-insensitive in content (counts and fixed-order means), but the
    caller passes results in input order so float reductions are
    reproducible bit for bit.
    """
    if not results:
        raise ValueError("no sequence results to aggregate")
    matrix = MissMatrix(
        rows=[list(r.lane_labels) for r in results],
        fallback_count=sum(r.used_fallback for r in results),
    )
    lmr_at_1, lmr_at_k = accumulate_lmr(matrix)

    def mean_of(name: str) -> float:
        return float(np.array([getattr(r, name) for r in results], dtype=np.float64).mean())

    return MetricReport(
        lmr_at_1=lmr_at_1,
        lmr_at_k=lmr_at_k,
        mr_at_1=mean_of("mr_label_at_1"),
        mr_at_k=mean_of("mr_label_at_k"),
        min_ade_at_1=mean_of("min_ade_at_1"),
        min_fde_at_1=mean_of("min_fde_at_1"),
        min_ade_at_k=mean_of("min_ade_at_k"),
        min_fde_at_k=mean_of("min_fde_at_k"),
        sequence_count=len(results),
        fallback_count=matrix.fallback_count,
        excluded_count=excluded_count,
    )


# Worker state for parallel evaluation, shared via fork.
_WORKER_STATE: dict = {}


def _evaluate_index(i: int) -> SequenceResult:
    state = _WORKER_STATE
    return evaluate_sequence(state["sequences"][i], state["cfg"], state["linear_scan"])


def evaluate_dataset(
    dataset: Iterable[EvalSequence],
    cfg: MetricConfig,
    workers: int = 1,
    linear_scan: bool = False,
) -> MetricReport:
    """Evaluate all sequences whose focal agent class passes the filter.

    The report is deterministic and independent of ``workers``: results
    are collected in input order before aggregation.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    sequences = []
    excluded = 0
    for seq in dataset:
        if seq.focal_agent_class in cfg.agent_class_filter:
            sequences.append(seq)
        else:
            excluded += 1
    if not sequences:
        raise ValueError("no evaluable sequences after class filtering")

    if workers == 1 or len(sequences) < 2:
        results = [evaluate_sequence(seq, cfg, linear_scan) for seq in sequences]
    else:
        _WORKER_STATE.update(sequences=sequences, cfg=cfg, linear_scan=linear_scan)
        try:
            ctx = multiprocessing.get_context("fork")
            chunksize = max(1, len(sequences) // (workers * 8))
            with ctx.Pool(processes=workers) as pool:
                results = pool.map(_evaluate_index, range(len(sequences)), chunksize=chunksize)
        finally:
            _WORKER_STATE.clear()
    return aggregate_results(results, excluded_count=excluded)


__all__ = [
    "DEFAULT_AGENT_CLASSES",
    "EuclideanMetrics",
    "EvalSequence",
    "MetricConfig",
    "MetricReport",
    "MissMatrix",
    "PredictionSet",
    "SequenceResult",
    "Trajectory",
    "accumulate_lmr",
    "aggregate_results",
    "average_velocity",
    "euclidean_metrics",
    "evaluate_dataset",
    "evaluate_sequence",
    "get_is_miss",
    "hit_threshold",
]
