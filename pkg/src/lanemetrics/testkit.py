"""Synthetic scenario generation for tests and benchmarks.

Templates pin the metric semantics on small, fully controlled road
topologies: a ground truth riding a lane centerline plus prediction modes
placed by lateral/longitudinal offsets, optionally traveling against the
lane direction or dropped off-road entirely. No realism is intended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .geometry import Polyline
from .lane_graph import build_lane_graph, segment_records
from .metrics import EvalSequence, PredictionSet, Trajectory
from .scenario_io import PredictionFile, ScenarioFile, build_sequence

TEMPLATE_KINDS = (
    "straight",
    "parallel_opposing",
    "fork",
    "merge",
    "chain",
    "diamond",
    "roundabout",
)


@dataclass(frozen=True)
class ModePlacement:
    """Placement of one prediction mode relative to the ground truth route.

    ``lateral`` offsets the whole mode perpendicular to the route (left
    positive), ``longitudinal`` shifts its endpoint along the route, and
    ``opposing`` reverses the travel direction while keeping the endpoint.
    """

    lateral: float = 0.0
    longitudinal: float = 0.0
    opposing: bool = False
    probability: Optional[float] = None


@dataclass(frozen=True)
class TopologyTemplate:
    kind: str
    segment_length: float = 30.0
    lane_spacing: float = 3.5
    segment_count: int = 3
    speed: float = 10.0
    horizon: int = 61
    dt: float = 0.1
    start_offset: float = 2.0
    start_jitter: float = 0.0
    gt_lateral: float = 0.0
    agent_class: str = "vehicle"
    modes: tuple[ModePlacement, ...] = (ModePlacement(),)

    def __post_init__(self):
        if self.kind not in TEMPLATE_KINDS:
            raise ValueError(f"unknown template kind '{self.kind}'")
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        if not self.modes:
            raise ValueError("template needs at least one mode placement")


def _straight_records(span: float, length: float) -> tuple[list[dict], list[str]]:
    reach = max(length, span)
    return [{"id": "a", "centerline": [[0.0, 0.0], [reach, 0.0]], "successors": []}], ["a"]


def _parallel_opposing_records(span: float, length: float, spacing: float):
    reach = max(length, span)
    records = [
        {"id": "a", "centerline": [[0.0, 0.0], [reach, 0.0]], "successors": []},
        {"id": "b", "centerline": [[reach, spacing], [0.0, spacing]], "successors": []},
    ]
    return records, ["a"]


def _chain_records(span: float, length: float, count: int):
    count = max(count, 2)
    step = max(length, span / count)
    records = []
    for i in range(count):
        records.append(
            {
                "id": f"c{i}",
                "centerline": [[i * step, 0.0], [(i + 1) * step, 0.0]],
                "successors": [f"c{i + 1}"] if i + 1 < count else [],
            }
        )
    return records, [f"c{i}" for i in range(count)]


def _fork_records(span: float, length: float):
    m = max(length, span / 2)
    records = [
        {"id": "a", "centerline": [[0.0, 0.0], [m, 0.0]], "successors": ["b", "c"]},
        {"id": "b", "centerline": [[m, 0.0], [2 * m, 0.0]], "successors": []},
        {
            "id": "c",
            "centerline": [[m, 0.0], [1.45 * m, 0.06 * m], [1.9 * m, 0.22 * m]],
            "successors": [],
        },
    ]
    return records, ["a", "b"]


def _merge_records(span: float, length: float):
    m = max(length, span / 2)
    records = [
        {"id": "a", "centerline": [[0.0, 0.0], [m, 0.0]], "successors": ["b"]},
        {"id": "b", "centerline": [[m, 0.0], [2 * m, 0.0]], "successors": []},
        {
            "id": "c",
            "centerline": [[0.1 * m, 0.22 * m], [0.55 * m, 0.06 * m], [m, 0.0]],
            "successors": ["b"],
        },
    ]
    return records, ["a", "b"]


def _diamond_records(span: float, length: float):
    m = max(length, span / 3)
    records = [
        {"id": "a", "centerline": [[0.0, 0.0], [m, 0.0]], "successors": ["b", "c"]},
        {"id": "b", "centerline": [[m, 0.0], [2 * m, 0.0]], "successors": ["d"]},
        {
            "id": "c",
            "centerline": [[m, 0.0], [1.5 * m, 0.35 * m], [2 * m, 0.0]],
            "successors": ["d"],
        },
        {"id": "d", "centerline": [[2 * m, 0.0], [3 * m, 0.0]], "successors": []},
    ]
    return records, ["a", "b", "d"]


def _roundabout_records(span: float, length: float):
    circumference = max(4 * length, 1.15 * span, 2 * math.pi * 8.0)
    radius = circumference / (2 * math.pi)
    records = []
    ids = [f"r{k}" for k in range(4)]
    for k in range(4):
        angles = np.linspace(k * np.pi / 2, (k + 1) * np.pi / 2, 9)
        arc = np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])
        records.append(
            {"id": ids[k], "centerline": arc.tolist(), "successors": [ids[(k + 1) % 4]]}
        )
    return records, ids


def _template_records(template: TopologyTemplate, span: float):
    if template.kind == "straight":
        return _straight_records(span, template.segment_length)
    if template.kind == "parallel_opposing":
        return _parallel_opposing_records(span, template.segment_length, template.lane_spacing)
    if template.kind == "chain":
        return _chain_records(span, template.segment_length, template.segment_count)
    if template.kind == "fork":
        return _fork_records(span, template.segment_length)
    if template.kind == "merge":
        return _merge_records(span, template.segment_length)
    if template.kind == "diamond":
        return _diamond_records(span, template.segment_length)
    return _roundabout_records(span, template.segment_length)


def _route_polyline(records: list[dict], route_ids: list[str]) -> Polyline:
    by_id = {r["id"]: np.asarray(r["centerline"], dtype=np.float64) for r in records}
    parts = [by_id[route_ids[0]]]
    for segment_id in route_ids[1:]:
        parts.append(by_id[segment_id][1:])  # joints coincide exactly
    return Polyline(np.vstack(parts))


def _ride(route: Polyline, s_values: np.ndarray, lateral: float) -> np.ndarray:
    """Sample trajectory points along the route, offset perpendicular to
    the local heading."""
    cum = route.cumulative_arclength
    s = np.clip(s_values, 0.0, route.length)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(route) - 2)
    delta = route.points[idx + 1] - route.points[idx]
    t = (s - cum[idx]) / route.segment_lengths[idx]
    points = route.points[idx] + t[:, None] * delta
    if lateral != 0.0:
        tangents = delta / route.segment_lengths[idx][:, None]
        normals = np.column_stack([-tangents[:, 1], tangents[:, 0]])
        points = points + lateral * normals
    return points


def generate_scenario(
    template: TopologyTemplate, seed: int, sequence_id: Optional[str] = None
) -> tuple[ScenarioFile, PredictionFile]:
    """Deterministically realize a template as scenario + prediction data.

    The ground truth rides the template's route at constant speed;
    prediction modes are placed per their ModePlacement. The same
    (template, seed) pair always produces byte-identical files.
    """
    rng = np.random.default_rng(seed)
    jitter = float(rng.uniform(0.0, template.start_jitter)) if template.start_jitter > 0 else 0.0
    start = template.start_offset + jitter

    step = template.speed * template.dt
    travel = step * (template.horizon - 1)
    max_longitudinal = max([m.longitudinal for m in template.modes] + [0.0])
    span = start + travel + max_longitudinal + 2.0

    records, route_ids = _template_records(template, span)
    route = _route_polyline(records, route_ids)

    steps = np.arange(template.horizon, dtype=np.float64) * step
    gt_points = _ride(route, start + steps, template.gt_lateral)

    gt_end_s = start + travel
    placements = list(template.modes)
    if any(m.probability is not None for m in placements):
        if any(m.probability is None for m in placements):
            raise ValueError("probability must be set on all mode placements or none")
        placements.sort(key=lambda m: -m.probability)
        probabilities = [float(m.probability) for m in placements]
    else:
        probabilities = None

    modes = []
    for placement in placements:
        end_s = gt_end_s + placement.longitudinal
        s_values = end_s - steps[::-1]
        points = _ride(route, s_values, template.gt_lateral + placement.lateral)
        if placement.opposing:
            points = 2.0 * points[-1] - points
        modes.append(points)

    if sequence_id is None:
        sequence_id = f"{template.kind}-{seed:08d}"
    scenario = ScenarioFile(
        sequence_id=sequence_id,
        focal_agent_class=template.agent_class,
        dt=template.dt,
        ground_truth_future=gt_points,
        lane_graph=build_lane_graph(records),
    )
    predictions = PredictionFile(
        sequence_id=sequence_id, modes=modes, probabilities=probabilities
    )
    return scenario, predictions


def generate_sequence(
    template: TopologyTemplate, seed: int, sequence_id: Optional[str] = None
) -> EvalSequence:
    """In-memory variant of generate_scenario for direct evaluation."""
    scenario, predictions = generate_scenario(template, seed, sequence_id)
    return build_sequence(scenario, predictions)


def random_template(
    rng: np.random.Generator,
    num_modes: int = 2,
    horizon: int = 16,
    with_probabilities: Optional[bool] = None,
) -> TopologyTemplate:
    """A randomized template mixing hit, miss, wrong-lane and off-road
    mode placements."""
    kind = TEMPLATE_KINDS[int(rng.integers(len(TEMPLATE_KINDS)))]
    if with_probabilities is None:
        with_probabilities = bool(rng.integers(2))
    if with_probabilities:
        raw = rng.uniform(0.1, 1.0, size=num_modes)
        shares = 0.9 * raw / raw.sum()
        probabilities = np.sort(shares)[::-1]
    placements = []
    for i in range(num_modes):
        roll = rng.uniform()
        if roll < 0.15:
            lateral = float(rng.uniform(20.0, 40.0))  # off-road
        elif roll < 0.35:
            lateral = float(rng.uniform(1.0, 4.0))
        else:
            lateral = float(rng.uniform(0.0, 0.8))
        placements.append(
            ModePlacement(
                lateral=lateral,
                longitudinal=float(rng.uniform(-6.0, 6.0)),
                opposing=bool(rng.uniform() < 0.2),
                probability=float(probabilities[i]) if with_probabilities else None,
            )
        )
    return TopologyTemplate(
        kind=kind,
        segment_length=float(rng.uniform(8.0, 30.0)),
        lane_spacing=float(rng.uniform(3.0, 4.5)),
        segment_count=int(rng.integers(2, 5)),
        speed=float(rng.uniform(2.0, 14.0)),
        horizon=horizon,
        start_offset=2.0,
        start_jitter=3.0,
        gt_lateral=float(rng.uniform(20.0, 40.0)) if rng.uniform() < 0.05 else 0.0,
        modes=tuple(placements),
    )


def random_dataset(
    count: int, seed: int, num_modes: int = 2, horizon: int = 16
) -> list[EvalSequence]:
    """Deterministic randomized dataset of in-memory sequences."""
    rng = np.random.default_rng(seed)
    sequences = []
    for i in range(count):
        template = random_template(rng, num_modes=num_modes, horizon=horizon)
        sequences.append(
            generate_sequence(template, seed=int(rng.integers(2**31)), sequence_id=f"seq-{i:06d}")
        )
    return sequences


def rigid_transform(points: np.ndarray, angle: float, translation) -> np.ndarray:
    """Rotate by ``angle`` around the origin, then translate."""
    c, s = math.cos(angle), math.sin(angle)
    rotation = np.array([[c, -s], [s, c]])
    return np.asarray(points, dtype=np.float64) @ rotation.T + np.asarray(translation, dtype=np.float64)


def transform_sequence(seq: EvalSequence, angle: float, translation) -> EvalSequence:
    """Apply one rigid transform to every trajectory and the whole map."""
    records = segment_records(seq.graph)
    for record in records:
        for key in ("centerline", "left_boundary", "right_boundary"):
            if key in record:
                record[key] = rigid_transform(np.asarray(record[key]), angle, translation).tolist()
    modes = tuple(
        Trajectory(rigid_transform(m.points, angle, translation), m.dt)
        for m in seq.predictions.modes
    )
    return replace(
        seq,
        ground_truth=Trajectory(
            rigid_transform(seq.ground_truth.points, angle, translation), seq.ground_truth.dt
        ),
        predictions=PredictionSet(modes=modes, probabilities=seq.predictions.probabilities),
        graph=build_lane_graph(records),
    )


def golden_templates() -> dict[str, TopologyTemplate]:
    """The committed regression scenarios with hand-derived expectations.

    parallel_opposing_hit_mr_miss_lmr: the mode drifts onto the opposing
    lane (reversed travel, 1.5 m lateral error); Euclidean MR calls it a
    hit, the lane metric a miss.

    correct_lane_outside_mr_radius: 3 m longitudinal error on the correct
    lane at 15 m/s; Euclidean MR calls it a miss, but 3 m is inside the
    velocity-dependent lane threshold of 3.7 m.

    gt_offroad_fallback: unassignable ground truth; labels degrade to the
    Euclidean radius-s_hit rule (2.7 m at 10 m/s).

    prediction_offroad_miss: assignable ground truth, first mode far off
    any lane polygon, which is always a miss.
    """
    return {
        "parallel_opposing_hit_mr_miss_lmr": TopologyTemplate(
            kind="parallel_opposing",
            segment_length=40.0,
            lane_spacing=3.5,
            speed=5.0,
            horizon=31,
            modes=(ModePlacement(lateral=1.5, opposing=True),),
        ),
        "correct_lane_outside_mr_radius": TopologyTemplate(
            kind="straight",
            segment_length=120.0,
            speed=15.0,
            horizon=61,
            modes=(ModePlacement(longitudinal=3.0),),
        ),
        "gt_offroad_fallback": TopologyTemplate(
            kind="straight",
            segment_length=40.0,
            speed=10.0,
            horizon=31,
            gt_lateral=50.0,
            modes=(
                ModePlacement(longitudinal=-1.0, probability=0.6),
                ModePlacement(longitudinal=-5.0, probability=0.4),
            ),
        ),
        "prediction_offroad_miss": TopologyTemplate(
            kind="straight",
            segment_length=40.0,
            speed=10.0,
            horizon=31,
            modes=(
                ModePlacement(lateral=30.0, probability=0.6),
                ModePlacement(probability=0.4),
            ),
        ),
    }


GOLDEN_SEED = 7


def golden_expectations() -> dict[str, dict]:
    """Hand-derived per-sequence expectations for the golden scenarios."""
    return {
        "parallel_opposing_hit_mr_miss_lmr": {
            "lane_labels": [1],
            "used_fallback": False,
            "mr_label_at_1": 0,
            "mr_label_at_k": 0,
        },
        "correct_lane_outside_mr_radius": {
            "lane_labels": [0],
            "used_fallback": False,
            "mr_label_at_1": 1,
            "mr_label_at_k": 1,
        },
        "gt_offroad_fallback": {
            "lane_labels": [0, 1],
            "used_fallback": True,
            "mr_label_at_1": 0,
            "mr_label_at_k": 0,
        },
        "prediction_offroad_miss": {
            "lane_labels": [1, 0],
            "used_fallback": False,
            "mr_label_at_1": 1,
            "mr_label_at_k": 0,
        },
    }


__all__ = [
    "GOLDEN_SEED",
    "TEMPLATE_KINDS",
    "ModePlacement",
    "TopologyTemplate",
    "generate_scenario",
    "generate_sequence",
    "golden_expectations",
    "golden_templates",
    "random_dataset",
    "random_template",
    "rigid_transform",
    "transform_sequence",
]
