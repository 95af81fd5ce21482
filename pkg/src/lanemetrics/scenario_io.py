"""Canonical scenario and prediction file formats, plus report output.

One scenario (ground truth + lane graph) per `<sequence_id>.scenario.json`
file; predictions mirror the naming as `<sequence_id>.predictions.json`.
The schemas are documented in docs/format.md and versioned through the
``format_version`` field. External dataset formats are expected to be
converted into these files by standalone scripts; the core stays free of
dataset-specific parsing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .lane_graph import LaneGraph, LaneGraphError, build_lane_graph, segment_records
from .metrics import EvalSequence, MetricReport, PredictionSet, Trajectory

FORMAT_VERSION = "1"
SCENARIO_SUFFIX = ".scenario.json"
PREDICTIONS_SUFFIX = ".predictions.json"
REPORT_FORMATS = ("json", "csv", "table")


class SchemaError(ValueError):
    """Validation failure, carrying the offending field path."""


@dataclass
class ScenarioFile:
    """One dataset element: id, class, sampling period, trajectories, map."""

    sequence_id: str
    focal_agent_class: str
    dt: float
    ground_truth_future: np.ndarray
    lane_graph: LaneGraph
    observed_history: Optional[np.ndarray] = None


@dataclass
class PredictionFile:
    """Predicted modes for one sequence, ordered by descending probability."""

    sequence_id: str
    modes: list[np.ndarray]
    probabilities: Optional[list[float]] = None


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise SchemaError(f"{path}{key}: missing required field")
    return mapping[key]


def _string(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{path}: expected a non-empty string")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}: expected a number")
    return float(value)


def _point_array(raw, path: str, minimum: int) -> np.ndarray:
    if not isinstance(raw, list):
        raise SchemaError(f"{path}: expected a list of [x, y] points")
    if len(raw) < minimum:
        raise SchemaError(f"{path}: needs at least {minimum} points, got {len(raw)}")
    points = np.empty((len(raw), 2), dtype=np.float64)
    for i, entry in enumerate(raw):
        if not isinstance(entry, list) or len(entry) != 2:
            raise SchemaError(f"{path}[{i}]: expected an [x, y] pair")
        x = _number(entry[0], f"{path}[{i}].x")
        y = _number(entry[1], f"{path}[{i}].y")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise SchemaError(f"{path}[{i}]: non-finite coordinate at point index {i}")
        points[i, 0] = x
        points[i, 1] = y
    return points


def _id_list(raw, path: str) -> list[str]:
    if raw is None:
        return []
    if not isinstance(raw, list) or any(not isinstance(v, str) for v in raw):
        raise SchemaError(f"{path}: expected a list of segment id strings")
    return list(raw)


def _check_version(data: dict, path: str) -> None:
    version = _string(_require(data, "format_version", ""), f"{path}format_version")
    if version != FORMAT_VERSION:
        raise SchemaError(f"{path}format_version: unsupported version '{version}'")


def _load_json(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return data


def load_scenario(path) -> ScenarioFile:
    """Load and validate one scenario file."""
    data = _load_json(path)
    _check_version(data, "")
    sequence_id = _string(_require(data, "sequence_id", ""), "sequence_id")
    focal_agent_class = _string(_require(data, "focal_agent_class", ""), "focal_agent_class")
    dt = _number(_require(data, "dt", ""), "dt")
    if dt <= 0:
        raise SchemaError("dt: must be positive")
    future = _point_array(
        _require(data, "ground_truth_future", ""), "ground_truth_future", minimum=2
    )
    history = None
    if data.get("observed_history") is not None:
        history = _point_array(data["observed_history"], "observed_history", minimum=1)

    graph_data = _require(data, "lane_graph", "")
    if not isinstance(graph_data, dict):
        raise SchemaError("lane_graph: expected an object")
    raw_segments = _require(graph_data, "segments", "lane_graph.")
    if not isinstance(raw_segments, list):
        raise SchemaError("lane_graph.segments: expected a list")
    records = []
    for i, raw in enumerate(raw_segments):
        seg_path = f"lane_graph.segments[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{seg_path}: expected an object")
        record = {
            "id": _string(_require(raw, "id", f"{seg_path}."), f"{seg_path}.id"),
            "centerline": _point_array(
                _require(raw, "centerline", f"{seg_path}."), f"{seg_path}.centerline", minimum=2
            ),
            "successors": _id_list(raw.get("successors"), f"{seg_path}.successors"),
            "predecessors": _id_list(raw.get("predecessors"), f"{seg_path}.predecessors"),
        }
        for side in ("left_boundary", "right_boundary"):
            if raw.get(side) is not None:
                record[side] = _point_array(raw[side], f"{seg_path}.{side}", minimum=2)
        records.append(record)
    try:
        graph = build_lane_graph(records)
    except LaneGraphError as exc:
        raise SchemaError(f"lane_graph: {exc}") from exc

    return ScenarioFile(
        sequence_id=sequence_id,
        focal_agent_class=focal_agent_class,
        dt=dt,
        ground_truth_future=future,
        lane_graph=graph,
        observed_history=history,
    )


def load_predictions(path) -> PredictionFile:
    """Load one prediction file; modes are re-sorted by descending
    probability when probabilities are present, otherwise input order is
    kept as the confidence order."""
    data = _load_json(path)
    _check_version(data, "")
    sequence_id = _string(_require(data, "sequence_id", ""), "sequence_id")
    raw_modes = _require(data, "modes", "")
    if not isinstance(raw_modes, list) or not raw_modes:
        raise SchemaError("modes: expected a non-empty list")

    modes = []
    probabilities = []
    with_probability = 0
    for i, raw in enumerate(raw_modes):
        mode_path = f"modes[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{mode_path}: expected an object")
        points = _point_array(_require(raw, "points", f"{mode_path}."), f"{mode_path}.points", minimum=1)
        if modes and points.shape[0] != modes[0].shape[0]:
            raise SchemaError(
                f"{mode_path}.points: {points.shape[0]} points, expected {modes[0].shape[0]}"
            )
        modes.append(points)
        if raw.get("probability") is not None:
            probability = _number(raw["probability"], f"{mode_path}.probability")
            if not 0.0 <= probability <= 1.0:
                raise SchemaError(f"{mode_path}.probability: must lie in [0, 1]")
            probabilities.append(probability)
            with_probability += 1

    if with_probability and with_probability != len(modes):
        raise SchemaError("modes: probability must be set on all modes or none")
    if not with_probability:
        return PredictionFile(sequence_id=sequence_id, modes=modes)

    if sum(probabilities) > 1.0 + 1e-6:
        raise SchemaError("modes: probabilities sum to more than 1")
    order = sorted(range(len(modes)), key=lambda i: -probabilities[i])
    return PredictionFile(
        sequence_id=sequence_id,
        modes=[modes[i] for i in order],
        probabilities=[probabilities[i] for i in order],
    )


def write_scenario(scenario: ScenarioFile, path) -> None:
    data = {
        "format_version": FORMAT_VERSION,
        "sequence_id": scenario.sequence_id,
        "focal_agent_class": scenario.focal_agent_class,
        "dt": scenario.dt,
        "ground_truth_future": np.asarray(scenario.ground_truth_future).tolist(),
    }
    if scenario.observed_history is not None:
        data["observed_history"] = np.asarray(scenario.observed_history).tolist()
    data["lane_graph"] = {"segments": segment_records(scenario.lane_graph)}
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def write_predictions(predictions: PredictionFile, path) -> None:
    modes = []
    for i, points in enumerate(predictions.modes):
        mode: dict = {"points": np.asarray(points).tolist()}
        if predictions.probabilities is not None:
            mode["probability"] = predictions.probabilities[i]
        modes.append(mode)
    data = {
        "format_version": FORMAT_VERSION,
        "sequence_id": predictions.sequence_id,
        "modes": modes,
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def build_sequence(scenario: ScenarioFile, predictions: PredictionFile) -> EvalSequence:
    """Pair a scenario with its predictions into an evaluable sequence."""
    if predictions.sequence_id != scenario.sequence_id:
        raise SchemaError(
            f"sequence_id: predictions are for '{predictions.sequence_id}', "
            f"scenario is '{scenario.sequence_id}'"
        )
    horizon = scenario.ground_truth_future.shape[0]
    for i, points in enumerate(predictions.modes):
        if points.shape[0] != horizon:
            raise SchemaError(
                f"modes[{i}].points: horizon {points.shape[0]} does not match "
                f"ground truth horizon {horizon}"
            )
    modes = tuple(Trajectory(points, scenario.dt) for points in predictions.modes)
    probabilities = (
        tuple(predictions.probabilities) if predictions.probabilities is not None else None
    )
    return EvalSequence(
        sequence_id=scenario.sequence_id,
        focal_agent_class=scenario.focal_agent_class,
        ground_truth=Trajectory(scenario.ground_truth_future, scenario.dt),
        predictions=PredictionSet(modes=modes, probabilities=probabilities),
        graph=scenario.lane_graph,
    )


def write_report(report: MetricReport, format: str = "json") -> str:
    """Serialize a report: 'json' and 'csv' keep ratios as fractions with
    a stable field order, 'table' renders percentages with 2 decimals."""
    if format == "json":
        return json.dumps(report.as_dict(), indent=2) + "\n"
    if format == "csv":
        data = report.as_dict()
        header = ",".join(data)
        row = ",".join(repr(v) if isinstance(v, float) else str(v) for v in data.values())
        return f"{header}\n{row}\n"
    if format == "table":
        lines = [
            f"{'':<4}{'minADE':>10}{'minFDE':>10}{'MR (%)':>10}{'LMR (%)':>10}",
            f"{'@1':<4}{report.min_ade_at_1:>10.4f}{report.min_fde_at_1:>10.4f}"
            f"{100 * report.mr_at_1:>10.2f}{100 * report.lmr_at_1:>10.2f}",
            f"{'@k':<4}{report.min_ade_at_k:>10.4f}{report.min_fde_at_k:>10.4f}"
            f"{100 * report.mr_at_k:>10.2f}{100 * report.lmr_at_k:>10.2f}",
            f"sequences: {report.sequence_count}  fallbacks: {report.fallback_count}"
            f"  excluded: {report.excluded_count}",
        ]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format '{format}' (expected one of {REPORT_FORMATS})")


def parse_report(text: str) -> MetricReport:
    """Inverse of write_report for the json format."""
    data = json.loads(text)
    return MetricReport(**data)


__all__ = [
    "FORMAT_VERSION",
    "PREDICTIONS_SUFFIX",
    "REPORT_FORMATS",
    "SCENARIO_SUFFIX",
    "PredictionFile",
    "ScenarioFile",
    "SchemaError",
    "build_sequence",
    "load_predictions",
    "load_scenario",
    "parse_report",
    "write_predictions",
    "write_report",
    "write_scenario",
]
