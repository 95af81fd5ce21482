"""Command-line entry point: dataset traversal, parallel evaluation and
report emission, plus a synthetic scenario generator subcommand.

Progress and warnings go to stderr; the report is the only thing written
to the output stream, so machine formats stay clean.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import multiprocessing
import os
import sys
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np

from .assignment import AssignmentConfig
from .lane_graph import LaneGraphError
from .metrics import (
    DEFAULT_AGENT_CLASSES,
    MetricConfig,
    PredictionSet,
    SequenceResult,
    aggregate_results,
    evaluate_sequence,
)
from .scenario_io import (
    PREDICTIONS_SUFFIX,
    REPORT_FORMATS,
    SCENARIO_SUFFIX,
    SchemaError,
    build_sequence,
    load_predictions,
    load_scenario,
    write_predictions,
    write_report,
    write_scenario,
)
from .testkit import (
    GOLDEN_SEED,
    TEMPLATE_KINDS,
    generate_scenario,
    golden_templates,
    random_template,
)


@dataclass
class RunConfig:
    """Everything the evaluate subcommand needs."""

    dataset_dir: Path
    predictions_dir: Path
    k: int = 6
    c_scale: float = 0.2
    c_const: float = 0.7
    c_dist: float = 5.0
    c_orient: float = float(np.pi)
    w: float = 0.5
    margin: float = 0.1
    mr_threshold: float = 2.0
    half_width: float = 2.0
    classes: frozenset[str] = DEFAULT_AGENT_CLASSES
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    output_path: Optional[Path] = None
    output_format: str = "table"
    linear_scan: bool = False
    skip_invalid: bool = False
    per_sequence_dump: Optional[Path] = None

    def metric_config(self) -> MetricConfig:
        return MetricConfig(
            c_scale=self.c_scale,
            c_const=self.c_const,
            euclidean_mr_threshold=self.mr_threshold,
            assignment=AssignmentConfig(
                c_dist=self.c_dist, c_orient=self.c_orient, w=self.w, margin=self.margin
            ),
            agent_class_filter=self.classes,
            half_width=self.half_width,
        )


def truncate_modes(preds: PredictionSet, k: int, sequence_id: str = "?") -> PredictionSet:
    """Keep the top-k modes by probability (modes are already sorted by
    descending probability at load time)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(preds) < k:
        raise ValueError(f"sequence '{sequence_id}' has only {len(preds)} modes, need k={k}")
    if len(preds) == k:
        return preds
    probabilities = preds.probabilities[:k] if preds.probabilities is not None else None
    return PredictionSet(modes=preds.modes[:k], probabilities=probabilities)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _evaluate_pair(task, cfg: MetricConfig, k: int, linear_scan: bool, skip_invalid: bool):
    """Worker: load one (scenario, prediction) pair and evaluate it.

    Returns ("ok", SequenceResult), ("filtered", class) or
    ("skipped", sequence_id, reason).
    """
    scenario_path, predictions_path, sequence_id = task
    try:
        scenario = load_scenario(scenario_path)
        predictions = load_predictions(predictions_path)
        seq = build_sequence(scenario, predictions)
        if seq.focal_agent_class not in cfg.agent_class_filter:
            return ("filtered", seq.focal_agent_class)
        seq = dataclasses.replace(
            seq, predictions=truncate_modes(seq.predictions, k, seq.sequence_id)
        )
        return ("ok", evaluate_sequence(seq, cfg, linear_scan))
    except (SchemaError, LaneGraphError, ValueError) as exc:
        if skip_invalid:
            return ("skipped", sequence_id, str(exc))
        raise


def _matched_pairs(config: RunConfig) -> list[tuple[Path, Path, str]]:
    scenario_ids = {
        p.name[: -len(SCENARIO_SUFFIX)]: p
        for p in sorted(config.dataset_dir.glob(f"*{SCENARIO_SUFFIX}"))
    }
    prediction_ids = {
        p.name[: -len(PREDICTIONS_SUFFIX)]: p
        for p in sorted(config.predictions_dir.glob(f"*{PREDICTIONS_SUFFIX}"))
    }
    matched = sorted(scenario_ids.keys() & prediction_ids.keys())
    missing_predictions = len(scenario_ids) - len(matched)
    missing_scenarios = len(prediction_ids) - len(matched)
    if missing_predictions:
        _warn(f"{missing_predictions} scenario file(s) without matching predictions")
    if missing_scenarios:
        _warn(f"{missing_scenarios} prediction file(s) without matching scenario")
    return [(scenario_ids[i], prediction_ids[i], i) for i in matched]


def run(config: RunConfig) -> int:
    """Evaluate all matched (scenario, prediction) pairs and emit a report."""
    for directory in (config.dataset_dir, config.predictions_dir):
        if not directory.is_dir():
            print(f"error: not a directory: {directory}", file=sys.stderr)
            return 1
    pairs = _matched_pairs(config)
    if not pairs:
        print("error: no evaluable sequences", file=sys.stderr)
        return 1

    cfg = config.metric_config()
    worker = partial(
        _evaluate_pair,
        cfg=cfg,
        k=config.k,
        linear_scan=config.linear_scan,
        skip_invalid=config.skip_invalid,
    )
    outcomes = []
    try:
        if config.workers > 1 and len(pairs) > 1:
            ctx = multiprocessing.get_context("fork")
            chunksize = max(1, len(pairs) // (config.workers * 8))
            with ctx.Pool(processes=config.workers) as pool:
                for i, outcome in enumerate(pool.imap(worker, pairs, chunksize=chunksize)):
                    outcomes.append(outcome)
                    if (i + 1) % 1000 == 0:
                        print(f"evaluated {i + 1}/{len(pairs)}", file=sys.stderr)
        else:
            for i, task in enumerate(pairs):
                outcomes.append(worker(task))
                if (i + 1) % 1000 == 0:
                    print(f"evaluated {i + 1}/{len(pairs)}", file=sys.stderr)
    except (SchemaError, LaneGraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    results: list[SequenceResult] = []
    filtered = 0
    skipped = 0
    for outcome in outcomes:
        if outcome[0] == "ok":
            results.append(outcome[1])
        elif outcome[0] == "filtered":
            filtered += 1
        else:
            skipped += 1
            _warn(f"skipped invalid sequence '{outcome[1]}': {outcome[2]}")
    if filtered:
        _warn(f"{filtered} sequence(s) excluded by agent class filter")
    if skipped:
        _warn(f"{skipped} invalid sequence(s) skipped")
    if not results:
        print("error: no evaluable sequences", file=sys.stderr)
        return 1

    report = aggregate_results(results, excluded_count=filtered)
    rendered = write_report(report, config.output_format)
    if config.output_path is None:
        sys.stdout.write(rendered)
    else:
        config.output_path.write_text(rendered, encoding="utf-8")

    if config.per_sequence_dump is not None:
        with open(config.per_sequence_dump, "w", encoding="utf-8") as handle:
            for r in results:
                handle.write(json.dumps(dataclasses.asdict(r)) + "\n")
    return 0


def _evaluate_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        dataset_dir=Path(args.dataset),
        predictions_dir=Path(args.predictions),
        k=args.k,
        c_scale=args.c_scale,
        c_const=args.c_const,
        c_dist=args.c_dist,
        c_orient=args.c_orient,
        w=args.w,
        margin=args.margin,
        mr_threshold=args.mr_threshold,
        half_width=args.half_width,
        classes=frozenset(c.strip() for c in args.classes.split(",") if c.strip()),
        workers=args.workers,
        output_path=Path(args.output) if args.output else None,
        output_format=args.format,
        linear_scan=args.linear_scan,
        skip_invalid=args.skip_invalid,
        per_sequence_dump=Path(args.dump_per_sequence) if args.dump_per_sequence else None,
    )


def _generate(args: argparse.Namespace) -> int:
    dataset_dir = Path(args.dataset)
    predictions_dir = Path(args.predictions)
    dataset_dir.mkdir(parents=True, exist_ok=True)
    predictions_dir.mkdir(parents=True, exist_ok=True)

    if args.template == "golden":
        items = [
            (template, GOLDEN_SEED, name) for name, template in sorted(golden_templates().items())
        ]
    else:
        rng = np.random.default_rng(args.seed)
        items = []
        for i in range(args.count):
            template = random_template(rng, num_modes=args.modes, horizon=args.horizon)
            if args.template != "mixed":
                template = dataclasses.replace(template, kind=args.template)
            items.append((template, int(rng.integers(2**31)), f"seq-{i:06d}"))

    for template, seed, sequence_id in items:
        scenario, predictions = generate_scenario(template, seed, sequence_id)
        write_scenario(scenario, dataset_dir / f"{sequence_id}{SCENARIO_SUFFIX}")
        write_predictions(predictions, predictions_dir / f"{sequence_id}{PREDICTIONS_SUFFIX}")
    print(f"generated {len(items)} scenario/prediction pairs", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lanemetrics",
        description="Evaluate multi-modal trajectory predictions with lane "
        "distance-based and Euclidean metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="evaluate a dataset of scenario/prediction pairs")
    ev.add_argument("--dataset", required=True, help="directory of *.scenario.json files")
    ev.add_argument("--predictions", required=True, help="directory of *.predictions.json files")
    ev.add_argument("--k", type=int, default=6, help="number of modes to evaluate")
    ev.add_argument("--c-scale", type=float, default=0.2, help="hit threshold scale [s]")
    ev.add_argument("--c-const", type=float, default=0.7, help="hit threshold constant [m]")
    ev.add_argument("--c-dist", type=float, default=5.0, help="distance confidence scale [m]")
    ev.add_argument("--c-orient", type=float, default=float(np.pi), help="orientation confidence scale [rad]")
    ev.add_argument("--w", type=float, default=0.5, help="distance weight in combined confidence")
    ev.add_argument("--margin", type=float, default=0.1, help="multi-assignment confidence margin")
    ev.add_argument("--mr-threshold", type=float, default=2.0, help="Euclidean miss rate radius [m]")
    ev.add_argument("--half-width", type=float, default=2.0, help="buffered lane half width [m]")
    ev.add_argument(
        "--classes",
        default=",".join(sorted(DEFAULT_AGENT_CLASSES)),
        help="comma-separated focal agent classes to evaluate",
    )
    ev.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ev.add_argument("--output", default=None, help="report path (default: stdout)")
    ev.add_argument("--format", choices=REPORT_FORMATS, default="table")
    ev.add_argument("--linear-scan", action="store_true", help="bypass the spatial index")
    ev.add_argument("--skip-invalid", action="store_true", help="skip invalid sequences instead of aborting")
    ev.add_argument("--dump-per-sequence", default=None, help="write per-sequence labels as JSON lines")

    gen = sub.add_parser("generate", help="generate synthetic scenario/prediction pairs")
    gen.add_argument("--dataset", required=True, help="output directory for scenario files")
    gen.add_argument("--predictions", required=True, help="output directory for prediction files")
    gen.add_argument(
        "--template",
        choices=TEMPLATE_KINDS + ("mixed", "golden"),
        default="mixed",
    )
    gen.add_argument("--count", type=int, default=10)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--modes", type=int, default=6)
    gen.add_argument("--horizon", type=int, default=61)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "evaluate":
        if args.k < 1:
            print("error: --k must be at least 1", file=sys.stderr)
            return 2
        if args.workers < 1:
            print("error: --workers must be at least 1", file=sys.stderr)
            return 2
        return run(_evaluate_args(args))
    return _generate(args)


if __name__ == "__main__":
    sys.exit(main())
