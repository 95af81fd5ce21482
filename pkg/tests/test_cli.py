import json

import pytest

from lanemetrics.cli import main, truncate_modes
from lanemetrics.metrics import PredictionSet, Trajectory
from lanemetrics.scenario_io import (
    PREDICTIONS_SUFFIX,
    SCENARIO_SUFFIX,
    parse_report,
    write_predictions,
    write_scenario,
)
from lanemetrics.testkit import ModePlacement, TopologyTemplate, generate_scenario

import numpy as np


def make_dataset(tmp_path, count=3, modes=2, broken=None):
    dataset_dir = tmp_path / "dataset"
    predictions_dir = tmp_path / "predictions"
    dataset_dir.mkdir(exist_ok=True)
    predictions_dir.mkdir(exist_ok=True)
    placements = tuple(
        ModePlacement(longitudinal=3.0 * i, probability=round(0.5 - 0.1 * i, 2))
        for i in range(modes)
    )
    for i in range(count):
        sequence_id = f"seq-{i:03d}"
        template = TopologyTemplate(
            kind="straight", segment_length=60.0, speed=8.0, horizon=21, modes=placements
        )
        scenario, predictions = generate_scenario(template, seed=i, sequence_id=sequence_id)
        write_scenario(scenario, dataset_dir / f"{sequence_id}{SCENARIO_SUFFIX}")
        write_predictions(predictions, predictions_dir / f"{sequence_id}{PREDICTIONS_SUFFIX}")
    if broken is not None:
        path = dataset_dir / f"seq-{broken:03d}{SCENARIO_SUFFIX}"
        data = json.loads(path.read_text())
        data["ground_truth_future"] = [[0.0, 0.0]]
        path.write_text(json.dumps(data))
    return dataset_dir, predictions_dir


def evaluate_args(dataset_dir, predictions_dir, *extra):
    return [
        "evaluate",
        "--dataset",
        str(dataset_dir),
        "--predictions",
        str(predictions_dir),
        "--k",
        "2",
        "--workers",
        "1",
        *extra,
    ]


class TestEvaluateCommand:
    def test_three_pairs_table_output(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path)
        code = main(evaluate_args(dataset_dir, predictions_dir, "--format", "table"))
        out = capsys.readouterr().out
        assert code == 0
        assert "sequences: 3" in out

    def test_missing_predictions_warns_and_shrinks(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path)
        (predictions_dir / f"seq-001{PREDICTIONS_SUFFIX}").unlink()
        code = main(evaluate_args(dataset_dir, predictions_dir, "--format", "json"))
        captured = capsys.readouterr()
        assert code == 0
        assert "without matching predictions" in captured.err
        assert parse_report(captured.out).sequence_count == 2

    def test_linear_scan_report_is_byte_identical(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path)
        assert main(evaluate_args(dataset_dir, predictions_dir, "--format", "json")) == 0
        default_out = capsys.readouterr().out
        assert (
            main(evaluate_args(dataset_dir, predictions_dir, "--format", "json", "--linear-scan"))
            == 0
        )
        linear_out = capsys.readouterr().out
        assert default_out == linear_out

    def test_no_pairs_fails(self, tmp_path, capsys):
        (tmp_path / "dataset").mkdir()
        (tmp_path / "predictions").mkdir()
        code = main(evaluate_args(tmp_path / "dataset", tmp_path / "predictions"))
        assert code != 0
        assert "no evaluable sequences" in capsys.readouterr().err

    def test_missing_directory_fails(self, tmp_path, capsys):
        code = main(evaluate_args(tmp_path / "nope", tmp_path / "nope2"))
        assert code != 0

    def test_invalid_sequence_aborts_by_default(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path, broken=1)
        code = main(evaluate_args(dataset_dir, predictions_dir))
        captured = capsys.readouterr()
        assert code != 0
        assert captured.out == ""

    def test_skip_invalid_downgrades_to_warning(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path, broken=1)
        code = main(
            evaluate_args(dataset_dir, predictions_dir, "--format", "json", "--skip-invalid")
        )
        captured = capsys.readouterr()
        assert code == 0
        assert "skipped" in captured.err
        assert parse_report(captured.out).sequence_count == 2

    def test_output_file_and_dump(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path)
        report_path = tmp_path / "report.json"
        dump_path = tmp_path / "per_sequence.jsonl"
        code = main(
            evaluate_args(
                dataset_dir,
                predictions_dir,
                "--format",
                "json",
                "--output",
                str(report_path),
                "--dump-per-sequence",
                str(dump_path),
            )
        )
        assert code == 0
        assert capsys.readouterr().out == ""  # report went to the file
        report = parse_report(report_path.read_text())
        assert report.sequence_count == 3
        rows = [json.loads(line) for line in dump_path.read_text().splitlines()]
        assert len(rows) == 3
        assert {row["sequence_id"] for row in rows} == {"seq-000", "seq-001", "seq-002"}

    def test_class_filter_excludes_everything(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path)
        code = main(evaluate_args(dataset_dir, predictions_dir, "--classes", "bus"))
        assert code != 0
        assert "no evaluable sequences" in capsys.readouterr().err

    def test_parallel_workers_match_serial(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path, count=8)
        assert main(evaluate_args(dataset_dir, predictions_dir, "--format", "json")) == 0
        serial = capsys.readouterr().out
        args = evaluate_args(dataset_dir, predictions_dir, "--format", "json")
        args[args.index("--workers") + 1] = "4"
        assert main(args) == 0
        assert capsys.readouterr().out == serial

    def test_k_larger_than_modes_aborts(self, tmp_path, capsys):
        dataset_dir, predictions_dir = make_dataset(tmp_path, modes=2)
        args = evaluate_args(dataset_dir, predictions_dir)
        args[args.index("--k") + 1] = "6"
        code = main(args)
        assert code != 0
        assert "need k=6" in capsys.readouterr().err


class TestTruncateModes:
    def preds(self, k=6):
        base = np.column_stack([np.arange(5.0), np.zeros(5)])
        modes = tuple(Trajectory(base + (0.0, float(i)), 0.1) for i in range(k))
        probabilities = tuple(round(0.21 - 0.02 * i, 3) for i in range(k))
        return PredictionSet(modes=modes, probabilities=probabilities)

    def test_top_one(self):
        kept = truncate_modes(self.preds(), 1)
        assert len(kept) == 1
        assert kept.probabilities == (0.21,)

    def test_all_six(self):
        preds = self.preds()
        assert truncate_modes(preds, 6) is preds

    def test_too_few_modes_names_sequence(self):
        with pytest.raises(ValueError, match="seq-42"):
            truncate_modes(self.preds(k=2), 6, sequence_id="seq-42")


class TestGenerateCommand:
    def test_generate_then_evaluate(self, tmp_path, capsys):
        dataset_dir = tmp_path / "dataset"
        predictions_dir = tmp_path / "predictions"
        code = main(
            [
                "generate",
                "--dataset",
                str(dataset_dir),
                "--predictions",
                str(predictions_dir),
                "--template",
                "mixed",
                "--count",
                "5",
                "--seed",
                "11",
                "--modes",
                "3",
                "--horizon",
                "13",
            ]
        )
        assert code == 0
        capsys.readouterr()
        assert len(list(dataset_dir.glob(f"*{SCENARIO_SUFFIX}"))) == 5
        args = evaluate_args(dataset_dir, predictions_dir, "--format", "json")
        args[args.index("--k") + 1] = "3"
        assert main(args) == 0
        assert parse_report(capsys.readouterr().out).sequence_count == 5

    def test_generate_golden_set(self, tmp_path, capsys):
        code = main(
            [
                "generate",
                "--dataset",
                str(tmp_path / "d"),
                "--predictions",
                str(tmp_path / "p"),
                "--template",
                "golden",
            ]
        )
        assert code == 0
        assert len(list((tmp_path / "d").glob(f"*{SCENARIO_SUFFIX}"))) == 4
