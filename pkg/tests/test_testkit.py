import json
from pathlib import Path

import numpy as np
import pytest

from lanemetrics.metrics import MetricConfig, evaluate_sequence
from lanemetrics.scenario_io import (
    PREDICTIONS_SUFFIX,
    SCENARIO_SUFFIX,
    build_sequence,
    load_predictions,
    load_scenario,
    write_predictions,
    write_scenario,
)
from lanemetrics.testkit import (
    GOLDEN_SEED,
    TEMPLATE_KINDS,
    ModePlacement,
    TopologyTemplate,
    generate_scenario,
    generate_sequence,
    golden_expectations,
    golden_templates,
    random_dataset,
    transform_sequence,
)

GOLDEN_DIR = Path(__file__).parent / "golden"
CFG = MetricConfig()


class TestDeterminism:
    @pytest.mark.parametrize("kind", TEMPLATE_KINDS)
    def test_identical_seed_gives_identical_files(self, kind, tmp_path):
        template = TopologyTemplate(kind=kind, horizon=13, start_jitter=2.0)
        for suffix in ("one", "two"):
            scenario, predictions = generate_scenario(template, seed=99, sequence_id="d")
            write_scenario(scenario, tmp_path / f"{suffix}{SCENARIO_SUFFIX}")
            write_predictions(predictions, tmp_path / f"{suffix}{PREDICTIONS_SUFFIX}")
        assert (tmp_path / f"one{SCENARIO_SUFFIX}").read_bytes() == (
            tmp_path / f"two{SCENARIO_SUFFIX}"
        ).read_bytes()
        assert (tmp_path / f"one{PREDICTIONS_SUFFIX}").read_bytes() == (
            tmp_path / f"two{PREDICTIONS_SUFFIX}"
        ).read_bytes()

    def test_different_seed_moves_jittered_start(self):
        template = TopologyTemplate(kind="straight", horizon=13, start_jitter=2.0)
        a, _ = generate_scenario(template, seed=1)
        b, _ = generate_scenario(template, seed=2)
        assert not np.array_equal(a.ground_truth_future, b.ground_truth_future)


class TestGeneratedScenarios:
    @pytest.mark.parametrize("kind", TEMPLATE_KINDS)
    def test_round_trip_preserves_evaluation(self, kind, tmp_path):
        template = TopologyTemplate(
            kind=kind,
            horizon=13,
            modes=(ModePlacement(probability=0.7), ModePlacement(lateral=2.5, probability=0.3)),
        )
        scenario, predictions = generate_scenario(template, seed=17, sequence_id="rt")
        direct = evaluate_sequence(build_sequence(scenario, predictions), CFG)

        write_scenario(scenario, tmp_path / f"rt{SCENARIO_SUFFIX}")
        write_predictions(predictions, tmp_path / f"rt{PREDICTIONS_SUFFIX}")
        reloaded = build_sequence(
            load_scenario(tmp_path / f"rt{SCENARIO_SUFFIX}"),
            load_predictions(tmp_path / f"rt{PREDICTIONS_SUFFIX}"),
        )
        assert evaluate_sequence(reloaded, CFG) == direct

    @pytest.mark.parametrize("kind", TEMPLATE_KINDS)
    def test_on_road_templates_avoid_fallback(self, kind):
        seq = generate_sequence(TopologyTemplate(kind=kind, horizon=13), seed=3)
        assert evaluate_sequence(seq, CFG).used_fallback is False

    def test_zero_offset_prediction_scores_perfect(self):
        seq = generate_sequence(TopologyTemplate(kind="straight", horizon=21), seed=8)
        result = evaluate_sequence(seq, CFG)
        assert result.lane_labels == (0,)
        assert result.min_fde_at_1 == pytest.approx(0.0, abs=1e-9)

    def test_random_dataset_is_deterministic(self):
        first = random_dataset(20, seed=321, num_modes=2)
        second = random_dataset(20, seed=321, num_modes=2)
        for lhs, rhs in zip(first, second):
            assert lhs.sequence_id == rhs.sequence_id
            assert np.array_equal(lhs.ground_truth.points, rhs.ground_truth.points)
            for a, b in zip(lhs.predictions.modes, rhs.predictions.modes):
                assert np.array_equal(a.points, b.points)


class TestTransformSequence:
    def test_transform_preserves_labels(self):
        seq = generate_sequence(
            TopologyTemplate(
                kind="fork",
                horizon=21,
                modes=(ModePlacement(longitudinal=4.0), ModePlacement(lateral=1.0)),
            ),
            seed=12,
        )
        base = evaluate_sequence(seq, CFG)
        moved = evaluate_sequence(transform_sequence(seq, 1.1, (50.0, -20.0)), CFG)
        assert moved.lane_labels == base.lane_labels
        assert moved.mr_label_at_1 == base.mr_label_at_1
        assert moved.min_fde_at_1 == pytest.approx(base.min_fde_at_1, abs=1e-9)


class TestGoldenScenarios:
    @pytest.mark.parametrize("name", sorted(golden_templates()))
    def test_committed_files_match_regeneration(self, name, tmp_path):
        template = golden_templates()[name]
        scenario, predictions = generate_scenario(template, GOLDEN_SEED, name)
        write_scenario(scenario, tmp_path / "regen.scenario.json")
        write_predictions(predictions, tmp_path / "regen.predictions.json")
        committed = GOLDEN_DIR / name
        assert (tmp_path / "regen.scenario.json").read_bytes() == (
            committed / f"{name}{SCENARIO_SUFFIX}"
        ).read_bytes()
        assert (tmp_path / "regen.predictions.json").read_bytes() == (
            committed / f"{name}{PREDICTIONS_SUFFIX}"
        ).read_bytes()

    @pytest.mark.parametrize("name", sorted(golden_templates()))
    def test_committed_files_evaluate_to_expected_labels(self, name):
        committed = GOLDEN_DIR / name
        seq = build_sequence(
            load_scenario(committed / f"{name}{SCENARIO_SUFFIX}"),
            load_predictions(committed / f"{name}{PREDICTIONS_SUFFIX}"),
        )
        result = evaluate_sequence(seq, CFG)
        expected = json.loads((committed / "expected.json").read_text())
        assert list(result.lane_labels) == expected["lane_labels"]
        assert result.used_fallback == expected["used_fallback"]
        assert result.mr_label_at_1 == expected["mr_label_at_1"]
        assert result.mr_label_at_k == expected["mr_label_at_k"]
        assert expected == {"sequence_id": name, **golden_expectations()[name]}


class TestTemplateValidation:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown template kind"):
            TopologyTemplate(kind="spiral")

    def test_needs_modes(self):
        with pytest.raises(ValueError, match="mode"):
            TopologyTemplate(kind="straight", modes=())

    def test_partial_probabilities_rejected(self):
        template = TopologyTemplate(
            kind="straight",
            modes=(ModePlacement(probability=0.5), ModePlacement()),
        )
        with pytest.raises(ValueError, match="all mode placements or none"):
            generate_scenario(template, seed=0)
