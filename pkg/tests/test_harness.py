import json
import math

import pytest

from wheelsim.commands import Command
from wheelsim.harness import (GESTURE_ORDER, GESTURE_SUCCESS_RULE,
                              OBSTACLE_SUCCESS_RULE, NoiseConfig,
                              calibrated_detector_params, find_obstacle_seed,
                              run_detection_eval, run_full_scenario,
                              run_gesture_trials, run_obstacle_trials,
                              run_safety_sweep, write_report)
from wheelsim.perception import DetectorParams, uniform_recall
from wheelsim.world import UltrasonicModel


def binomial_band(p, n, z=4.0):
    half = z * math.sqrt(p * (1.0 - p) / n)
    return p - half, p + half


class TestNoiseConfig:
    def test_rejects_stop_and_bad_probability(self):
        with pytest.raises(ValueError):
            NoiseConfig({Command.STOP: 0.1})
        with pytest.raises(ValueError):
            NoiseConfig({Command.FORWARD: 1.0001})
        with pytest.raises(ValueError):
            NoiseConfig(gyro_noise_sigma=-1.0)

    def test_rate_defaults_to_zero(self):
        noise = NoiseConfig({Command.FORWARD: 0.04})
        assert noise.rate_for(Command.FORWARD) == 0.04
        assert noise.rate_for(Command.LEFT) == 0.0


class TestGestureTrials:
    def test_noiseless_is_perfect(self):
        report = run_gesture_trials(50, seed=0)
        assert report.total_trials == 200
        assert report.total_successes == 200
        for row in report.rows:
            assert row.successes == row.trials == 50

    def test_row_order_is_frozen(self):
        report = run_gesture_trials(5, seed=0)
        assert tuple(r.gesture for r in report.rows) == GESTURE_ORDER

    def test_outcomes_reconcile_with_rows(self):
        noise = NoiseConfig({Command.FORWARD: 0.2, Command.LEFT: 0.4})
        report = run_gesture_trials(300, noise=noise, seed=3)
        for row in report.rows:
            outcomes = report.outcomes[row.gesture.value]
            assert len(outcomes) == row.trials
            assert sum(outcomes) == row.successes
            assert row.failures == row.trials - row.successes
        assert report.aggregate_rate == pytest.approx(
            report.total_successes / report.total_trials)

    def test_injection_rate_matches_binomial_band(self):
        noise = NoiseConfig({g: p for g, p in zip(
            GESTURE_ORDER, (0.04, 0.02, 0.07, 0.05))})
        report = run_gesture_trials(2000, noise=noise, seed=0)
        for row in report.rows:
            target = 1.0 - noise.rate_for(row.gesture)
            lo, hi = binomial_band(target, row.trials)
            assert lo <= row.success_rate <= hi, row

    def test_error_shrinks_with_n(self):
        """Monte Carlo convergence: the rate estimate tightens as n grows."""
        noise = NoiseConfig({Command.FORWARD: 0.10})
        errors = {}
        for n in (200, 20000):
            report = run_gesture_trials(n, noise=noise, seed=1)
            rate = report.rows[0].success_rate
            errors[n] = abs(rate - 0.90)
        # 10x the samples: allow the small run 3x the large run's bound.
        assert errors[20000] <= 4.0 * math.sqrt(0.09 / 20000)
        assert errors[200] <= 3 * 4.0 * math.sqrt(0.09 / 200)

    def test_seed_reproducibility(self):
        noise = NoiseConfig({Command.BACKWARD: 0.3})
        a = run_gesture_trials(500, noise=noise, seed=9)
        b = run_gesture_trials(500, noise=noise, seed=9)
        assert a.outcomes == b.outcomes
        c = run_gesture_trials(500, noise=noise, seed=10)
        assert a.outcomes != c.outcomes

    def test_report_serialization_carries_rule(self):
        report = run_gesture_trials(5, seed=0)
        doc = report.to_json()
        assert doc["success_rule"] == GESTURE_SUCCESS_RULE
        assert len(doc["rows"]) == 4
        text = report.render_text()
        assert GESTURE_SUCCESS_RULE in text
        assert "Forward" in text and "Total" in text


class TestObstacleTrials:
    def test_reliable_ranger_always_stops_in_band(self):
        report = run_obstacle_trials(100, seed=0)
        assert report.successes == 100
        for standoff in report.standoffs_cm:
            assert 0.0 < standoff <= 20.0

    def test_blind_trials_make_contact(self):
        model = UltrasonicModel(miss_probability=0.06)
        report = run_obstacle_trials(500, model=model, seed=0)
        assert report.failures > 0
        lo, hi = binomial_band(0.94, 500)
        assert lo <= report.success_rate <= hi
        failed_standoffs = [s for s, ok in
                            zip(report.standoffs_cm, report.outcomes) if not ok]
        assert all(s <= 0.0 for s in failed_standoffs)

    def test_certain_miss_never_stops(self):
        model = UltrasonicModel(miss_probability=1.0)
        report = run_obstacle_trials(20, model=model, seed=0)
        assert report.successes == 0

    def test_seed_reproducibility(self):
        model = UltrasonicModel(miss_probability=0.2)
        a = run_obstacle_trials(200, model=model, seed=4)
        b = run_obstacle_trials(200, model=model, seed=4)
        assert a.outcomes == b.outcomes and a.standoffs_cm == b.standoffs_cm

    def test_find_seed_recovers_known_fixture(self):
        model = UltrasonicModel(miss_probability=0.06)
        seed = find_obstacle_seed(47, n=50, model=model, limit=100)
        assert seed == 5
        assert run_obstacle_trials(50, model=model, seed=seed).successes == 47

    def test_find_seed_raises_when_unreachable(self):
        with pytest.raises(RuntimeError):
            find_obstacle_seed(1, n=50, model=UltrasonicModel(), limit=5)

    def test_report_serialization(self):
        report = run_obstacle_trials(30, seed=0)
        doc = report.to_json()
        assert doc["success_rule"] == OBSTACLE_SUCCESS_RULE
        assert doc["trials"] == 30 and doc["successes"] == 30
        assert 0.0 < doc["min_standoff_cm"] <= 20.0
        assert OBSTACLE_SUCCESS_RULE in report.render_text()


class TestDetectionEval:
    def test_perfect_detector_scores_one(self):
        params = DetectorParams(uniform_recall(1.0), 0.0, box_jitter=0.0)
        report = run_detection_eval(500, params=params, seed=0)
        m = report.metrics
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)
        assert m.fp == 0 and m.fn == 0

    def test_calibrated_detector_lands_near_targets(self):
        report = run_detection_eval(3000, seed=0)
        m = report.metrics
        assert abs(m.recall - 0.902) < 0.02
        assert abs(m.precision - 0.915) < 0.02

    def test_counts_reconcile(self):
        report = run_detection_eval(800, seed=1)
        m = report.metrics
        assert report.frames == 800
        assert m.tp + m.fn == 800    # one truth object per standard frame
        assert m.precision == pytest.approx(m.tp / (m.tp + m.fp))
        assert m.recall == pytest.approx(m.tp / (m.tp + m.fn))
        assert m.f1 == pytest.approx(
            2 * m.precision * m.recall / (m.precision + m.recall))

    def test_seed_reproducibility(self):
        a = run_detection_eval(300, seed=2)
        b = run_detection_eval(300, seed=2)
        assert a.metrics == b.metrics

    def test_calibration_helper_matches_eval_defaults(self):
        params = calibrated_detector_params()
        assert params.recall_per_class["Person"] == 0.902
        report = run_detection_eval(1000, params=params, seed=0)
        assert abs(report.metrics.precision - 0.915) < 0.04

    def test_report_serialization(self):
        report = run_detection_eval(100, seed=0)
        doc = report.to_json()
        assert doc["frames"] == 100
        assert set(doc) >= {"precision", "recall", "f1", "tp", "fp", "fn"}
        text = report.render_text()
        assert "Precision" in text and "F1" in text


class TestSafetySweep:
    def test_small_sweep_is_clean(self):
        report = run_safety_sweep(seeds=range(25), duration_s=5.0)
        assert report.scenarios == 25
        assert report.ticks == 25 * 50
        assert report.clean
        assert report.violations == ()
        assert report.override_ticks > 0   # at least one forced stop in 25 runs

    def test_render_and_json(self):
        report = run_safety_sweep(seeds=range(4), duration_s=2.0)
        doc = report.to_json()
        assert doc["scenarios"] == 4 and doc["violations"] == []
        assert "violations=0" in report.render_text()


class TestRunFullScenario:
    def test_writes_log_and_report(self, tmp_path):
        out = run_full_scenario("idle", seed=3, duration_s=1.0,
                                out_dir=tmp_path)
        log = tmp_path / "idle_seed3_events.jsonl"
        rep = tmp_path / "idle_seed3_report.json"
        assert log.exists() and rep.exists()
        doc = json.loads(rep.read_text())
        assert doc["seed"] == 3 and doc["scenario"] == "idle"
        assert out.stats["ticks"] == 100

    def test_write_report_helper(self, tmp_path):
        report = run_gesture_trials(5, seed=0)
        path = write_report(report, tmp_path / "g.json")
        assert json.loads(path.read_text())["experiment"] == "gesture_trials"
