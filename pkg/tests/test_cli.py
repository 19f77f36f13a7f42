import json

import pytest

from wheelsim.cli import main


def run_cli(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestRun:
    def test_bundled_scenario_writes_artifacts(self, tmp_path, capsys):
        rc, out, err = run_cli(capsys, "run", "idle", "--seed", "3",
                               "--duration", "1", "--out", str(tmp_path))
        assert rc == 0 and err == ""
        log = tmp_path / "idle_seed3_events.jsonl"
        report = tmp_path / "idle_seed3_report.json"
        assert log.exists() and report.exists()
        assert "ticks" in out and "idle" in out
        doc = json.loads(report.read_text())
        assert doc["seed"] == 3
        assert doc["stats"]["ticks"] == 100

    def test_unknown_scenario_is_config_error(self, tmp_path, capsys):
        rc, _, err = run_cli(capsys, "run", "nope", "--out", str(tmp_path))
        assert rc == 1
        assert "config error" in err

    def test_bad_scenario_file_is_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"duration_s": -1}')
        rc, _, err = run_cli(capsys, "run", str(bad), "--out", str(tmp_path))
        assert rc == 1 and "duration_s" in err

    def test_file_alerts_written_under_out_dir(self, tmp_path, capsys):
        rc, _, _ = run_cli(capsys, "run", "fever_drive", "--duration", "20",
                           "--out", str(tmp_path))
        assert rc == 0
        alerts = sorted((tmp_path / "alerts").iterdir())
        assert [p.name for p in alerts] == ["alert_0001.txt"]


class TestTrials:
    def test_gesture_prints_table(self, capsys):
        rc, out, _ = run_cli(capsys, "trials", "gesture", "--n", "100")
        assert rc == 0
        assert "Forward" in out and "Success Rate" in out

    def test_report_flag_writes_json(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        rc, _, _ = run_cli(capsys, "trials", "obstacle", "--n", "50",
                           "--report", str(path))
        assert rc == 0
        assert json.loads(path.read_text())["experiment"] == "obstacle_trials"

    def test_check_passes_at_adequate_n(self, capsys):
        rc, out, err = run_cli(capsys, "trials", "obstacle", "--n", "2000",
                               "--seed", "0", "--check")
        assert rc == 0 and err == ""
        assert "all checks passed" in out

    def test_check_fails_loudly_at_tiny_n(self, capsys):
        rc, _, err = run_cli(capsys, "trials", "detection", "--n", "200",
                             "--seed", "0", "--check")
        assert rc == 3
        assert "CHECK FAILED" in err

    def test_unknown_experiment_rejected(self, capsys):
        with pytest.raises(SystemExit):
            main(["trials", "teleport"])


class TestReplay:
    def test_round_trip_summary(self, tmp_path, capsys):
        rc, _, _ = run_cli(capsys, "run", "idle", "--seed", "0",
                           "--duration", "2", "--out", str(tmp_path))
        assert rc == 0
        log = tmp_path / "idle_seed0_events.jsonl"
        rc, out, err = run_cli(capsys, "replay", str(log))
        assert rc == 0 and err == ""
        assert "command=" in out and "vitals=" in out
        assert "final chair:" in out

    def test_missing_file_is_runtime_failure(self, capsys):
        rc, _, err = run_cli(capsys, "replay", "/nonexistent/x.jsonl")
        assert rc == 2 and "runtime failure" in err

    def test_corrupt_line_is_runtime_failure(self, tmp_path, capsys):
        log = tmp_path / "corrupt.jsonl"
        log.write_text('{"t":0,"kind":"chair"}\nnot json\n')
        rc, _, err = run_cli(capsys, "replay", str(log))
        assert rc == 2 and "line 2" in err


class TestDeterminismThroughCli:
    def test_same_seed_same_bytes(self, tmp_path, capsys):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            rc, _, _ = run_cli(capsys, "run", "idle", "--seed", "42",
                               "--duration", "2", "--out", str(out))
            assert rc == 0
        log_a = (a / "idle_seed42_events.jsonl").read_bytes()
        log_b = (b / "idle_seed42_events.jsonl").read_bytes()
        assert log_a == log_b
