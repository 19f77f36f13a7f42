import json

import pytest

from wheelsim.commands import Command
from wheelsim.scenario import load_scenario, parse_scenario
from wheelsim.sim import (Simulation, config_hash, events_to_jsonl,
                          run_simulation)


def idle(duration=2.0, **overrides):
    data = {"duration_s": duration,
            "profile": {"heart_rate_bpm": 72.0, "spo2_target": 98.0},
            "perception": {"enabled": False}}
    data.update(overrides)
    return parse_scenario(data, name="idle_local")


class TestConfigHash:
    def test_stable_and_hex(self):
        sc = idle()
        h1 = config_hash(sc, 0, 2.0)
        h2 = config_hash(sc, 0, 2.0)
        assert h1 == h2
        assert len(h1) == 16
        int(h1, 16)   # parses as hex

    def test_sensitive_to_seed_duration_and_content(self):
        sc = idle()
        base = config_hash(sc, 0, 2.0)
        assert config_hash(sc, 1, 2.0) != base
        assert config_hash(sc, 0, 3.0) != base
        assert config_hash(idle(profile={"heart_rate_bpm": 80.0}), 0, 2.0) != base


class TestEventStream:
    def test_boot_and_first_tick_order(self):
        result = run_simulation(idle(), duration_s=1.0)
        kinds = [e["kind"] for e in result.events[:8]]
        assert kinds == ["lifecycle"] * 4 + ["command", "upload", "vitals",
                                             "chair"]
        phases = [e["phase"] for e in result.events[:4]]
        assert phases == ["base_server_listening", "glove_calibrated",
                          "controller_connected", "run_started"]
        started = result.events[3]
        assert started["scenario"] == "idle_local"
        assert started["config_hash"] == result.config_hash

    def test_run_complete_is_last_and_carries_stats(self):
        result = run_simulation(idle(), duration_s=1.0)
        last = result.events[-1]
        assert last["kind"] == "lifecycle" and last["phase"] == "run_complete"
        for key, value in result.stats.items():
            assert last[key] == value

    def test_timestamps_non_decreasing(self):
        result = run_simulation(idle(), duration_s=1.0)
        ts = [e["t"] for e in result.events]
        assert all(a <= b for a, b in zip(ts, ts[1:]))

    def test_jsonl_is_compact_and_parseable(self):
        result = run_simulation(idle(), duration_s=0.5)
        text = result.events_jsonl()
        lines = text.splitlines()
        assert len(lines) == len(result.events)
        for line in lines:
            assert ": " not in line and ", " not in line
            json.loads(line)

    def test_cadence_counts(self):
        result = run_simulation(idle(), duration_s=2.0)
        by_kind = {}
        for e in result.events:
            by_kind[e["kind"]] = by_kind.get(e["kind"], 0) + 1
        assert result.stats["ticks"] == 200
        assert by_kind["command"] == 20       # 0.1 s control cadence
        assert by_kind["chair"] == 20         # 0.1 s base cadence
        assert by_kind["vitals"] == 200       # every monitor tick
        assert by_kind["upload"] == 1         # 10 s period: t=0 only
        assert "detection" not in by_kind     # perception disabled

    def test_detection_cadence_when_enabled(self):
        sc = idle(perception={"enabled": True, "cadence_s": 0.2})
        result = run_simulation(sc, duration_s=1.0)
        detections = [e for e in result.events if e["kind"] == "detection"]
        assert len(detections) == 5
        assert [d["frame_id"] for d in detections] == list(range(5))


class TestDeterminism:
    def test_same_seed_byte_identical(self):
        a = run_simulation(idle(), seed=7, duration_s=2.0)
        b = run_simulation(idle(), seed=7, duration_s=2.0)
        assert a.events_jsonl() == b.events_jsonl()

    def test_different_seed_diverges_with_noise(self):
        sc = idle(ultrasonic={"noise_sigma_cm": 2.0},
                  obstacles=[{"type": "circle", "id": "c",
                              "center": [1.0, 0.0], "radius": 0.3}])
        a = run_simulation(sc, seed=1, duration_s=1.0)
        b = run_simulation(sc, seed=2, duration_s=1.0)
        assert a.events_jsonl() != b.events_jsonl()

    def test_scenario_seed_used_when_not_overridden(self):
        result = run_simulation(idle(seed=5), duration_s=0.5)
        assert result.seed == 5


class TestInjection:
    def test_dashboard_command_steers_until_glove_speaks(self):
        # Slow the glove to one send per second so the injected command
        # survives a base tick.
        sc = idle(controller={"cadence_s": 1.0})
        sim = Simulation(sc)
        sim.boot()
        sim.begin_run(2.0)
        for _ in range(5):
            sim.step()
        sim.inject_command(Command.FORWARD)
        for _ in range(10):
            sim.step()
        status = sim.status()
        assert status["chair"]["motor"] == "Forward"
        # Next glove send (t=1.0) rests the chair again.
        for _ in range(90):
            sim.step()
        assert sim.status()["chair"]["motor"] == "Stop"
        sources = [e["source"] for e in sim.events if e["kind"] == "command"]
        assert "dashboard" in sources

    def test_injected_event_carries_source_and_symbol(self):
        sim = Simulation(idle())
        sim.boot()
        sim.inject_command(Command.LEFT, source="remote")
        e = sim.events[-1]
        assert e["kind"] == "command"
        assert e["source"] == "remote" and e["command"] == "L"


@pytest.fixture(scope="module")
def fever_slice(tmp_path_factory):
    alert_dir = tmp_path_factory.mktemp("alerts")
    sc = load_scenario("fever_drive")
    sim = Simulation(sc, alert_dir=alert_dir)
    sim.boot()
    for _ in range(sim.begin_run(20.0)):
        sim.step()
    return sim.finish_run(), alert_dir


class TestFeverDriveSlice:
    """First 20 s of the bundled fever scenario: cloud cadence, alert
    latching, and the safety override all come out in the log."""

    def test_uploads_on_period(self, fever_slice):
        res, _ = fever_slice
        uploads = [e for e in res.events if e["kind"] == "upload"]
        assert [u["t"] for u in uploads] == [0.0, 10.0]
        assert [u["entry_id"] for u in uploads] == [1, 2]

    def test_single_alert_with_email_file(self, fever_slice):
        res, alert_dir = fever_slice
        alerts = [e for e in res.events if e["kind"] == "alert"]
        assert len(alerts) == 1
        alert = alerts[0]
        assert alert["trigger"] == "objectTempF"
        assert alert["t"] == pytest.approx(19.4)
        assert alert["value"] == pytest.approx(100.004)
        assert alert["delivered"] is True
        files = sorted(p.name for p in alert_dir.iterdir())
        assert files == [alert["email_file"]] == ["alert_0001.txt"]

    def test_override_engages_before_wall(self, fever_slice):
        res, _ = fever_slice
        overrides = [e for e in res.events
                     if e["kind"] == "chair" and e["override"]]
        assert overrides
        first = overrides[0]
        assert first["distance_cm"] <= 20.0
        assert first["motor"] == "Stop"
        assert res.stats["override_ticks"] == len(overrides)


class TestResultFiles:
    def test_log_and_report_round_trip(self, tmp_path):
        result = run_simulation(idle(), duration_s=0.5)
        log_path = result.write_log(tmp_path / "events.jsonl")
        report_path = result.write_report(tmp_path / "report.json")
        assert log_path.read_text() == result.events_jsonl()
        doc = json.loads(report_path.read_text())
        assert doc["config_hash"] == result.config_hash
        assert doc["stats"] == result.stats
        assert doc["scenario"] == "idle_local"

    def test_emitted_timestamps_carry_at_most_9_decimals(self):
        result = run_simulation(idle(), duration_s=0.5)
        for e in result.events:
            assert e["t"] == round(e["t"], 9)


class TestCadenceValidation:
    def test_period_must_divide_into_dt(self):
        sc = idle(controller={"cadence_s": 0.015})
        with pytest.raises(ValueError, match="not a multiple"):
            Simulation(sc)
