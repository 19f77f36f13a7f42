"""Deterministic fixed-timestep simulation kernel.

One loop owns simulated time and steps every module at its configured
cadence (expressed as tick multiples of dt). Per-tick order is frozen:

    PPG emit -> glove controller -> sensor hub -> health monitor ->
    perception -> base -> world integration

Everything stochastic draws from named substreams spawned from the run
seed in a fixed order, so a (scenario, seed) pair replays byte-identically:
the serialized event log is the determinism contract.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .base import BaseState, WheelchairBase
from .channels import Channel, SerialLink, TelemetryBus
from .commands import Command
from .gesture import (CalibrationOffsets, GyroSample, apply_calibration,
                      calibrate, classify_gesture)
from .health import AlertState, HealthMonitor, PpgSample
from .netproto import (AlertEvent, CloudPayload, CloudStub, FileSinkTransport,
                       MemoryTransport, render_query, send_email_alert)
from .perception import (DetectorParams, Perceiver, fp_rate_for_precision,
                         uniform_recall)
from .scenario import Scenario
from .sensorhub import SensorHub
from .world import World

# Substream spawn order from the run seed; adding a consumer means
# appending here, never reordering.
_STREAMS = ("ultrasonic", "gyro", "ppg", "perception")


def _round6(x: float) -> float:
    return round(float(x), 6)


def config_hash(scenario: Scenario, seed: int, duration_s: float) -> str:
    blob = json.dumps(scenario.raw, sort_keys=True, separators=(",", ":"))
    key = f"{blob}|seed={seed}|duration={duration_s}"
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def events_to_jsonl(events: list[dict]) -> str:
    return "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in events)


@dataclass
class SimResult:
    scenario_name: str
    seed: int
    config_hash: str
    duration_s: float
    events: list[dict]
    stats: dict[str, Any]

    def events_jsonl(self) -> str:
        return events_to_jsonl(self.events)

    def write_log(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.events_jsonl(), encoding="utf-8")
        return path

    def report(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario_name,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "duration_s": self.duration_s,
            "stats": self.stats,
        }

    def write_report(self, path: str | Path, **extra: Any) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = self.report()
        doc.update(extra)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


def _cadence_ticks(period_s: float, dt: float, what: str) -> int:
    ticks = max(1, round(period_s / dt))
    if abs(ticks * dt - period_s) > 1e-9:
        raise ValueError(f"{what} period {period_s} is not a multiple of dt {dt}")
    return ticks


class Simulation:
    """All modules wired over channels, stepped by a single owner.

    Headless runs are strictly single-threaded. In live mode a server
    thread may inject commands and subscribe to the telemetry bus; the
    command channel and bus are thread-safe, the rest is owned here.
    """

    def __init__(self, scenario: Scenario, seed: int | None = None,
                 alert_dir: str | Path | None = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed

        streams = np.random.SeedSequence(self.seed).spawn(len(_STREAMS))
        rngs = {name: np.random.default_rng(s)
                for name, s in zip(_STREAMS, streams)}

        self.world = World(
            profile=scenario.profile,
            obstacles=scenario.obstacles,
            objects=scenario.objects,
            ultrasonic=scenario.ultrasonic,
            start_pose=scenario.start_pose,
            linear_speed=scenario.linear_speed_mps,
            angular_speed=scenario.angular_speed_rps,
            dt=scenario.dt_s,
            rng_seed=self.seed,
            ultrasonic_rng=rngs["ultrasonic"],
            gyro_rng=rngs["gyro"],
            ppg_rng=rngs["ppg"],
        )

        self.commands: Channel[tuple[Command, str]] = Channel("commands")
        self.serial = SerialLink()
        self.ppg: Channel[PpgSample] = Channel("ppg")
        self.bus = TelemetryBus()
        self.events: list[dict] = []
        self.stub = CloudStub(scenario.api_key)

        if scenario.alerts.transport == "file":
            directory = Path(alert_dir) if alert_dir is not None \
                else Path(scenario.alerts.directory)
            self.transport = FileSinkTransport(directory)
        else:
            self.transport = MemoryTransport()

        self.hub = SensorHub(self.world.sample_ecg_temp, self.serial)
        self.monitor = HealthMonitor(
            self.serial,
            self.ppg,
            cloud_sink=self._cloud_sink,
            alert_sink=self._alert_sink,
            window_seconds=scenario.monitor.window_seconds,
            sample_rate=scenario.monitor.sample_rate_hz,
            alert_state=AlertState(
                threshold_f=scenario.monitor.temp_alert_f,
                spo2_floor=scenario.monitor.spo2_floor,
            ),
            upload_period_s=scenario.monitor.upload_period_s,
        )

        base_commands: Channel[Command] = Channel("base-commands")
        self._base_commands = base_commands
        self.base = WheelchairBase(
            base_commands,
            self.world.measure_distance_cm,
            state=BaseState(
                safety_threshold_cm=scenario.base.safety_threshold_cm,
                override_scope=scenario.base.override_scope,
            ),
        )

        self.perceiver: Perceiver | None = None
        if scenario.perception.enabled:
            detector = scenario.perception.detector
            if detector is None:
                detector = DetectorParams(
                    recall_per_class=uniform_recall(0.902),
                    false_positive_rate=fp_rate_for_precision(
                        0.902, 0.915,
                        threshold=scenario.perception.confidence_threshold),
                )
            self.perceiver = Perceiver(
                detector,
                rngs["perception"],
                confidence_threshold=scenario.perception.confidence_threshold,
                fov_deg=scenario.perception.fov_deg,
                range_m=scenario.perception.range_m,
                cooldown_s=scenario.perception.cooldown_s,
            )

        dt = scenario.dt_s
        self._ppg_every = _cadence_ticks(1.0 / scenario.monitor.sample_rate_hz, dt, "PPG sampling")
        self._ctrl_every = _cadence_ticks(scenario.controller.cadence_s, dt, "controller")
        self._hub_every = _cadence_ticks(scenario.hub_cadence_s, dt, "hub")
        self._monitor_every = _cadence_ticks(scenario.monitor.loop_period_s, dt, "monitor loop")
        self._perception_every = _cadence_ticks(scenario.perception.cadence_s, dt, "perception")
        self._base_every = _cadence_ticks(scenario.base.tick_period_s, dt, "base")

        self._tick = 0
        self._gyro_rng = rngs["gyro"]
        self.offsets: CalibrationOffsets | None = None
        self.commands_sent = 0
        self.override_ticks = 0
        self._booted = False
        self._planned_duration = scenario.duration_s
        self._digest = config_hash(scenario, self.seed, scenario.duration_s)
        self._lock = threading.Lock()

    # --- event plumbing ---------------------------------------------------

    def _emit(self, kind: str, t: float, body: dict[str, Any]) -> None:
        event = {"t": round(t, 9), "kind": kind}
        event.update(body)
        self.events.append(event)
        self.bus.publish(event)

    def _cloud_sink(self, payload: CloudPayload) -> None:
        query = render_query(payload, self.scenario.api_key)
        entry_id = self.stub.handle(query, payload.timestamp)
        self._emit("upload", payload.timestamp,
                   {"entry_id": entry_id, "query": query})

    def _alert_sink(self, event: AlertEvent) -> None:
        record = send_email_alert(event, self.transport,
                                  self.scenario.alerts.recipient)
        detail = record.detail if record.ok else None
        if detail is not None:
            # Log only the basename so logs are location-independent.
            detail = Path(detail).name
        self._emit("alert", event.timestamp, {
            "trigger": event.trigger,
            "value": _round6(event.value),
            "delivered": record.ok,
            "email_file": detail,
        })

    def inject_command(self, command: Command, source: str = "dashboard") -> None:
        """Thread-safe external command entry (dashboard / control socket)."""
        with self._lock:
            t = self.world.time
            self._base_commands.send(command)
            self._emit("command", t, {"source": source, "command": command.value})

    # --- lifecycle ---------------------------------------------------------

    def boot(self) -> None:
        """Start-of-run sequence: command server first, then the glove
        calibrates and connects, then sensor tasks. Emits lifecycle events
        in that order so the log records the bring-up."""
        if self._booted:
            return
        self._booted = True
        self._emit("lifecycle", 0.0, {"phase": "base_server_listening",
                                      "network": "SmartWheelchair"})
        profile = self.scenario.profile
        n = self.scenario.controller.calibration_samples
        samples = []
        for _ in range(n):
            noise = (self._gyro_rng.standard_normal(3) * profile.gyro_noise_sigma
                     if profile.gyro_noise_sigma > 0.0 else (0.0, 0.0, 0.0))
            samples.append(GyroSample(
                profile.gyro_bias[0] + noise[0],
                profile.gyro_bias[1] + noise[1],
                profile.gyro_bias[2] + noise[2],
            ))
        self.offsets = calibrate(samples)
        self._emit("lifecycle", 0.0, {
            "phase": "glove_calibrated",
            "samples": n,
            "offsets": {
                "x": _round6(self.offsets.offset_x),
                "y": _round6(self.offsets.offset_y),
                "z": _round6(self.offsets.offset_z),
            },
        })
        self._emit("lifecycle", 0.0, {"phase": "controller_connected"})

    def step(self) -> None:
        """Advance one dt tick."""
        if not self._booted:
            self.boot()
        i = self._tick
        t = round(i * self.scenario.dt_s, 9)
        scenario = self.scenario

        if i % self._ppg_every == 0:
            ir, red = self.world.sample_ppg()
            self.ppg.send(PpgSample(t, ir, red))

        if i % self._ctrl_every == 0:
            raw = self.world.sample_gyro()
            command = classify_gesture(
                apply_calibration(raw, self.offsets),
                scenario.controller.thresholds)
            with self._lock:
                self._base_commands.send(command)
                self._emit("command", t, {"source": "glove",
                                          "command": command.value})
            self.commands_sent += 1

        if i % self._hub_every == 0:
            self.hub.tick()

        if i % self._monitor_every == 0:
            result = self.monitor.tick(t)
            if result.vitals is not None:
                v = result.vitals
                self._emit("vitals", t, {
                    "bpm": None if v.bpm is None else _round6(v.bpm),
                    "spo2": None if v.spo2 is None else _round6(v.spo2),
                    "ecg": v.ecg_value,
                    "objectTempF": _round6(v.object_temp_f),
                    "ambientTempC": _round6(v.ambient_temp_c),
                    "leadStatus": v.lead_status,
                })

        if self.perceiver is not None and i % self._perception_every == 0:
            visible = self.world.visible(scenario.perception.fov_deg,
                                         scenario.perception.range_m)
            detections, utterances = self.perceiver.tick(self.world.state,
                                                         visible, t)
            self._emit("detection", t, {
                "frame_id": self.perceiver.frame_id - 1,
                "detections": [{
                    "label": d.class_label,
                    "confidence": _round6(d.confidence),
                    "box": [_round6(v) for v in d.box],
                } for d in detections],
            })
            for u in utterances:
                self._emit("utterance", t, {"text": u.text})

        if i % self._base_every == 0:
            state = self.base.tick()
            if state.override_active:
                self.override_ticks += 1
            w = self.world.state
            self._emit("chair", t, {
                "x": _round6(w.x),
                "y": _round6(w.y),
                "heading": _round6(w.heading),
                "motor": state.motor.value,
                "last_command": state.last_command.value,
                "distance_cm": _round6(state.last_distance_cm),
                "override": state.override_active,
            })

        self.world.step(self.base.state.motor)
        self._tick += 1

    def status(self) -> dict[str, Any]:
        """Latest snapshot for the HTTP status endpoint."""
        with self._lock:
            w = self.world.state
            b = self.base.state
            v = self.monitor.last_vitals
            return {
                "t": round(self._tick * self.scenario.dt_s, 9),
                "scenario": self.scenario.name,
                "seed": self.seed,
                "chair": {
                    "x": _round6(w.x), "y": _round6(w.y),
                    "heading": _round6(w.heading),
                    "motor": b.motor.value,
                    "last_command": b.last_command.value,
                    "distance_cm": _round6(b.last_distance_cm),
                    "override": b.override_active,
                },
                "vitals": None if v is None else {
                    "bpm": None if v.bpm is None else _round6(v.bpm),
                    "spo2": None if v.spo2 is None else _round6(v.spo2),
                    "ecg": v.ecg_value,
                    "objectTempF": _round6(v.object_temp_f),
                    "ambientTempC": _round6(v.ambient_temp_c),
                    "leadStatus": v.lead_status,
                },
                "alerts": {
                    "temperature_latched": self.monitor.alert_state.email_sent,
                    "spo2_latched": self.monitor.alert_state.spo2_alert_sent,
                    "count": self.monitor.alerts_emitted,
                },
                "uploads": self.monitor.uploads_sent,
            }

    def begin_run(self, duration_s: float | None = None) -> int:
        """Emit the run header and return the tick count to step."""
        duration = self.scenario.duration_s if duration_s is None else duration_s
        self._planned_duration = duration
        self._digest = config_hash(self.scenario, self.seed, duration)
        self.boot()
        self._emit("lifecycle", 0.0, {"phase": "run_started",
                                      "scenario": self.scenario.name,
                                      "seed": self.seed,
                                      "config_hash": self._digest})
        return round(duration / self.scenario.dt_s)

    def finish_run(self) -> SimResult:
        """Emit the run trailer with whatever was actually stepped."""
        stats = {
            "ticks": self._tick,
            "commands_sent": self.commands_sent,
            "frames_parsed": self.monitor.frames_parsed,
            "malformed_frames": self.monitor.malformed_frames,
            "uploads": self.monitor.uploads_sent,
            "alerts": self.monitor.alerts_emitted,
            "override_ticks": self.override_ticks,
        }
        self._emit("lifecycle", round(self._tick * self.scenario.dt_s, 9),
                   {"phase": "run_complete", **stats})
        return SimResult(
            scenario_name=self.scenario.name,
            seed=self.seed,
            config_hash=self._digest,
            duration_s=self._planned_duration,
            events=self.events,
            stats=stats,
        )

    def run(self, duration_s: float | None = None) -> SimResult:
        ticks = self.begin_run(duration_s)
        for _ in range(ticks):
            self.step()
        return self.finish_run()


def run_simulation(scenario: Scenario, seed: int | None = None,
                   duration_s: float | None = None,
                   alert_dir: str | Path | None = None) -> SimResult:
    return Simulation(scenario, seed=seed, alert_dir=alert_dir).run(duration_s)
