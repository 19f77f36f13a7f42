"""Scenario files: strict JSON loading into typed configuration.

Every section rejects unknown keys with a dotted-path diagnostic, so a typo
in a config fails loudly instead of silently running defaults. The full
schema is documented in the README; bundled scenarios live in
wheelsim/scenarios/.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .base import OverrideScope, SAFETY_THRESHOLD_CM, BASE_TICK_PERIOD_S
from .commands import Command
from .gesture import DEFAULT_CADENCE_S, DEFAULT_CALIBRATION_SAMPLES, GestureThresholds
from .health import (LOOP_PERIOD_S, PPG_SAMPLE_RATE_HZ, SPO2_FLOOR_PCT,
                     TEMP_ALERT_F, UPLOAD_PERIOD_S, WINDOW_SECONDS)
from .netproto import DEFAULT_ALERT_RECIPIENT, DEFAULT_API_KEY
from .sensorhub import HUB_CADENCE_S
from .perception import (DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_COOLDOWN_S,
                         DEFAULT_FOV_DEG, DEFAULT_RANGE_M,
                         PERCEPTION_CADENCE_S, DetectorParams,
                         fp_rate_for_precision, uniform_recall)
from .world import (CLASS_LABELS, CircleObstacle, Obstacle, ScriptStep,
                    SceneObject, SegmentObstacle, UltrasonicModel, UserProfile)


class ConfigError(ValueError):
    """A scenario file problem, always naming the offending key path."""


_REQUIRED = object()


class _Section:
    """One JSON object being consumed key by key; leftovers are errors."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected an object")
        self._data = dict(data)
        self._path = path

    def take(self, key: str, default: Any = _REQUIRED) -> Any:
        if key in self._data:
            return self._data.pop(key)
        if default is _REQUIRED:
            raise ConfigError(f"{self._path}.{key}: required key missing")
        return default

    def subsection(self, key: str) -> "_Section | None":
        if key not in self._data:
            return None
        return _Section(self._data.pop(key), f"{self._path}.{key}")

    def finish(self) -> None:
        if self._data:
            names = ", ".join(sorted(self._data))
            raise ConfigError(f"{self._path}: unknown keys: {names}")


def _number(value: Any, path: str, minimum: float | None = None,
            maximum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    v = float(value)
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    if maximum is not None and v > maximum:
        raise ConfigError(f"{path}: must be <= {maximum}")
    return v


def _integer(value: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return value


def _string(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string")
    return value


def _boolean(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true or false")
    return value


def _pair(value: Any, path: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{path}: expected [x, y]")
    return (_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))


@dataclass(frozen=True)
class ControllerConfig:
    thresholds: GestureThresholds = field(default_factory=GestureThresholds)
    cadence_s: float = DEFAULT_CADENCE_S
    calibration_samples: int = DEFAULT_CALIBRATION_SAMPLES


@dataclass(frozen=True)
class BaseConfig:
    safety_threshold_cm: float = SAFETY_THRESHOLD_CM
    tick_period_s: float = BASE_TICK_PERIOD_S
    override_scope: OverrideScope = OverrideScope.ALL


@dataclass(frozen=True)
class MonitorConfig:
    window_seconds: float = WINDOW_SECONDS
    sample_rate_hz: float = PPG_SAMPLE_RATE_HZ
    loop_period_s: float = LOOP_PERIOD_S
    upload_period_s: float = UPLOAD_PERIOD_S
    temp_alert_f: float = TEMP_ALERT_F
    spo2_floor: float = SPO2_FLOOR_PCT


@dataclass(frozen=True)
class PerceptionConfig:
    enabled: bool = True
    cadence_s: float = PERCEPTION_CADENCE_S
    fov_deg: float = DEFAULT_FOV_DEG
    range_m: float = DEFAULT_RANGE_M
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    cooldown_s: float = DEFAULT_COOLDOWN_S
    detector: DetectorParams | None = None


@dataclass(frozen=True)
class AlertConfig:
    transport: str = "memory"  # "memory" or "file"
    directory: str = "alerts"
    recipient: str = DEFAULT_ALERT_RECIPIENT


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    dt_s: float
    seed: int
    start_pose: tuple[float, float, float]
    linear_speed_mps: float
    angular_speed_rps: float
    obstacles: tuple[Obstacle, ...]
    objects: tuple[SceneObject, ...]
    profile: UserProfile
    ultrasonic: UltrasonicModel
    controller: ControllerConfig
    base: BaseConfig
    monitor: MonitorConfig
    perception: PerceptionConfig
    api_key: str
    alerts: AlertConfig
    hub_cadence_s: float = HUB_CADENCE_S
    raw: dict = field(default_factory=dict)


def _parse_obstacle(data: Any, path: str) -> Obstacle:
    sec = _Section(data, path)
    ob_id = _string(sec.take("id"), f"{path}.id")
    kind = _string(sec.take("type"), f"{path}.type")
    try:
        if kind == "circle":
            cx, cy = _pair(sec.take("center"), f"{path}.center")
            radius = _number(sec.take("radius"), f"{path}.radius")
            sec.finish()
            return CircleObstacle(ob_id, cx, cy, radius)
        if kind == "segment":
            x1, y1 = _pair(sec.take("from"), f"{path}.from")
            x2, y2 = _pair(sec.take("to"), f"{path}.to")
            sec.finish()
            return SegmentObstacle(ob_id, x1, y1, x2, y2)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}.type: must be 'circle' or 'segment'")


def _parse_object(data: Any, path: str) -> SceneObject:
    sec = _Section(data, path)
    label = _string(sec.take("class"), f"{path}.class")
    if label not in CLASS_LABELS:
        raise ConfigError(f"{path}.class: unknown class {label!r}; "
                          f"expected one of {', '.join(CLASS_LABELS)}")
    x, y = _pair(sec.take("position"), f"{path}.position")
    extent = _number(sec.take("extent", 0.5), f"{path}.extent", minimum=1e-6)
    sec.finish()
    return SceneObject(label, x, y, extent)


def _parse_script_step(data: Any, path: str) -> ScriptStep:
    sec = _Section(data, path)
    symbol = _string(sec.take("gesture"), f"{path}.gesture")
    try:
        gesture = Command.from_symbol(symbol)
    except ValueError:
        raise ConfigError(f"{path}.gesture: not a command symbol: {symbol!r}") from None
    duration = _number(sec.take("duration_s"), f"{path}.duration_s", minimum=1e-9)
    tilt = _number(sec.take("tilt_dps", 45.0), f"{path}.tilt_dps")
    sec.finish()
    return ScriptStep(gesture, duration, tilt)


def _parse_body_temp(value: Any, path: str) -> tuple[tuple[float, float], ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return ((0.0, float(value)),)
    if isinstance(value, list) and value:
        points = []
        last_t = None
        for i, item in enumerate(value):
            t, c = _pair(item, f"{path}[{i}]")
            if last_t is not None and t <= last_t:
                raise ConfigError(f"{path}[{i}]: times must be strictly increasing")
            last_t = t
            points.append((t, c))
        return tuple(points)
    raise ConfigError(f"{path}: expected a number or a list of [time, celsius] pairs")


def _parse_profile(sec: _Section | None, path: str) -> UserProfile:
    if sec is None:
        return UserProfile()
    script_raw = sec.take("gesture_script", [])
    if not isinstance(script_raw, list):
        raise ConfigError(f"{path}.gesture_script: expected a list")
    script = tuple(_parse_script_step(item, f"{path}.gesture_script[{i}]")
                   for i, item in enumerate(script_raw))
    bias_raw = sec.take("gyro_bias", [0.0, 0.0, 0.0])
    if not isinstance(bias_raw, list) or len(bias_raw) != 3:
        raise ConfigError(f"{path}.gyro_bias: expected [bx, by, bz]")
    bias = tuple(_number(b, f"{path}.gyro_bias[{i}]") for i, b in enumerate(bias_raw))
    template_raw = sec.take("ecg_template", [0.0])
    if not isinstance(template_raw, list) or not template_raw:
        raise ConfigError(f"{path}.ecg_template: expected a non-empty list")
    template = tuple(_number(v, f"{path}.ecg_template[{i}]")
                     for i, v in enumerate(template_raw))
    try:
        profile = UserProfile(
            gesture_script=script,
            gyro_bias=bias,  # type: ignore[arg-type]
            gyro_noise_sigma=_number(sec.take("gyro_noise_sigma", 0.0),
                                     f"{path}.gyro_noise_sigma", minimum=0.0),
            heart_rate_bpm=_number(sec.take("heart_rate_bpm", 72.0),
                                   f"{path}.heart_rate_bpm"),
            spo2_target=_number(sec.take("spo2_target", 98.0),
                                f"{path}.spo2_target"),
            body_temp_c=_parse_body_temp(sec.take("body_temp_c", 37.0),
                                         f"{path}.body_temp_c"),
            ambient_temp_c=_number(sec.take("ambient_temp_c", 25.0),
                                   f"{path}.ambient_temp_c"),
            ecg_template=template,
            ecg_baseline=_integer(sec.take("ecg_baseline", 512),
                                  f"{path}.ecg_baseline"),
            lead_status=_integer(sec.take("lead_status", 0), f"{path}.lead_status"),
            ppg_noise_sigma=_number(sec.take("ppg_noise_sigma", 0.0),
                                    f"{path}.ppg_noise_sigma", minimum=0.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    sec.finish()
    return profile


def _parse_thresholds(sec: _Section | None, path: str) -> GestureThresholds:
    if sec is None:
        return GestureThresholds()
    try:
        thresholds = GestureThresholds(
            forward=_number(sec.take("forward", 30.0), f"{path}.forward"),
            backward=_number(sec.take("backward", -30.0), f"{path}.backward"),
            right=_number(sec.take("right", 30.0), f"{path}.right"),
            left=_number(sec.take("left", -30.0), f"{path}.left"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    sec.finish()
    return thresholds


def _parse_detector(sec: _Section | None, path: str,
                    threshold: float) -> DetectorParams:
    recall = 0.902
    fp_rate = None
    tp_conf = (0.55, 0.99)
    fp_conf = (0.05, 0.95)
    jitter = 0.05
    if sec is not None:
        recall = _number(sec.take("recall", recall), f"{path}.recall",
                         minimum=0.0, maximum=1.0)
        fp_raw = sec.take("false_positive_rate", None)
        if fp_raw is not None:
            fp_rate = _number(fp_raw, f"{path}.false_positive_rate", minimum=0.0)
        tp_conf = _pair(sec.take("tp_confidence", list(tp_conf)), f"{path}.tp_confidence")
        fp_conf = _pair(sec.take("fp_confidence", list(fp_conf)), f"{path}.fp_confidence")
        jitter = _number(sec.take("box_jitter", jitter), f"{path}.box_jitter",
                         minimum=0.0)
        sec.finish()
    if fp_rate is None:
        fp_rate = fp_rate_for_precision(recall, 0.915, fp_conf, threshold)
    try:
        return DetectorParams(
            recall_per_class=uniform_recall(recall),
            false_positive_rate=fp_rate,
            tp_confidence=tp_conf,
            fp_confidence=fp_conf,
            box_jitter=jitter,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_scenario(data: dict, name: str = "scenario") -> Scenario:
    raw = json.loads(json.dumps(data))  # defensive deep copy for hashing
    top = _Section(data, "scenario")

    scenario_name = _string(top.take("name", name), "scenario.name")
    duration = _number(top.take("duration_s", 60.0), "scenario.duration_s",
                       minimum=1e-9)
    dt = _number(top.take("dt_s", 0.01), "scenario.dt_s", minimum=1e-6)
    seed = _integer(top.take("seed", 0), "scenario.seed", minimum=0)

    pose_raw = top.take("start_pose", [0.0, 0.0, 0.0])
    if not isinstance(pose_raw, list) or len(pose_raw) != 3:
        raise ConfigError("scenario.start_pose: expected [x, y, heading]")
    pose = tuple(_number(v, f"scenario.start_pose[{i}]")
                 for i, v in enumerate(pose_raw))

    chair = top.subsection("chair")
    linear = 0.5
    angular = 0.8
    if chair is not None:
        linear = _number(chair.take("linear_speed_mps", linear),
                         "scenario.chair.linear_speed_mps", minimum=1e-9)
        angular = _number(chair.take("angular_speed_rps", angular),
                          "scenario.chair.angular_speed_rps", minimum=1e-9)
        chair.finish()

    obstacles_raw = top.take("obstacles", [])
    if not isinstance(obstacles_raw, list):
        raise ConfigError("scenario.obstacles: expected a list")
    obstacles = tuple(_parse_obstacle(item, f"scenario.obstacles[{i}]")
                      for i, item in enumerate(obstacles_raw))
    ids = [ob.id for ob in obstacles]
    if len(ids) != len(set(ids)):
        raise ConfigError("scenario.obstacles: ids must be unique")

    objects_raw = top.take("objects", [])
    if not isinstance(objects_raw, list):
        raise ConfigError("scenario.objects: expected a list")
    objects = tuple(_parse_object(item, f"scenario.objects[{i}]")
                    for i, item in enumerate(objects_raw))

    profile = _parse_profile(top.subsection("profile"), "scenario.profile")

    ultra_sec = top.subsection("ultrasonic")
    if ultra_sec is None:
        ultrasonic = UltrasonicModel()
    else:
        try:
            ultrasonic = UltrasonicModel(
                max_range_cm=_number(ultra_sec.take("max_range_cm", 400.0),
                                     "scenario.ultrasonic.max_range_cm"),
                noise_sigma_cm=_number(ultra_sec.take("noise_sigma_cm", 0.0),
                                       "scenario.ultrasonic.noise_sigma_cm"),
                miss_probability=_number(ultra_sec.take("miss_probability", 0.0),
                                         "scenario.ultrasonic.miss_probability"),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"scenario.ultrasonic: {exc}") from None
        ultra_sec.finish()

    ctrl_sec = top.subsection("controller")
    if ctrl_sec is None:
        controller = ControllerConfig()
    else:
        thresholds = _parse_thresholds(ctrl_sec.subsection("thresholds"),
                                       "scenario.controller.thresholds")
        controller = ControllerConfig(
            thresholds=thresholds,
            cadence_s=_number(ctrl_sec.take("cadence_s", DEFAULT_CADENCE_S),
                              "scenario.controller.cadence_s", minimum=1e-6),
            calibration_samples=_integer(
                ctrl_sec.take("calibration_samples", DEFAULT_CALIBRATION_SAMPLES),
                "scenario.controller.calibration_samples", minimum=1),
        )
        ctrl_sec.finish()

    base_sec = top.subsection("base")
    if base_sec is None:
        base_cfg = BaseConfig()
    else:
        scope_raw = _string(base_sec.take("override_scope", "all"),
                            "scenario.base.override_scope")
        try:
            scope = OverrideScope(scope_raw)
        except ValueError:
            raise ConfigError("scenario.base.override_scope: must be 'all' "
                              "or 'forward_only'") from None
        base_cfg = BaseConfig(
            safety_threshold_cm=_number(
                base_sec.take("safety_threshold_cm", SAFETY_THRESHOLD_CM),
                "scenario.base.safety_threshold_cm", minimum=1e-9),
            tick_period_s=_number(base_sec.take("tick_period_s", BASE_TICK_PERIOD_S),
                                  "scenario.base.tick_period_s", minimum=1e-6),
            override_scope=scope,
        )
        base_sec.finish()

    mon_sec = top.subsection("monitor")
    if mon_sec is None:
        monitor = MonitorConfig()
    else:
        monitor = MonitorConfig(
            window_seconds=_number(mon_sec.take("window_seconds", WINDOW_SECONDS),
                                   "scenario.monitor.window_seconds", minimum=1e-3),
            sample_rate_hz=_number(mon_sec.take("sample_rate_hz", PPG_SAMPLE_RATE_HZ),
                                   "scenario.monitor.sample_rate_hz", minimum=1.0),
            loop_period_s=_number(mon_sec.take("loop_period_s", LOOP_PERIOD_S),
                                  "scenario.monitor.loop_period_s", minimum=1e-6),
            upload_period_s=_number(mon_sec.take("upload_period_s", UPLOAD_PERIOD_S),
                                    "scenario.monitor.upload_period_s", minimum=1e-3),
            temp_alert_f=_number(mon_sec.take("temp_alert_f", TEMP_ALERT_F),
                                 "scenario.monitor.temp_alert_f"),
            spo2_floor=_number(mon_sec.take("spo2_floor", SPO2_FLOOR_PCT),
                               "scenario.monitor.spo2_floor"),
        )
        mon_sec.finish()

    per_sec = top.subsection("perception")
    if per_sec is None:
        threshold = DEFAULT_CONFIDENCE_THRESHOLD
        perception = PerceptionConfig(detector=_parse_detector(None, "", threshold))
    else:
        enabled = _boolean(per_sec.take("enabled", True),
                           "scenario.perception.enabled")
        threshold = _number(
            per_sec.take("confidence_threshold", DEFAULT_CONFIDENCE_THRESHOLD),
            "scenario.perception.confidence_threshold", minimum=0.0, maximum=1.0)
        detector = _parse_detector(per_sec.subsection("detector"),
                                   "scenario.perception.detector", threshold)
        perception = PerceptionConfig(
            enabled=enabled,
            cadence_s=_number(per_sec.take("cadence_s", PERCEPTION_CADENCE_S),
                              "scenario.perception.cadence_s", minimum=1e-6),
            fov_deg=_number(per_sec.take("fov_deg", DEFAULT_FOV_DEG),
                            "scenario.perception.fov_deg", minimum=1.0, maximum=180.0),
            range_m=_number(per_sec.take("range_m", DEFAULT_RANGE_M),
                            "scenario.perception.range_m", minimum=1e-3),
            confidence_threshold=threshold,
            cooldown_s=_number(per_sec.take("cooldown_s", DEFAULT_COOLDOWN_S),
                               "scenario.perception.cooldown_s", minimum=1e-6),
            detector=detector,
        )
        per_sec.finish()

    hub_sec = top.subsection("hub")
    hub_cadence = HUB_CADENCE_S
    if hub_sec is not None:
        hub_cadence = _number(hub_sec.take("cadence_s", HUB_CADENCE_S),
                              "scenario.hub.cadence_s", minimum=1e-6)
        hub_sec.finish()

    cloud_sec = top.subsection("cloud")
    api_key = DEFAULT_API_KEY
    if cloud_sec is not None:
        api_key = _string(cloud_sec.take("api_key", DEFAULT_API_KEY),
                          "scenario.cloud.api_key")
        if not api_key:
            raise ConfigError("scenario.cloud.api_key: must be nonempty")
        cloud_sec.finish()

    alert_sec = top.subsection("alerts")
    if alert_sec is None:
        alerts = AlertConfig()
    else:
        transport = _string(alert_sec.take("transport", "memory"),
                            "scenario.alerts.transport")
        if transport not in ("memory", "file"):
            raise ConfigError("scenario.alerts.transport: must be 'memory' or 'file'")
        alerts = AlertConfig(
            transport=transport,
            directory=_string(alert_sec.take("directory", "alerts"),
                              "scenario.alerts.directory"),
            recipient=_string(alert_sec.take("recipient", DEFAULT_ALERT_RECIPIENT),
                              "scenario.alerts.recipient"),
        )
        alert_sec.finish()

    top.finish()
    return Scenario(
        name=scenario_name,
        duration_s=duration,
        dt_s=dt,
        seed=seed,
        start_pose=pose,  # type: ignore[arg-type]
        linear_speed_mps=linear,
        angular_speed_rps=angular,
        obstacles=obstacles,
        objects=objects,
        profile=profile,
        ultrasonic=ultrasonic,
        controller=controller,
        base=base_cfg,
        monitor=monitor,
        perception=perception,
        api_key=api_key,
        alerts=alerts,
        hub_cadence_s=hub_cadence,
        raw=raw,
    )


def bundled_scenario_path(name: str) -> Path | None:
    """Resolve a bundled scenario by bare name ("fever_drive")."""
    candidate = resources.files("wheelsim") / "scenarios" / f"{name}.json"
    try:
        if candidate.is_file():
            with resources.as_file(candidate) as p:
                return Path(p)
    except (FileNotFoundError, ModuleNotFoundError):
        return None
    return None


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(source)
    if not path.exists() and path.suffix == "":
        bundled = bundled_scenario_path(str(source))
        if bundled is not None:
            path = bundled
    if not path.exists():
        raise ConfigError(f"scenario file not found: {source}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_scenario(data, name=path.stem)
