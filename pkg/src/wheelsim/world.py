"""Simulated physical reality: chair kinematics, obstacles, detectable
objects, and synthetic sensor signals, advanced at a fixed tick by a single
owner.

All per-step operations are pure functions over an immutable WorldState
snapshot; the World class owns the current snapshot plus the RNG streams and
is the only mutator. Snapshots are therefore safe to hand to any thread.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .commands import Command, Motor
from .gesture import GyroSample
from .health import ratio_for_spo2

CLASS_LABELS = ("Person", "Chair", "Table", "Door", "Bottle")

DEFAULT_LINEAR_SPEED_MPS = 0.5
DEFAULT_ANGULAR_SPEED_RPS = 0.8
DEFAULT_DT_S = 0.01

DEFAULT_MAX_RANGE_CM = 400.0

# PPG channel constants. Power-of-two DC and IR amplitude keep the synthetic
# amplitude arithmetic exact in float64, so the SpO2 ratio the estimator
# recovers is the configured one up to windowing noise.
PPG_IR_DC = 65536.0
PPG_IR_AC_PP = 1024.0
PPG_RED_DC = 65536.0

ECG_BASELINE_COUNTS = 512


def normalize_heading(h: float) -> float:
    """Wrap into [-pi, pi)."""
    return (h + math.pi) % (2.0 * math.pi) - math.pi


# --- scene geometry ----------------------------------------------------------

@dataclass(frozen=True)
class CircleObstacle:
    id: str
    cx: float
    cy: float
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"obstacle {self.id!r}: radius must be positive")


@dataclass(frozen=True)
class SegmentObstacle:
    """Axis-aligned wall segment."""

    id: str
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if self.x1 != self.x2 and self.y1 != self.y2:
            raise ValueError(f"obstacle {self.id!r}: segment must be axis-aligned")
        if self.x1 == self.x2 and self.y1 == self.y2:
            raise ValueError(f"obstacle {self.id!r}: degenerate segment")


Obstacle = CircleObstacle | SegmentObstacle


@dataclass(frozen=True)
class SceneObject:
    class_label: str
    x: float
    y: float
    extent: float

    def __post_init__(self) -> None:
        if self.class_label not in CLASS_LABELS:
            raise ValueError(f"unknown class label {self.class_label!r}")
        if self.extent <= 0:
            raise ValueError("extent must be positive")


@dataclass(frozen=True)
class UltrasonicModel:
    max_range_cm: float = DEFAULT_MAX_RANGE_CM
    noise_sigma_cm: float = 0.0
    miss_probability: float = 0.0

    def __post_init__(self) -> None:
        if self.max_range_cm <= 20:
            raise ValueError("max_range_cm must exceed the stop threshold")
        if not 0.0 <= self.miss_probability <= 1.0:
            raise ValueError("miss_probability must lie in [0, 1]")
        if self.noise_sigma_cm < 0:
            raise ValueError("noise_sigma_cm must be non-negative")


# --- user profile ------------------------------------------------------------

@dataclass(frozen=True)
class ScriptStep:
    """One scripted gesture: hold `gesture` for `duration_s` at the given
    sustained angular rate."""

    gesture: Command
    duration_s: float
    tilt_magnitude_dps: float = 45.0

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("script step duration must be positive")


@dataclass(frozen=True)
class UserProfile:
    gesture_script: tuple[ScriptStep, ...] = ()
    gyro_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gyro_noise_sigma: float = 0.0
    heart_rate_bpm: float = 72.0
    spo2_target: float = 98.0
    # Piecewise-linear (time s, temp C) trajectory; a single point is constant.
    body_temp_c: tuple[tuple[float, float], ...] = ((0.0, 37.0),)
    ambient_temp_c: float = 25.0
    ecg_template: tuple[float, ...] = (0.0,)
    ecg_baseline: int = ECG_BASELINE_COUNTS
    lead_status: int = 0
    ppg_noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not 30.0 <= self.heart_rate_bpm <= 220.0:
            raise ValueError("heart_rate_bpm out of the valid 30..220 range")
        if not 0.0 <= self.spo2_target <= 100.0:
            raise ValueError("spo2_target must lie in [0, 100]")
        if self.lead_status not in (0, 1):
            raise ValueError("lead_status must be 0 or 1")
        if not self.body_temp_c:
            raise ValueError("body_temp_c trajectory needs at least one point")
        if not self.ecg_template:
            raise ValueError("ecg_template needs at least one sample")


def body_temp_at(profile: UserProfile, t: float) -> float:
    """Linear interpolation over the trajectory, clamped at both ends."""
    points = profile.body_temp_c
    if t <= points[0][0]:
        return points[0][1]
    for (t0, c0), (t1, c1) in zip(points, points[1:]):
        if t <= t1:
            frac = (t - t0) / (t1 - t0)
            return c0 + frac * (c1 - c0)
    return points[-1][1]


def gesture_at(profile: UserProfile, t: float) -> tuple[Command, float]:
    """Scripted (gesture, tilt magnitude) active at time t; rest after the
    script runs out."""
    elapsed = 0.0
    for step in profile.gesture_script:
        elapsed += step.duration_s
        if t < elapsed:
            return step.gesture, step.tilt_magnitude_dps
    return Command.STOP, 0.0


# --- world state -------------------------------------------------------------

@dataclass(frozen=True)
class WorldState:
    time: float
    x: float
    y: float
    heading: float
    linear_speed: float = DEFAULT_LINEAR_SPEED_MPS
    angular_speed: float = DEFAULT_ANGULAR_SPEED_RPS
    obstacles: tuple[Obstacle, ...] = ()
    objects: tuple[SceneObject, ...] = ()
    rng_seed: int = 0


def step_world(state: WorldState, motor: Motor, dt: float) -> WorldState:
    """Differential-drive update: translate on F/B, rotate on L/R, hold on S."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, y, h = state.x, state.y, state.heading
    if motor is Motor.FORWARD:
        x += state.linear_speed * dt * math.cos(h)
        y += state.linear_speed * dt * math.sin(h)
    elif motor is Motor.BACKWARD:
        x -= state.linear_speed * dt * math.cos(h)
        y -= state.linear_speed * dt * math.sin(h)
    elif motor is Motor.LEFT:
        h = normalize_heading(h + state.angular_speed * dt)
    elif motor is Motor.RIGHT:
        h = normalize_heading(h - state.angular_speed * dt)
    return replace(state, time=state.time + dt, x=x, y=y, heading=h)


def _ray_circle(ox: float, oy: float, ux: float, uy: float,
                c: CircleObstacle) -> float | None:
    lx, ly = c.cx - ox, c.cy - oy
    tca = lx * ux + ly * uy
    d2 = lx * lx + ly * ly - c.radius * c.radius
    disc = tca * tca - d2
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    t_near = tca - root
    if t_near >= 0.0:
        return t_near
    # Origin inside the circle counts as contact.
    if tca + root >= 0.0:
        return 0.0
    return None


def _ray_segment(ox: float, oy: float, ux: float, uy: float,
                 s: SegmentObstacle) -> float | None:
    if s.x1 == s.x2:
        if ux == 0.0:
            return None
        t = (s.x1 - ox) / ux
        if t < 0.0:
            return None
        hit_y = oy + t * uy
        lo, hi = min(s.y1, s.y2), max(s.y1, s.y2)
        return t if lo <= hit_y <= hi else None
    if uy == 0.0:
        return None
    t = (s.y1 - oy) / uy
    if t < 0.0:
        return None
    hit_x = ox + t * ux
    lo, hi = min(s.x1, s.x2), max(s.x1, s.x2)
    return t if lo <= hit_x <= hi else None


def ray_distance_m(state: WorldState) -> float | None:
    """Nearest obstacle intersection along the chair heading, meters."""
    ux, uy = math.cos(state.heading), math.sin(state.heading)
    best: float | None = None
    for ob in state.obstacles:
        if isinstance(ob, CircleObstacle):
            t = _ray_circle(state.x, state.y, ux, uy, ob)
        else:
            t = _ray_segment(state.x, state.y, ux, uy, ob)
        if t is not None and (best is None or t < best):
            best = t
    return best


def measure_ultrasonic(state: WorldState, model: UltrasonicModel,
                       rng: np.random.Generator | None = None) -> float:
    """One ranging ping in cm: ray distance plus noise, clamped to range.

    A missed detection (probability miss_probability per reading) and a
    no-intersection ping both saturate at max range. The rng is consulted
    only for the stochastic parts, so a noiseless model never advances it.
    """
    if model.miss_probability > 0.0:
        if rng.random() < model.miss_probability:
            return model.max_range_cm
    d = ray_distance_m(state)
    if d is None:
        return model.max_range_cm
    d_cm = d * 100.0
    if model.noise_sigma_cm > 0.0:
        d_cm += model.noise_sigma_cm * rng.standard_normal()
    return min(max(d_cm, 0.0), model.max_range_cm)


# --- synthetic sensor signals -------------------------------------------------

_GESTURE_AXES: dict[Command, tuple[float, float, float]] = {
    Command.FORWARD: (0.0, 1.0, 0.0),
    Command.BACKWARD: (0.0, -1.0, 0.0),
    Command.RIGHT: (1.0, 0.0, 0.0),
    Command.LEFT: (-1.0, 0.0, 0.0),
    Command.STOP: (0.0, 0.0, 0.0),
}


def synth_gyro(profile: UserProfile, t: float,
               rng: np.random.Generator | None = None) -> GyroSample:
    """Scripted tilt as sustained angular rate, plus bias and noise."""
    gesture, magnitude = gesture_at(profile, t)
    ax, ay, az = _GESTURE_AXES[gesture]
    gx = ax * magnitude + profile.gyro_bias[0]
    gy = ay * magnitude + profile.gyro_bias[1]
    gz = az * magnitude + profile.gyro_bias[2]
    if profile.gyro_noise_sigma > 0.0:
        nx, ny, nz = rng.standard_normal(3) * profile.gyro_noise_sigma
        gx, gy, gz = gx + nx, gy + ny, gz + nz
    return GyroSample(gx, gy, gz)


def synth_ppg(profile: UserProfile, t: float) -> tuple[float, float]:
    """IR and red PPG counts at time t.

    Both channels share the pulse waveform; the red AC amplitude is chosen
    so the AC/DC ratio-of-ratios equals ratio_for_spo2(spo2_target), i.e.
    the estimator's formula inverted.
    """
    w = -math.cos(2.0 * math.pi * t * profile.heart_rate_bpm / 60.0)
    ir = PPG_IR_DC + (PPG_IR_AC_PP / 2.0) * w
    red_ac_pp = ratio_for_spo2(profile.spo2_target) * PPG_IR_AC_PP * (PPG_RED_DC / PPG_IR_DC)
    red = PPG_RED_DC + (red_ac_pp / 2.0) * w
    return ir, red


def synth_ecg_temp(profile: UserProfile, t: float) -> tuple[int, float, float, int]:
    """ECG counts plus the two temperatures and lead status at time t."""
    if profile.lead_status == 1:
        ecg = profile.ecg_baseline
    else:
        period = 60.0 / profile.heart_rate_bpm
        phase = (t / period) % 1.0
        idx = int(phase * len(profile.ecg_template)) % len(profile.ecg_template)
        ecg = int(round(profile.ecg_baseline + profile.ecg_template[idx]))
    return ecg, profile.ambient_temp_c, body_temp_at(profile, t), profile.lead_status


def visible_objects(state: WorldState, fov_deg: float, range_m: float) -> list[SceneObject]:
    """Objects inside the forward cone, boundary-inclusive."""
    if not 0.0 < fov_deg <= 180.0:
        raise ValueError("fov_deg must lie in (0, 180]")
    if range_m <= 0.0:
        raise ValueError("range_m must be positive")
    half = math.radians(fov_deg) / 2.0
    out: list[SceneObject] = []
    for obj in state.objects:
        dx, dy = obj.x - state.x, obj.y - state.y
        dist = math.hypot(dx, dy)
        if dist > range_m:
            continue
        bearing = normalize_heading(math.atan2(dy, dx) - state.heading)
        # 1e-12 absorbs atan2 rounding at the exact half-angle boundary.
        if abs(bearing) <= half + 1e-12:
            out.append(obj)
    return out


class World:
    """Single owner of the evolving state plus the sensor RNG streams."""

    def __init__(
        self,
        profile: UserProfile | None = None,
        obstacles: Sequence[Obstacle] = (),
        objects: Sequence[SceneObject] = (),
        ultrasonic: UltrasonicModel | None = None,
        start_pose: tuple[float, float, float] = (0.0, 0.0, 0.0),
        linear_speed: float = DEFAULT_LINEAR_SPEED_MPS,
        angular_speed: float = DEFAULT_ANGULAR_SPEED_RPS,
        dt: float = DEFAULT_DT_S,
        rng_seed: int = 0,
        ultrasonic_rng: np.random.Generator | None = None,
        gyro_rng: np.random.Generator | None = None,
        ppg_rng: np.random.Generator | None = None,
    ):
        ids = [ob.id for ob in obstacles]
        if len(ids) != len(set(ids)):
            raise ValueError("obstacle ids must be unique")
        self.profile = profile or UserProfile()
        self.ultrasonic = ultrasonic or UltrasonicModel()
        self.dt = dt
        self._ticks = 0
        self.state = WorldState(
            time=0.0,
            x=start_pose[0],
            y=start_pose[1],
            heading=normalize_heading(start_pose[2]),
            linear_speed=linear_speed,
            angular_speed=angular_speed,
            obstacles=tuple(obstacles),
            objects=tuple(objects),
            rng_seed=rng_seed,
        )
        self._ultra_rng = ultrasonic_rng
        self._gyro_rng = gyro_rng
        self._ppg_rng = ppg_rng

    @property
    def time(self) -> float:
        return self.state.time

    def step(self, motor: Motor) -> WorldState:
        stepped = step_world(self.state, motor, self.dt)
        self._ticks += 1
        # Recompute time from the tick count so it never drifts from n*dt.
        self.state = replace(stepped, time=self._ticks * self.dt)
        return self.state

    def measure_distance_cm(self) -> float:
        return measure_ultrasonic(self.state, self.ultrasonic, self._ultra_rng)

    def sample_gyro(self) -> GyroSample:
        return synth_gyro(self.profile, self.state.time, self._gyro_rng)

    def sample_ppg(self) -> tuple[float, float]:
        ir, red = synth_ppg(self.profile, self.state.time)
        if self.profile.ppg_noise_sigma > 0.0:
            ir += self.profile.ppg_noise_sigma * self._ppg_rng.standard_normal()
            red += self.profile.ppg_noise_sigma * self._ppg_rng.standard_normal()
        return ir, red

    def sample_ecg_temp(self) -> tuple[int, float, float, int]:
        return synth_ecg_temp(self.profile, self.state.time)

    def visible(self, fov_deg: float, range_m: float) -> list[SceneObject]:
        return visible_objects(self.state, fov_deg, range_m)
