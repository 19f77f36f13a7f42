"""Glove-side gesture controller: gyro calibration and threshold classification.

The controller averages a batch of stationary gyro samples into per-axis
offsets, subtracts them from every live reading, and maps the calibrated
rates onto the command alphabet with a fixed-priority decision chain:

    forward   if gy' > threshold_forward
    backward  elif gy' < threshold_backward
    right     elif gx' > threshold_right
    left      elif gx' < threshold_left
    stop      otherwise

gz is carried through (and an offset for it is computed) but plays no part
in classification.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .channels import ChannelClosed
from .commands import Command

log = logging.getLogger(__name__)

# Angular-rate thresholds in deg/s. The magnitude separates deliberate tilt
# from tremor in the synthetic hand model; all four are config-exposed.
DEFAULT_THRESHOLD_DPS = 30.0
DEFAULT_CADENCE_S = 0.1
DEFAULT_CALIBRATION_SAMPLES = 200


class EmptyCalibrationError(ValueError):
    """Calibration was attempted with no samples."""


@dataclass(frozen=True)
class GyroSample:
    """One gyroscope reading: angular velocity in deg/s per axis."""

    gx: float
    gy: float
    gz: float

    def __post_init__(self) -> None:
        for v in (self.gx, self.gy, self.gz):
            if not math.isfinite(v):
                raise ValueError(f"non-finite gyro sample: {self!r}")


@dataclass(frozen=True)
class CalibrationOffsets:
    """Per-axis static bias (the mean of N stationary samples)."""

    offset_x: float
    offset_y: float
    offset_z: float
    sample_count: int

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


@dataclass(frozen=True)
class GestureThresholds:
    """Decision-chain thresholds, deg/s. Signs are fixed by convention:
    forward/right positive, backward/left negative."""

    forward: float = DEFAULT_THRESHOLD_DPS
    backward: float = -DEFAULT_THRESHOLD_DPS
    right: float = DEFAULT_THRESHOLD_DPS
    left: float = -DEFAULT_THRESHOLD_DPS

    def __post_init__(self) -> None:
        if not (self.forward > 0 and self.right > 0):
            raise ValueError("forward/right thresholds must be positive")
        if not (self.backward < 0 and self.left < 0):
            raise ValueError("backward/left thresholds must be negative")


def calibrate(samples: Iterable[GyroSample]) -> CalibrationOffsets:
    """Average stationary samples into per-axis offsets."""
    sx = sy = sz = 0.0
    n = 0
    for s in samples:
        sx += s.gx
        sy += s.gy
        sz += s.gz
        n += 1
    if n == 0:
        raise EmptyCalibrationError("cannot calibrate from zero samples")
    return CalibrationOffsets(sx / n, sy / n, sz / n, n)


def apply_calibration(raw: GyroSample, offsets: CalibrationOffsets) -> GyroSample:
    """Component-wise bias removal."""
    return GyroSample(
        raw.gx - offsets.offset_x,
        raw.gy - offsets.offset_y,
        raw.gz - offsets.offset_z,
    )


def classify_gesture(calibrated: GyroSample, thresholds: GestureThresholds) -> Command:
    """Map calibrated rates to a command via the fixed-priority chain.

    Total over finite inputs; evaluation order is part of the contract
    (forward wins over right when both axes exceed their thresholds).
    """
    if calibrated.gy > thresholds.forward:
        return Command.FORWARD
    if calibrated.gy < thresholds.backward:
        return Command.BACKWARD
    if calibrated.gx > thresholds.right:
        return Command.RIGHT
    if calibrated.gx < thresholds.left:
        return Command.LEFT
    return Command.STOP


@dataclass
class ControllerStats:
    frames_sent: int = 0
    send_failures: int = 0


def controller_loop(
    source: Iterator[GyroSample],
    sink,
    offsets: CalibrationOffsets,
    thresholds: GestureThresholds | None = None,
    on_send: Callable[[Command], None] | None = None,
) -> ControllerStats:
    """Drive one classification-and-transmit cycle per source sample.

    The source yields one raw sample per cadence tick (the caller owns the
    clock); every sample produces exactly one transmission attempt, with no
    change-suppression. A failed send is dropped and retried implicitly on
    the next tick's fresh classification. A closed sink or exhausted source
    ends the loop cleanly.
    """
    thresholds = thresholds or GestureThresholds()
    stats = ControllerStats()
    for raw in source:
        command = classify_gesture(apply_calibration(raw, offsets), thresholds)
        try:
            sink.send(command)
            stats.frames_sent += 1
            if on_send is not None:
                on_send(command)
        except ChannelClosed:
            log.info("command sink closed after %d frames", stats.frames_sent)
            break
        except Exception:
            stats.send_failures += 1
            log.warning("command transmit failed, retrying next tick", exc_info=True)
    return stats
