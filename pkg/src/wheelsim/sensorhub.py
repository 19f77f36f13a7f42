"""Sensor hub: samples ECG/temperature signals and frames them as CSV lines
over the simulated serial link, one frame per cadence tick."""
from __future__ import annotations

import logging
import math
from typing import Callable

from .channels import ChannelClosed, SerialLink

log = logging.getLogger(__name__)

HUB_CADENCE_S = 0.1

# (ecg counts, ambient C, object C, lead status)
SensorSampler = Callable[[], tuple[int, float, float, int]]


class InvalidField(ValueError):
    """A frame field failed validation before serialization."""


def frame_csv(ecg: int, ambient_c: float, object_c: float, lead: int) -> str:
    """Serialize one reading as "ecg,ambient,object,lead\\n".

    Temperatures carry exactly two decimals; ecg and lead are integers.
    This format is frozen: the parser on the monitor side and the golden
    fixtures both depend on it byte for byte.
    """
    if not isinstance(ecg, int):
        raise InvalidField(f"ecg must be an integer, got {type(ecg).__name__}")
    if not (math.isfinite(ambient_c) and math.isfinite(object_c)):
        raise InvalidField("temperatures must be finite")
    if lead not in (0, 1):
        raise InvalidField(f"lead must be 0 or 1, got {lead!r}")
    return f"{ecg:d},{ambient_c:.2f},{object_c:.2f},{lead:d}\n"


class SensorHub:
    """Writes one CSV frame per tick; the caller owns the cadence clock."""

    def __init__(self, sampler: SensorSampler, sink: SerialLink):
        self.sampler = sampler
        self.sink = sink
        self.frames_sent = 0
        self.stopped = False

    def tick(self) -> str | None:
        if self.stopped:
            return None
        ecg, ambient, obj, lead = self.sampler()
        frame = frame_csv(ecg, ambient, obj, lead)
        try:
            self.sink.write_frame(frame.encode("ascii"))
        except ChannelClosed:
            self.stopped = True
            log.info("serial sink closed after %d frames", self.frames_sent)
            return None
        self.frames_sent += 1
        return frame


def hub_loop(sampler: SensorSampler, sink: SerialLink, ticks: int,
             cadence_s: float = HUB_CADENCE_S) -> SensorHub:
    """Drive a hub for a fixed number of cadence ticks (simulated time)."""
    hub = SensorHub(sampler, sink)
    for _ in range(ticks):
        if hub.tick() is None:
            break
    return hub
