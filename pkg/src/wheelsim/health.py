"""Health monitor: serial vitals parsing, PPG-derived BPM/SpO2, alert
hysteresis, and 10 s cloud upload scheduling, all on a 10 ms loop.

The monitor is deliberately stateless at the function level (parse, convert,
estimate, gate, schedule are pure) with one thin stateful wrapper,
HealthMonitor, that the simulation kernel steps once per 10 ms tick.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.signal import find_peaks

from .channels import Channel, SerialLink
from .netproto import AlertEvent, CloudPayload, RejectedKey, Unreachable

log = logging.getLogger(__name__)

LOOP_PERIOD_S = 0.01
UPLOAD_PERIOD_S = 10.0
WINDOW_SECONDS = 10.0
PPG_SAMPLE_RATE_HZ = 100.0
TEMP_ALERT_F = 100.0
SPO2_FLOOR_PCT = 90.0

# Peak detection tuning: peaks must clear the window mean by half a standard
# deviation and be at least 0.3 s apart, which rejects dicrotic bumps and
# additive noise up to a few percent of the pulse amplitude.
PEAK_HEIGHT_K_STD = 0.5
MIN_PEAK_GAP_S = 0.3


class MalformedFrame(ValueError):
    """Serial frame failed strict validation; dropped, never fatal."""


class SensorReadings(NamedTuple):
    ecg_value: int
    ambient_temp_c: float
    object_temp_c: float
    lead_status: int


def parse_sensor_frame(line: str) -> SensorReadings:
    """Parse one CSV serial frame: ecg, ambientC, objectC, lead.

    Strict by design: exactly four fields, integer ecg, finite float
    temperatures, lead in {0, 1}. Anything else raises MalformedFrame.
    """
    fields = line.rstrip("\r\n").split(",")
    if len(fields) != 4:
        raise MalformedFrame(f"expected 4 fields, got {len(fields)}")
    try:
        ecg = int(fields[0])
        ambient = float(fields[1])
        obj = float(fields[2])
    except ValueError as exc:
        raise MalformedFrame(str(exc)) from None
    if not (math.isfinite(ambient) and math.isfinite(obj)):
        raise MalformedFrame("non-finite temperature")
    if fields[3] == "0":
        lead = 0
    elif fields[3] == "1":
        lead = 1
    else:
        raise MalformedFrame(f"lead status must be 0 or 1, got {fields[3]!r}")
    return SensorReadings(ecg, ambient, obj, lead)


def c_to_f(celsius: float) -> float:
    if not math.isfinite(celsius):
        raise ValueError("temperature must be finite")
    return celsius * 9.0 / 5.0 + 32.0


def spo2_from_ratio(r: float) -> float:
    """Uncalibrated pulse-oximetry linearization, clamped to [0, 100]."""
    return min(100.0, max(0.0, 110.0 - 25.0 * r))


def ratio_for_spo2(spo2: float) -> float:
    """Inverse of spo2_from_ratio on the unclamped segment.

    The PPG synthesizer uses this to pick a red/IR amplitude ratio that the
    estimator maps back to the requested saturation; both directions share
    the one linearization so the round trip has no modeling gap.
    """
    return (110.0 - spo2) / 25.0


@dataclass(frozen=True)
class VitalsFrame:
    """One computed snapshot of every monitored channel.

    bpm and spo2 are None until a full PPG window has accumulated.
    """

    bpm: float | None
    spo2: float | None
    ecg_value: int
    ambient_temp_c: float
    object_temp_c: float
    lead_status: int
    timestamp: float

    @property
    def object_temp_f(self) -> float:
        return c_to_f(self.object_temp_c)


@dataclass(frozen=True)
class PpgSample:
    timestamp: float
    ir: float
    red: float


class PpgWindow:
    """Fixed-length ring buffer pair for the IR and red PPG channels."""

    def __init__(self, window_seconds: float = WINDOW_SECONDS,
                 sample_rate: float = PPG_SAMPLE_RATE_HZ):
        if window_seconds <= 0 or sample_rate <= 0:
            raise ValueError("window length and sample rate must be positive")
        self.sample_rate = sample_rate
        self.capacity = int(round(window_seconds * sample_rate))
        self._ir: deque[float] = deque(maxlen=self.capacity)
        self._red: deque[float] = deque(maxlen=self.capacity)

    def push(self, ir: float, red: float) -> None:
        self._ir.append(ir)
        self._red.append(red)

    @property
    def full(self) -> bool:
        return len(self._ir) == self.capacity

    def __len__(self) -> int:
        return len(self._ir)

    def ir_array(self) -> np.ndarray:
        return np.asarray(self._ir, dtype=np.float64)

    def red_array(self) -> np.ndarray:
        return np.asarray(self._red, dtype=np.float64)


def compute_bpm(window: PpgWindow, k_std: float = PEAK_HEIGHT_K_STD,
                min_gap_s: float = MIN_PEAK_GAP_S) -> float | None:
    """Heart rate from IR-channel peak spacing; None until estimable.

    Peaks are local maxima above mean + k_std * stddev separated by at least
    min_gap_s. Rate is 60 * (peaks - 1) / span so quantization error averages
    out over the whole window instead of compounding per interval.
    """
    if not window.full:
        return None
    ir = window.ir_array()
    height = float(ir.mean()) + k_std * float(ir.std())
    distance = max(1, int(round(min_gap_s * window.sample_rate)))
    peaks, _ = find_peaks(ir, height=height, distance=distance)
    if len(peaks) < 2:
        return None
    span_s = (peaks[-1] - peaks[0]) / window.sample_rate
    return 60.0 * (len(peaks) - 1) / span_s


def compute_spo2(window: PpgWindow) -> float | None:
    """SpO2 from the ratio of AC/DC ratios of the two channels.

    AC is peak-to-peak, DC is the window mean. Degenerate windows (any
    non-positive DC or zero AC) are unmeasurable, not errors.
    """
    if not window.full:
        return None
    ir = window.ir_array()
    red = window.red_array()
    dc_ir = float(ir.mean())
    dc_red = float(red.mean())
    if dc_ir <= 0.0 or dc_red <= 0.0:
        return None
    ac_ir = float(ir.max() - ir.min())
    ac_red = float(red.max() - red.min())
    if ac_ir == 0.0 or ac_red == 0.0:
        return None
    r = (ac_red / dc_red) / (ac_ir / dc_ir)
    return spo2_from_ratio(r)


@dataclass(frozen=True)
class AlertState:
    """Latches for the two alert conditions.

    email_sent follows the temperature automaton: set on the first reading
    at or above threshold_f, cleared by any reading below it. The SpO2 latch
    is an independent copy of the same shape around spo2_floor.
    """

    email_sent: bool = False
    spo2_alert_sent: bool = False
    threshold_f: float = TEMP_ALERT_F
    spo2_floor: float = SPO2_FLOOR_PCT


def payload_from_vitals(vitals: VitalsFrame) -> CloudPayload:
    return CloudPayload(
        bpm=vitals.bpm,
        spo2=vitals.spo2,
        ecg=vitals.ecg_value,
        object_temp_f=vitals.object_temp_f,
        ambient_temp_c=vitals.ambient_temp_c,
        lead_status=vitals.lead_status,
        timestamp=vitals.timestamp,
    )


def alert_gate(state: AlertState, vitals: VitalsFrame) -> tuple[AlertState, list[AlertEvent]]:
    """Run both alert latches against one vitals frame.

    Temperature: >= threshold fires once per armed period; strictly below
    re-arms. SpO2: same automaton below spo2_floor, but an unavailable
    reading leaves its latch untouched (no measurement, no decision). Both
    can fire on the same frame, hence a list.
    """
    events: list[AlertEvent] = []
    temp_f = vitals.object_temp_f
    email_sent = state.email_sent
    if temp_f >= state.threshold_f:
        if not email_sent:
            events.append(AlertEvent(vitals.timestamp, "objectTempF", temp_f,
                                     payload_from_vitals(vitals)))
            email_sent = True
    else:
        email_sent = False

    spo2_sent = state.spo2_alert_sent
    if vitals.spo2 is not None:
        if vitals.spo2 < state.spo2_floor:
            if not spo2_sent:
                events.append(AlertEvent(vitals.timestamp, "spo2", vitals.spo2,
                                         payload_from_vitals(vitals)))
                spo2_sent = True
        else:
            spo2_sent = False

    if email_sent == state.email_sent and spo2_sent == state.spo2_alert_sent:
        return state, events
    return replace(state, email_sent=email_sent, spo2_alert_sent=spo2_sent), events


def upload_tick(last_upload: float | None, now: float,
                vitals: VitalsFrame,
                period_s: float = UPLOAD_PERIOD_S) -> tuple[float | None, CloudPayload | None]:
    """Emit a payload when the upload period has elapsed (or never uploaded).

    Returns the new last-upload time alongside the optional payload.
    """
    if last_upload is not None and now - last_upload < period_s:
        return last_upload, None
    return now, payload_from_vitals(vitals)


@dataclass
class MonitorTick:
    """What one 10 ms iteration produced, for telemetry fan-out."""

    vitals: VitalsFrame | None
    events: list[AlertEvent]
    payload: CloudPayload | None


class HealthMonitor:
    """Stateful wrapper stepped once per loop period by the owner of time.

    Each tick ingests whatever PPG samples and serial frames have arrived,
    recomputes vitals from the latest readings, runs the alert gate, and
    schedules uploads. Sinks are fire-and-forget callables; cloud delivery
    failures are counted and dropped so the loop never stalls.
    """

    def __init__(
        self,
        serial: SerialLink,
        ppg: Channel[PpgSample],
        cloud_sink: Callable[[CloudPayload], None] | None = None,
        alert_sink: Callable[[AlertEvent], None] | None = None,
        window_seconds: float = WINDOW_SECONDS,
        sample_rate: float = PPG_SAMPLE_RATE_HZ,
        alert_state: AlertState | None = None,
        upload_period_s: float = UPLOAD_PERIOD_S,
    ):
        self.serial = serial
        self.ppg = ppg
        self.cloud_sink = cloud_sink
        self.alert_sink = alert_sink
        self.window = PpgWindow(window_seconds, sample_rate)
        self.alert_state = alert_state or AlertState()
        self.upload_period_s = upload_period_s
        self.last_upload: float | None = None
        self.last_vitals: VitalsFrame | None = None
        self._readings: SensorReadings | None = None
        self.malformed_frames = 0
        self.frames_parsed = 0
        self.uploads_sent = 0
        self.uploads_dropped = 0
        self.alerts_emitted = 0

    def tick(self, now: float) -> MonitorTick:
        for sample in self.ppg.drain():
            self.window.push(sample.ir, sample.red)

        for line in self.serial.read_lines():
            try:
                self._readings = parse_sensor_frame(line)
                self.frames_parsed += 1
            except MalformedFrame as exc:
                self.malformed_frames += 1
                log.debug("dropped malformed frame: %s", exc)

        if self._readings is None:
            # No serial data yet: nothing to gate or upload.
            return MonitorTick(None, [], None)

        ecg, ambient, obj, lead = self._readings
        vitals = VitalsFrame(
            bpm=compute_bpm(self.window),
            spo2=compute_spo2(self.window),
            ecg_value=ecg,
            ambient_temp_c=ambient,
            object_temp_c=obj,
            lead_status=lead,
            timestamp=now,
        )
        self.last_vitals = vitals

        self.alert_state, events = alert_gate(self.alert_state, vitals)
        for event in events:
            self.alerts_emitted += 1
            if self.alert_sink is not None:
                self.alert_sink(event)

        self.last_upload, payload = upload_tick(
            self.last_upload, now, vitals, self.upload_period_s)
        if payload is not None and self.cloud_sink is not None:
            try:
                self.cloud_sink(payload)
                self.uploads_sent += 1
            except (Unreachable, RejectedKey) as exc:
                self.uploads_dropped += 1
                log.warning("upload dropped: %s", exc)

        return MonitorTick(vitals, events, payload)


def monitor_loop(
    serial: SerialLink,
    ppg: Channel[PpgSample],
    cloud_sink: Callable[[CloudPayload], None] | None = None,
    alert_sink: Callable[[AlertEvent], None] | None = None,
    duration_s: float = 60.0,
    loop_period_s: float = LOOP_PERIOD_S,
    monitor: HealthMonitor | None = None,
) -> HealthMonitor:
    """Drive a monitor over simulated time at the fixed loop period.

    Every iteration is atomic (ingest, compute, gate, upload), so a payload
    scheduled in the final iteration is always handed to its sink before the
    loop returns; closure of both upstream channels ends the loop early.
    """
    monitor = monitor or HealthMonitor(serial, ppg, cloud_sink, alert_sink)
    ticks = int(round(duration_s / loop_period_s))
    for i in range(ticks):
        if monitor.serial.closed and monitor.ppg.closed and len(monitor.ppg) == 0:
            log.info("upstream channels closed after %d iterations", i)
            break
        monitor.tick(i * loop_period_s)
    return monitor
