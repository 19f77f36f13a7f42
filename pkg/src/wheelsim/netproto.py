"""Wire formats and external-facing transports.

Everything that crosses a process boundary is defined here: the one-character
command frames carried over WebSocket, the cloud upload query string, the
alert e-mail rendering, and the pluggable delivery transports. Endpoint
hosting (HTTP/WS routes) lives in `server`; this module stays import-light so
every other module can depend on it without cycles.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import quote

from .commands import Command

log = logging.getLogger(__name__)

DEFAULT_API_KEY = "K"
DEFAULT_ALERT_RECIPIENT = "caregiver@example.org"


class InvalidFrame(ValueError):
    """Command frame failed validation (length, type, or alphabet)."""


class Unreachable(ConnectionError):
    """Cloud endpoint could not be reached; payload is dropped, not queued."""


class RejectedKey(ValueError):
    """Cloud endpoint refused the API key."""


class TransportFailure(RuntimeError):
    """Alert transport failed to deliver; the alert latch stays set."""


# --- command frames ---------------------------------------------------------

def encode_command(command: Command) -> str:
    """One command, one single-character text frame."""
    return command.value


def decode_command(frame: object) -> Command:
    """Strict inverse of encode_command.

    Accepts exactly the five one-character text frames; everything else
    (wrong type, wrong length, byte frames, characters outside the alphabet)
    raises InvalidFrame. Total over arbitrary input.
    """
    if not isinstance(frame, str):
        raise InvalidFrame(f"expected text frame, got {type(frame).__name__}")
    if len(frame) != 1:
        raise InvalidFrame(f"expected length-1 frame, got length {len(frame)}")
    try:
        return Command(frame)
    except ValueError:
        raise InvalidFrame(f"unknown command character {frame!r}") from None


# --- cloud upload -----------------------------------------------------------

@dataclass(frozen=True)
class CloudPayload:
    """One upload's worth of vitals. None means the value was unavailable
    at upload time and must serialize as an empty field, never as zero."""

    bpm: float | None
    spo2: float | None
    ecg: int | None
    object_temp_f: float | None
    ambient_temp_c: float | None
    lead_status: int | None
    timestamp: float = 0.0


def _fmt_int(value: float | None) -> str:
    return "" if value is None else str(int(round(value)))


def _fmt_2dp(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def render_query(payload: CloudPayload, api_key: str) -> str:
    """Serialize a payload to the upload query string.

    Field order and formatting are frozen (golden fixtures byte-compare):
    field1 bpm and field2 spo2 as rounded integers, field3 ecg and field6
    lead status as integers, field4/field5 temperatures with two decimals.
    """
    if not api_key:
        raise ValueError("api_key must be nonempty")
    parts = [
        f"api_key={quote(api_key, safe='')}",
        f"field1={_fmt_int(payload.bpm)}",
        f"field2={_fmt_int(payload.spo2)}",
        f"field3={_fmt_int(payload.ecg)}",
        f"field4={_fmt_2dp(payload.object_temp_f)}",
        f"field5={_fmt_2dp(payload.ambient_temp_c)}",
        f"field6={_fmt_int(payload.lead_status)}",
    ]
    return "&".join(parts)


@dataclass(frozen=True)
class CloudRequest:
    """One recorded upload as the stub server saw it."""

    entry_id: int
    query: str
    timestamp: float


class CloudStub:
    """In-process stand-in for the cloud ingestion endpoint.

    Records every request verbatim and replies with an incrementing entry
    id, the way the real service acknowledges channel updates. Thread-safe:
    the monitor loop and an HTTP route may both feed it.
    """

    def __init__(self, api_key: str = DEFAULT_API_KEY):
        self.api_key = api_key
        self.requests: list[CloudRequest] = []
        self._lock = threading.Lock()

    def handle(self, query: str, timestamp: float = 0.0) -> int:
        expected_prefix = f"api_key={quote(self.api_key, safe='')}&"
        if not query.startswith(expected_prefix):
            raise RejectedKey("api key mismatch")
        with self._lock:
            entry_id = len(self.requests) + 1
            self.requests.append(CloudRequest(entry_id, query, timestamp))
        return entry_id

    @property
    def queries(self) -> list[str]:
        with self._lock:
            return [r.query for r in self.requests]


class DirectCloudLink:
    """Uploads straight into a CloudStub, no sockets. The deterministic
    headless path."""

    def __init__(self, stub: CloudStub, api_key: str = DEFAULT_API_KEY):
        self.stub = stub
        self.api_key = api_key

    def update(self, payload: CloudPayload) -> int:
        return self.stub.handle(render_query(payload, self.api_key), payload.timestamp)


class HttpCloudLink:
    """Uploads over HTTP GET /update, mirroring the hosted-service protocol.

    Connection problems surface as Unreachable so the caller can drop the
    payload and carry on; uploads must never backpressure the monitor loop.
    """

    def __init__(self, base_url: str, api_key: str = DEFAULT_API_KEY, client=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self._client = client or httpx.Client(timeout=5.0)

    def update(self, payload: CloudPayload) -> int:
        import httpx

        url = f"{self.base_url}/update?{render_query(payload, self.api_key)}"
        try:
            response = self._client.get(url)
        except httpx.HTTPError as exc:
            raise Unreachable(str(exc)) from exc
        if response.status_code in (400, 401, 403):
            raise RejectedKey(f"endpoint returned {response.status_code}")
        if response.status_code != 200:
            raise Unreachable(f"endpoint returned {response.status_code}")
        return int(response.text)


# --- alert events and e-mail ------------------------------------------------

@dataclass(frozen=True)
class AlertEvent:
    """A threshold crossing caught by the health monitor.

    `trigger` names the offending parameter ("objectTempF" or "spo2"),
    `value` is its reading at crossing time, and `vitals` snapshots every
    channel so the notification is self-contained.
    """

    timestamp: float
    trigger: str
    value: float
    vitals: CloudPayload


@dataclass(frozen=True)
class AlertEmail:
    to: str
    subject: str
    body: str


@dataclass(frozen=True)
class DeliveryRecord:
    ok: bool
    detail: str
    email: AlertEmail


def render_alert_email(event: AlertEvent, to: str = DEFAULT_ALERT_RECIPIENT) -> AlertEmail:
    """Render an alert as key: value lines, one fact per line.

    Unavailable vitals render as empty values, matching the cloud
    serialization convention.
    """
    subject = f"Health alert: {event.trigger} at t={event.timestamp:.2f}s"
    lines = [
        f"timestamp: {event.timestamp:.2f}",
        f"trigger: {event.trigger}",
        f"value: {event.value:.2f}",
        f"beatsPerMinute: {_fmt_int(event.vitals.bpm)}",
        f"spo2: {_fmt_int(event.vitals.spo2)}",
        f"ecgValue: {_fmt_int(event.vitals.ecg)}",
        f"objectTempF: {_fmt_2dp(event.vitals.object_temp_f)}",
        f"ambientTempC: {_fmt_2dp(event.vitals.ambient_temp_c)}",
        f"leadStatus: {_fmt_int(event.vitals.lead_status)}",
    ]
    return AlertEmail(to=to, subject=subject, body="\n".join(lines) + "\n")


class FileSinkTransport:
    """Default transport: one message per file, numbered in delivery order."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._count = 0

    def deliver(self, email: AlertEmail) -> str:
        self._count += 1
        path = self.directory / f"alert_{self._count:04d}.txt"
        text = f"To: {email.to}\nSubject: {email.subject}\n\n{email.body}"
        path.write_text(text, encoding="utf-8")
        return str(path)


class MemoryTransport:
    """Keeps delivered messages in a list; handy for tests and headless runs."""

    def __init__(self, fail: bool = False):
        self.delivered: list[AlertEmail] = []
        self.fail = fail

    def deliver(self, email: AlertEmail) -> str:
        if self.fail:
            raise TransportFailure("transport configured to fail")
        self.delivered.append(email)
        return f"memory:{len(self.delivered)}"


def send_email_alert(event: AlertEvent, transport, to: str = DEFAULT_ALERT_RECIPIENT) -> DeliveryRecord:
    """Render once, hand to the transport once.

    A transport failure is recorded, never retried here: the monitor's
    emailSent latch has already been set by the time delivery is attempted,
    and a retry storm against a dead transport would starve the 10 ms loop.
    """
    email = render_alert_email(event, to)
    try:
        detail = transport.deliver(email)
        return DeliveryRecord(ok=True, detail=detail, email=email)
    except TransportFailure as exc:
        log.warning("alert delivery failed: %s", exc)
        return DeliveryRecord(ok=False, detail=str(exc), email=email)
