"""In-process channel plumbing: command queues, serial byte links, telemetry fan-out.

All channels are thread-safe so the same wiring works for the deterministic
single-threaded kernel and for the live server mode where HTTP/WebSocket
handlers feed the simulation from other threads.
"""
from __future__ import annotations

import threading
from collections import deque
from typing import Any, Callable, Generic, Iterator, TypeVar

T = TypeVar("T")


class ChannelClosed(Exception):
    """Raised when sending to or receiving from a closed channel."""


class Channel(Generic[T]):
    """Unbounded thread-safe FIFO with explicit close semantics."""

    def __init__(self, name: str = "") -> None:
        self.name = name
        self._items: deque[T] = deque()
        self._lock = threading.Lock()
        self._closed = False

    def send(self, item: T) -> None:
        with self._lock:
            if self._closed:
                raise ChannelClosed(self.name or "channel")
            self._items.append(item)

    def close(self) -> None:
        with self._lock:
            self._closed = True

    @property
    def closed(self) -> bool:
        with self._lock:
            return self._closed and not self._items

    def recv_nowait(self) -> T | None:
        """Pop the oldest item, or None if empty. Raises once closed and drained."""
        with self._lock:
            if self._items:
                return self._items.popleft()
            if self._closed:
                raise ChannelClosed(self.name or "channel")
            return None

    def drain(self) -> list[T]:
        """Pop everything currently queued, in arrival order."""
        with self._lock:
            items = list(self._items)
            self._items.clear()
            return items

    def take_latest(self) -> tuple[T | None, int]:
        """Pop all queued items, returning (newest, number discarded).

        Used by consumers that only honor the most recent value per tick.
        """
        items = self.drain()
        if not items:
            return None, 0
        return items[-1], len(items) - 1

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


class SerialLink:
    """Simulated serial line: a byte stream carrying newline-terminated frames.

    Writers append whole frames; readers may pull arbitrary byte chunks but
    ``read_lines`` only ever yields complete lines, so a frame is either seen
    whole or not at all. Optional frame corruption (one byte replaced with
    ``?``) exercises parser robustness downstream.
    """

    def __init__(self, corrupt_frame_probability: float = 0.0, rng=None) -> None:
        if corrupt_frame_probability and rng is None:
            raise ValueError("corruption requires an rng")
        self.corrupt_frame_probability = corrupt_frame_probability
        self._rng = rng
        self._buf = bytearray()
        self._pending = bytearray()  # bytes read but not yet terminated
        self._lock = threading.Lock()
        self._closed = False
        self.frames_written = 0
        self.frames_corrupted = 0

    def write_frame(self, frame: bytes) -> None:
        if not frame.endswith(b"\n"):
            raise ValueError("serial frames must be newline-terminated")
        with self._lock:
            if self._closed:
                raise ChannelClosed("serial")
            if self.corrupt_frame_probability and self._rng.random() < self.corrupt_frame_probability:
                body = bytearray(frame[:-1])
                if body:
                    body[self._rng.integers(0, len(body))] = ord("?")
                    frame = bytes(body) + b"\n"
                    self.frames_corrupted += 1
            self._buf.extend(frame)
            self.frames_written += 1

    def close(self) -> None:
        with self._lock:
            self._closed = True

    @property
    def closed(self) -> bool:
        with self._lock:
            return self._closed and not self._buf

    def read_chunk(self, max_bytes: int | None = None) -> bytes:
        """Pull up to max_bytes raw bytes off the line (may split frames)."""
        with self._lock:
            if max_bytes is None:
                max_bytes = len(self._buf)
            chunk = bytes(self._buf[:max_bytes])
            del self._buf[:max_bytes]
            return chunk

    def read_lines(self, chunk_size: int | None = None) -> list[str]:
        """Return every complete line currently available, never partials."""
        chunk = self.read_chunk(chunk_size)
        lines: list[str] = []
        with self._lock:
            self._pending.extend(chunk)
            while True:
                nl = self._pending.find(b"\n")
                if nl < 0:
                    break
                raw = self._pending[: nl + 1]
                del self._pending[: nl + 1]
                lines.append(raw.decode("ascii", errors="replace"))
        return lines


class Subscription(Generic[T]):
    """Bounded per-subscriber queue; overflow drops the newest event."""

    def __init__(self, maxlen: int) -> None:
        self._items: deque[T] = deque()
        self._maxlen = maxlen
        self._lock = threading.Lock()
        self._event = threading.Event()
        self.dropped = 0

    def push(self, item: T) -> None:
        with self._lock:
            if len(self._items) >= self._maxlen:
                self.dropped += 1
                return
            self._items.append(item)
            self._event.set()

    def pop(self, timeout: float | None = None) -> T | None:
        """Pop the oldest event, waiting up to timeout if empty."""
        while True:
            with self._lock:
                if self._items:
                    return self._items.popleft()
                self._event.clear()
            if not self._event.wait(timeout):
                return None

    def drain(self) -> list[T]:
        with self._lock:
            items = list(self._items)
            self._items.clear()
            return items


class TelemetryBus:
    """Broadcast hub for telemetry events.

    Every event is appended to the in-memory log (the JSON-lines source of
    truth) and fanned out to subscribers. Slow subscribers lose events rather
    than stalling the simulation.
    """

    def __init__(self, queue_size: int = 512) -> None:
        self._subs: list[Subscription[dict[str, Any]]] = []
        self._lock = threading.Lock()
        self._queue_size = queue_size
        self.events: list[dict[str, Any]] = []
        self._listeners: list[Callable[[dict[str, Any]], None]] = []

    def subscribe(self) -> Subscription[dict[str, Any]]:
        sub: Subscription[dict[str, Any]] = Subscription(self._queue_size)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def add_listener(self, fn: Callable[[dict[str, Any]], None]) -> None:
        """Synchronous hook, e.g. an incremental JSONL writer."""
        with self._lock:
            self._listeners.append(fn)

    def publish(self, event: dict[str, Any]) -> None:
        with self._lock:
            self.events.append(event)
            subs = list(self._subs)
            listeners = list(self._listeners)
        for fn in listeners:
            fn(event)
        for sub in subs:
            sub.push(event)

    def by_kind(self, kind: str) -> Iterator[dict[str, Any]]:
        return (e for e in self.events if e.get("kind") == kind)
