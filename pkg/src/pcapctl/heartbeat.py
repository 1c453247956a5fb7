"""Heartbeat ingestion and windowed progress aggregation.

An instrumented application emits one timestamped beat per completed
unit of work.  The progress signal fed to the controller is the median
of the beat arrival frequencies within each sampling window: for every
beat ``t_k`` landing in the window, the interval ``t_k - t_{k-1}``
contributes the frequency ``1 / (t_k - t_{k-1})``.  The interval that
straddles a window boundary belongs to the window containing the later
beat.

Timestamps are integer nanoseconds from an arbitrary session origin so
replays are deterministic.

Wire format (local socket or replay file): newline-delimited JSON, one
object per beat::

    {"ts_ns": 123456789}

Malformed lines are counted and skipped, never fatal.
"""

from __future__ import annotations

import json
import statistics
import threading
from dataclasses import dataclass
from typing import Iterable

NS = 1_000_000_000


class OrderingError(ValueError):
    """A beat or window end went backwards in time."""


@dataclass(frozen=True)
class Heartbeat:
    """One beat; timestamp in nanoseconds since session start."""

    ts_ns: int


@dataclass(frozen=True)
class ProgressSample:
    """Aggregated progress over one sampling window.

    ``stale`` is set when the window held fewer than two usable beats and
    the previous value was carried over.
    """

    t: float          # seconds, end of window
    progress: float   # hertz, median beat frequency
    stale: bool


class HeartbeatStream:
    """Buffers beats from one source and aggregates them per window.

    Ingestion may happen from another thread; aggregation is expected
    from the single control-loop thread.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._pending: list[int] = []
        self._last_ts: int | None = None       # newest ingested beat
        self._prev_beat: int | None = None     # last beat of the previous window
        self._last_progress = 0.0
        self._has_sample = False
        self._window_end = 0.0

    def ingest(self, beat: Heartbeat) -> None:
        """Buffer one beat; timestamps must be non-decreasing."""
        with self._lock:
            if self._last_ts is not None and beat.ts_ns < self._last_ts:
                raise OrderingError(
                    f"beat at {beat.ts_ns} ns precedes previous beat at {self._last_ts} ns"
                )
            self._last_ts = beat.ts_ns
            self._pending.append(beat.ts_ns)

    def aggregate(self, window_end: float) -> ProgressSample:
        """Close the window ending at ``window_end`` seconds and return its sample."""
        if window_end <= self._window_end:
            raise OrderingError(
                f"window end {window_end} s does not advance past {self._window_end} s"
            )
        end_ns = round(window_end * NS)
        with self._lock:
            in_window = [ts for ts in self._pending if ts < end_ns]
            self._pending = [ts for ts in self._pending if ts >= end_ns]

        freqs = []
        prev = self._prev_beat
        for ts in in_window:
            if prev is not None and ts > prev:
                freqs.append(NS / (ts - prev))
            prev = ts
        if in_window:
            self._prev_beat = in_window[-1]

        self._window_end = window_end
        if freqs:
            self._last_progress = statistics.median(freqs)
            self._has_sample = True
            return ProgressSample(t=window_end, progress=self._last_progress, stale=False)
        # carry the previous value forward rather than emitting a 0 Hz
        # spike that would slam the controller to full power
        return ProgressSample(t=window_end, progress=self._last_progress, stale=True)


def parse_lines(lines: Iterable[str]) -> tuple[list[Heartbeat], int]:
    """Parse JSON-lines heartbeats; returns (beats, malformed_count)."""
    beats: list[Heartbeat] = []
    bad = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            ts = obj["ts_ns"]
            if not isinstance(ts, int) or isinstance(ts, bool):
                raise TypeError
        except (json.JSONDecodeError, KeyError, TypeError):
            bad += 1
            continue
        beats.append(Heartbeat(ts_ns=ts))
    return beats, bad


def beat_to_line(beat: Heartbeat) -> str:
    return json.dumps({"ts_ns": beat.ts_ns})


def read_replay(path) -> tuple[list[Heartbeat], int]:
    """Load a heartbeat replay file (JSON lines)."""
    with open(path) as fh:
        return parse_lines(fh)
