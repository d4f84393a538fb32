"""Clock-offset estimation against the server and pairwise alignment of
recordings.

Each device exchanges NTP-style timestamp quadruples with the server while
it records. The round with the lowest round-trip time gives the offset
estimate (classic minimum-RTT filtering); the device then rebases its
capture timestamp onto the server clock. Residual error is bounded by the
round's delay asymmetry and is absorbed by the lag window during scoring.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Sequence

from .audio import AudioSample
from .errors import DurationMismatch, FsMismatch, NoRounds

# Shortest common window two recordings must share to be comparable.
MIN_OVERLAP_MS = 2500

# Sync exchanges interleaved with one recording window.
DEFAULT_SYNC_ROUNDS = 8


@dataclass(frozen=True)
class SyncRound:
    """One timestamp exchange: t1/t4 on the client clock, t2/t3 on the
    server clock, all integer milliseconds."""

    t1: int
    t2: int
    t3: int
    t4: int

    def __post_init__(self):
        if self.t4 < self.t1:
            raise ValueError("t4 precedes t1 on the client clock")
        if self.t3 < self.t2:
            raise ValueError("t3 precedes t2 on the server clock")

    @property
    def rtt_ms(self) -> int:
        return (self.t4 - self.t1) - (self.t3 - self.t2)

    @property
    def offset_ms(self) -> float:
        """Estimated server-minus-client clock difference."""
        return ((self.t2 - self.t1) + (self.t3 - self.t4)) / 2


@dataclass(frozen=True)
class ClockOffset:
    offset_ms: float
    rtt_ms: int
    rounds_used: int


def estimate_offset(rounds: Sequence[SyncRound]) -> ClockOffset:
    """Offset from the minimum-RTT round of a collection of exchanges."""
    if not rounds:
        raise NoRounds("at least one sync round is required")
    best = min(rounds, key=lambda r: r.rtt_ms)
    if best.rtt_ms < 0:
        raise ValueError("negative round-trip time")
    return ClockOffset(offset_ms=best.offset_ms, rtt_ms=best.rtt_ms,
                       rounds_used=len(rounds))


def adjust_timestamp(local_ms: int, offset: ClockOffset) -> int:
    """Rebase a local-clock timestamp onto the server clock."""
    return round(local_ms + offset.offset_ms)


def collect_rounds(exchange: Callable[[int], tuple[int, int]],
                   clock_ms: Callable[[], int],
                   count: int = DEFAULT_SYNC_ROUNDS) -> list[SyncRound]:
    """Run `count` sync exchanges; `exchange(t1) -> (t2, t3)` performs one
    request against the server."""
    rounds = []
    for _ in range(count):
        t1 = clock_ms()
        t2, t3 = exchange(t1)
        rounds.append(SyncRound(t1=t1, t2=t2, t3=t3, t4=clock_ms()))
    return rounds


class SyncCollector:
    """Runs sync rounds on a background thread while recording proceeds.

    Rounds land in order; result() joins and returns them.
    """

    def __init__(self, exchange: Callable[[int], tuple[int, int]],
                 clock_ms: Callable[[], int],
                 count: int = DEFAULT_SYNC_ROUNDS):
        self._rounds: list[SyncRound] = []
        self._error: Exception | None = None

        def run():
            try:
                self._rounds = collect_rounds(exchange, clock_ms, count)
            except Exception as exc:  # surfaced from result()
                self._error = exc

        self._thread = threading.Thread(target=run, daemon=True)

    def start(self) -> "SyncCollector":
        self._thread.start()
        return self

    def result(self, timeout: float | None = None) -> list[SyncRound]:
        self._thread.join(timeout)
        if self._error is not None:
            raise self._error
        return self._rounds


def _trim(sample: AudioSample, start_ms: int, length_ms: int) -> AudioSample:
    head = start_ms - sample.captured_at
    i0 = round(head * sample.fs / 1000)
    n = round(length_ms * sample.fs / 1000)
    i1 = i0 + n
    if i1 > sample.pcm.size:  # rounding spill of at most one sample
        i1 = sample.pcm.size
        i0 = i1 - n
    return AudioSample(pcm=sample.pcm[i0:i1], fs=sample.fs,
                       captured_at=start_ms, duration_ms=length_ms,
                       device_id=sample.device_id)


def align(a: AudioSample, b: AudioSample) -> tuple[AudioSample, AudioSample]:
    """Trim two server-clock-stamped recordings to their common window.

    Both outputs start at the same server time and have equal sample
    counts. Raises DurationMismatch when the overlap is shorter than
    MIN_OVERLAP_MS.
    """
    if a.fs != b.fs:
        raise FsMismatch(f"sampling rates differ: {a.fs} != {b.fs}")
    start = max(a.captured_at, b.captured_at)
    end = min(a.captured_at + a.duration_ms, b.captured_at + b.duration_ms)
    overlap = end - start
    if overlap < MIN_OVERLAP_MS:
        raise DurationMismatch(
            f"common window {overlap} ms is shorter than the "
            f"{MIN_OVERLAP_MS} ms minimum")
    return _trim(a, start, overlap), _trim(b, start, overlap)
