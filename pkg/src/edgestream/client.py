"""DASH client model: rate-based adaptation, request gating, playout, stalls.

The client estimates throughput as the harmonic mean of its last five
per-chunk download rates and requests the highest bitrate strictly below the
estimate (lowest level on a cold start). Before playout it bursts requests
back to back, uncapped, until the buffer plus in-flight media reaches
capacity; playout begins once the buffer first fills, after which at most
three requests may be outstanding and only while the buffer has room for
another whole chunk. A client is silent before its session start time;
startup latency and session time are measured from that start.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .catalog import QualityLadder

_EPS = 1e-9


@dataclass(frozen=True)
class ChunkRequest:
    client_id: int
    video_id: int
    chunk_index: int
    quality_index: int
    issue_time_s: float


def harmonic_mean_rate(samples) -> float | None:
    """n over the sum of reciprocals; None signals a cold start."""
    xs = list(samples)
    if not xs:
        return None
    return len(xs) / sum(1.0 / x for x in xs)


def select_quality(estimate_bps: float | None, bitrates_bps) -> int:
    """Highest level strictly below the estimate; floor on cold start."""
    if estimate_bps is None:
        return 0
    pick = 0
    for m, rate in enumerate(bitrates_bps):
        if rate < estimate_bps:
            pick = m
    return pick


class DashClient:
    def __init__(
        self,
        client_id: int,
        ladder: QualityLadder,
        b_max_s: float,
        start_threshold_s: float | None = None,
        max_in_flight: int = 3,
        rate_window: int = 5,
        start_time_s: float = 0.0,
    ):
        if start_time_s < 0:
            raise ValueError("start_time_s must be >= 0")
        self.client_id = client_id
        self.video_id = ladder.video_id
        self.ladder = ladder
        self.b_max_s = b_max_s
        self.start_threshold_s = b_max_s if start_threshold_s is None else start_threshold_s
        self.max_in_flight = max_in_flight
        self.rates = deque(maxlen=rate_window)
        self.start_time_s = start_time_s

        self.buffer_s = 0.0
        self.next_chunk = 0
        self.in_flight: dict[int, ChunkRequest] = {}
        self.playout_started = False
        self.startup_latency_s: float | None = None
        self.played_s = 0.0
        self.stall_time_s = 0.0
        self.finished = False
        self.finish_time_s: float | None = None
        self.last_time_s = 0.0
        self.delivered_chunks = 0

    @property
    def total_media_s(self) -> float:
        return self.ladder.chunk_count * self.ladder.chunk_duration_s

    def advance_to(self, t: float) -> None:
        """Consume buffer up to time t; idle time with an empty buffer
        after playout start counts as stalling."""
        dt = t - self.last_time_s
        if dt <= 0:
            return
        self.last_time_s = t
        if not self.playout_started or self.finished:
            return
        playable = min(self.buffer_s, dt, self.total_media_s - self.played_s)
        self.buffer_s -= playable
        self.played_s += playable
        if self.played_s >= self.total_media_s - _EPS:
            self.finished = True
            self.finish_time_s = t - (dt - playable)
            return
        self.stall_time_s += dt - playable

    def on_chunk_delivered(
        self, t: float, chunk_index: int, quality_index: int,
        size_bits: float, issue_time_s: float,
    ) -> None:
        self.advance_to(t)
        self.in_flight.pop(chunk_index, None)
        self.buffer_s += self.ladder.chunk_duration_s
        self.delivered_chunks += 1
        duration = t - issue_time_s
        if duration > 0:
            self.rates.append(size_bits / duration)
        if not self.playout_started and self.buffer_s >= self.start_threshold_s - _EPS:
            self.playout_started = True
            self.startup_latency_s = t - self.start_time_s

    def maybe_issue_requests(self, t: float) -> list[ChunkRequest]:
        """All requests the gating rules allow at time t, in chunk order."""
        self.advance_to(t)
        issued: list[ChunkRequest] = []
        if t < self.start_time_s - _EPS:
            return issued
        tau = self.ladder.chunk_duration_s
        while self.next_chunk < self.ladder.chunk_count and not self.finished:
            n_out = len(self.in_flight)
            if self.playout_started:
                if n_out >= self.max_in_flight:
                    break
                if self.buffer_s + tau * (n_out + 1) > self.b_max_s + _EPS:
                    break
            else:
                if self.buffer_s + tau * n_out >= self.b_max_s - _EPS:
                    break
            quality = select_quality(harmonic_mean_rate(self.rates), self.ladder.bitrates_bps)
            req = ChunkRequest(self.client_id, self.video_id, self.next_chunk, quality, t)
            self.in_flight[self.next_chunk] = req
            self.next_chunk += 1
            issued.append(req)
        return issued

    def session_time_s(self, now: float) -> float:
        end = self.finish_time_s if self.finished else now
        return max(end - self.start_time_s, 0.0)

    def stall_ratio(self, now: float) -> float:
        session = self.session_time_s(now)
        if session <= 0:
            return 0.0
        return self.stall_time_s / session
