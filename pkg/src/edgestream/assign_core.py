"""Shared quality-assignment primitives.

Both solvers consume the same per-request context (QualityRequest), the same
tolerated-quality window, the same delivery-cost rule and the same utility
function, so their outputs are comparable candidate by candidate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .buffer_airtime import BufferEstimateInput, estimate_buffer
from .cache import LruChunkCache


@dataclass(frozen=True)
class SolverParams:
    gamma: int = 2
    mu_c: float = 1.3
    b_min_s: float = 4.0
    b_max_s: float = 15.0
    pareto_cap: int | None = None  # max configurations retained after pruning
    bitrate_unit_bps: float = 1e3  # log() argument unit for utility values

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.mu_c < 1.0:
            raise ValueError("mu_c must be >= 1")
        if not (0 < self.b_min_s < self.b_max_s):
            raise ValueError("need 0 < b_min_s < b_max_s")
        if self.pareto_cap is not None and self.pareto_cap < 1:
            raise ValueError("pareto_cap must be >= 1 when set")


@dataclass(frozen=True)
class QualityRequest:
    """One pending chunk request plus the state needed to score candidates.

    Snapshot semantics: buffer, queue and backlog fields describe the state
    at the allocation instant; the solver treats them as immutable.
    """
    client_id: int
    video_id: int
    chunk_index: int
    requested_quality: int
    bitrates_bps: tuple[float, ...]
    chunk_duration_s: float
    buffer_s: float
    link_capacity_bps: float
    equal_share: float            # airtime fraction assumed while selecting
    dl_queue_bits: float          # bits already queued for this client
    dl_queue_media_s: float       # playable seconds of whole queued chunks
    fifo_backlog_bits: float      # bits ahead in the shared download FIFO
    backhaul_rate_bps: float


@dataclass(frozen=True)
class CandidateQuality:
    client_id: int
    video_id: int
    chunk_index: int
    quality_index: int
    bitrate_bps: float
    cached: bool
    cost_bps: float
    estimated_buffer_s: float
    utility: float


def tolerated_set(requested_m: int, gamma: int, ladder_size: int) -> tuple[int, ...]:
    """Symmetric window of quality indices around the request, clipped."""
    if not (0 <= requested_m < ladder_size):
        raise ValueError(f"requested quality {requested_m} outside ladder of {ladder_size}")
    lo = max(0, requested_m - gamma)
    hi = min(ladder_size - 1, requested_m + gamma)
    return tuple(range(lo, hi + 1))


def delivery_cost(bitrate_bps: float, cached: bool) -> float:
    """Backhaul bandwidth claimed by one delivery: zero when cache-served."""
    return 0.0 if cached else bitrate_bps


def utility(
    bitrate_bps: float,
    cached: bool,
    mu_c: float,
    b_hat_s: float,
    b_min_s: float,
    b_max_s: float,
    bitrate_unit_bps: float = 1e3,
) -> float:
    """Buffer-aware log-bitrate utility of delivering one chunk.

    Three regimes on the estimated buffer: comfortable (>= b_min) rewards
    bitrate plus clamped buffer headroom, shallow (0 < b_hat < b_min)
    rewards only the remaining buffer, and non-positive b_hat is returned
    as-is so its magnitude reads as expected stall duration.
    """
    if bitrate_bps <= 0:
        raise ValueError("bitrate_bps must be > 0")
    q = bitrate_bps / bitrate_unit_bps
    w = mu_c if cached else 1.0
    if b_hat_s >= b_min_s:
        return w * math.log(q) + math.log(min(b_hat_s, b_max_s))
    if b_hat_s > 0:
        return w * math.log(b_hat_s)
    return b_hat_s


def build_candidates(
    request: QualityRequest, cache: LruChunkCache, params: SolverParams
) -> list[CandidateQuality]:
    """Score every tolerated quality level for one request.

    Transfer-time terms use nominal chunk sizes (bitrate * duration); actual
    per-chunk sizes matter only during delivery, not selection.
    """
    out: list[CandidateQuality] = []
    effective_rate = request.link_capacity_bps * request.equal_share
    for m in tolerated_set(request.requested_quality, params.gamma, len(request.bitrates_bps)):
        rate = request.bitrates_bps[m]
        cached = cache.contains(request.video_id, request.chunk_index, m)
        chunk_bits = rate * request.chunk_duration_s
        dl_transmit_s = chunk_bits / effective_rate if effective_rate > 0 else math.inf
        if cached:
            backhaul_delay_s = 0.0
        elif request.backhaul_rate_bps > 0:
            backhaul_delay_s = (request.fifo_backlog_bits + chunk_bits) / request.backhaul_rate_bps
        else:
            backhaul_delay_s = math.inf
        b_hat = estimate_buffer(BufferEstimateInput(
            current_buffer_s=request.buffer_s,
            backhaul_delay_s=backhaul_delay_s,
            dl_transmit_s=dl_transmit_s,
            dl_queue_bits=request.dl_queue_bits,
            dl_queue_media_s=request.dl_queue_media_s,
            effective_rate_bps=effective_rate,
            from_cache=cached,
        ))
        out.append(CandidateQuality(
            client_id=request.client_id,
            video_id=request.video_id,
            chunk_index=request.chunk_index,
            quality_index=m,
            bitrate_bps=rate,
            cached=cached,
            cost_bps=delivery_cost(rate, cached),
            estimated_buffer_s=b_hat,
            utility=utility(rate, cached, params.mu_c, b_hat,
                            params.b_min_s, params.b_max_s, params.bitrate_unit_bps),
        ))
    return out
