"""Buffer estimation for candidate deliveries and downlink airtime shares.

The buffer estimate projects a client's playout buffer to the moment a
candidate chunk would finish arriving, covering the four delivery scenarios:
{backhaul, cache} x {empty, backlogged} downlink queue. The airtime allocator
gives stall-endangered clients exactly the share they need and splits the
rest equally; the equal allocator is the baseline used by the non-adaptive
schemes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BufferEstimateInput:
    current_buffer_s: float
    backhaul_delay_s: float     # download wait incl. queueing; 0 if cache-served
    dl_transmit_s: float        # candidate bits / (C * theta)
    dl_queue_bits: float
    dl_queue_media_s: float     # playable seconds of whole untransmitted chunks
    effective_rate_bps: float   # C * theta assumed during selection
    from_cache: bool


def estimate_buffer(inp: BufferEstimateInput) -> float:
    """Projected buffer seconds at candidate arrival; may be negative."""
    if inp.dl_queue_bits < 0 or inp.dl_queue_media_s < 0:
        raise ValueError("queue fields must be non-negative")
    b = inp.current_buffer_s
    t_dl = inp.dl_transmit_s
    if inp.dl_queue_bits == 0:
        if inp.from_cache:
            return b - t_dl
        return b - (inp.backhaul_delay_s + t_dl)
    if inp.effective_rate_bps > 0:
        drain_s = inp.dl_queue_bits / inp.effective_rate_bps
    else:
        drain_s = math.inf
    if inp.from_cache:
        return b - drain_s - t_dl + inp.dl_queue_media_s
    return b - max(drain_s, inp.backhaul_delay_s) - t_dl + inp.dl_queue_media_s


@dataclass(frozen=True)
class ClientLoad:
    client_id: int
    dl_queue_bits: float
    buffer_s: float
    avg_queued_bitrate_bps: float
    link_capacity_bps: float
    buffered_chunks: float
    playing: bool = True


@dataclass(frozen=True)
class AirtimeAllocation:
    shares: dict[int, float]
    risky: frozenset[int]

    def total(self) -> float:
        return sum(self.shares.values())


def allocate_airtime(
    clients: list[ClientLoad],
    b_min_s: float,
    t_ap_s: float,
    sufficient_chunks: float = 2.0,
) -> AirtimeAllocation:
    """Stall-aware shares: risky clients get what they need, scaled down
    proportionally if the needs exceed the interval; the leftover is split
    equally among the remaining clients with queued data, where playing
    clients already holding `sufficient_chunks` of media step aside until
    everyone hungrier has all the airtime they can use.
    """
    if t_ap_s <= 0:
        raise ValueError("t_ap_s must be > 0")
    shares: dict[int, float] = {}
    required: dict[int, float] = {}
    for c in sorted(clients, key=lambda c: c.client_id):
        if c.link_capacity_bps <= 0:
            raise ValueError("link_capacity_bps must be > 0")
        need_bits = min(c.dl_queue_bits, (b_min_s - c.buffer_s) * c.avg_queued_bitrate_bps)
        theta = need_bits / (c.link_capacity_bps * t_ap_s)
        required[c.client_id] = theta
        shares[c.client_id] = 0.0

    risky = frozenset(cid for cid, th in required.items() if th > 0)
    total_risky = sum(required[cid] for cid in sorted(risky))
    scale = 1.0 / total_risky if total_risky > 1.0 else 1.0
    for cid in sorted(risky):
        shares[cid] = required[cid] * scale

    # a player still filling toward its start threshold has no playout drain,
    # so parking it at the sufficiency cutoff would freeze the session
    excluded = frozenset(
        c.client_id for c in clients
        if c.playing and c.buffered_chunks >= sufficient_chunks
    )
    for cid in sorted(excluded):
        shares[cid] = 0.0

    residual = 1.0 - sum(shares.values())
    if residual > 0:
        ordered = [c for c in sorted(clients, key=lambda c: c.client_id)
                   if c.client_id not in risky and c.dl_queue_bits > 0]
        hungry = [c for c in ordered if c.client_id not in excluded]
        sated = [c for c in ordered if c.client_id in excluded]
        # airtime a client cannot fill within the interval is dead, so each
        # equal share is capped at what the queue can absorb and the surplus
        # falls through to the well-buffered clients instead of idling
        for tier in (hungry, sated):
            residual = _fill_equally(tier, shares, residual, t_ap_s)
            if residual <= 0:
                break
    return AirtimeAllocation(shares=shares, risky=risky)


def _fill_equally(tier: list[ClientLoad], shares: dict[int, float],
                  residual: float, t_ap_s: float) -> float:
    """Split `residual` equally across the tier, capping each share at what
    the client's queue can absorb within the interval; returns the surplus.
    """
    live = [
        (c.client_id, c.dl_queue_bits / (c.link_capacity_bps * t_ap_s) - shares[c.client_id])
        for c in tier
    ]
    live = [(cid, room) for cid, room in live if room > 0]
    while live and residual > 1e-12:
        per = residual / len(live)
        nxt = []
        for cid, room in live:
            grant = min(per, room)
            shares[cid] += grant
            residual -= grant
            if room - grant > 1e-12:
                nxt.append((cid, room - grant))
        if len(nxt) == len(live):    # nobody hit a cap; split is final
            break
        live = nxt
    return max(residual, 0.0)


def equal_airtime(clients: list[ClientLoad]) -> AirtimeAllocation:
    """1/n share for every client with queued data; idle slices go unused."""
    shares = {c.client_id: 0.0 for c in clients}
    if clients:
        per = 1.0 / len(clients)
        for c in clients:
            if c.dl_queue_bits > 0:
                shares[c.client_id] = per
    return AirtimeAllocation(shares=shares, risky=frozenset())
