"""Access-point control loop on a fixed allocation interval.

Each interval: collect freshly issued requests, pick delivery qualities for
them under the scheme in force, route cache hits straight to per-client
downlink queues and misses into the single shared backhaul FIFO (one entry
per distinct chunk, extra requesters ride along), allocate downlink airtime,
then advance the continuous dynamics inside the window: the backhaul pipe
drains in FIFO order, finished downloads enter the cache and fan out to
waiting clients, and each client's downlink queue drains at its airtime
share of link capacity. Chunk completions are delivered to clients at exact
sub-interval times.

The engine is deterministic by construction: no randomness, no iteration
over unordered containers where order can leak into results.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .assign_core import QualityRequest, SolverParams
from .buff import buff_assign
from .buffer_airtime import ClientLoad, allocate_airtime, equal_airtime
from .cache import LruChunkCache
from .catalog import Catalog
from .client import ChunkRequest, DashClient
from .cph import Assignment, AssignmentResult, cph_assign

SCHEMES = ("CPH", "CPH-EQ", "BUFF", "CLIENT", "CLIENT-CACHE")

_EPS = 1e-9


@dataclass
class DlItem:
    video_id: int
    chunk_index: int
    quality_index: int
    requested_quality: int
    size_bits: float
    remaining_bits: float
    media_s: float
    from_cache: bool
    issue_time_s: float
    enqueue_time_s: float
    backhaul_delay_s: float


@dataclass
class BackhaulJob:
    video_id: int
    chunk_index: int
    quality_index: int
    size_bits: float
    remaining_bits: float
    media_s: float
    enqueue_time_s: float
    # (client_id, issue_time_s, requested_quality) per rider
    waiters: list[tuple[int, float, int]] = field(default_factory=list)


@dataclass(frozen=True)
class DeliveryEvent:
    time_s: float
    client_id: int
    video_id: int
    chunk_index: int
    requested_quality: int
    delivered_quality: int
    from_cache: bool
    backhaul_delay_s: float
    dl_delay_s: float


@dataclass
class SimulationResult:
    scheme: str
    t_end_s: float
    delivered_chunks: int
    delivered_bits: float
    cache_bits: float
    backhaul_attributed_bits: float
    pipe_bits: float
    bitrate_sum_bps: float
    solver_calls: int
    solver_fallbacks: int
    startup_latencies_s: list[float]
    stall_ratios: list[float]
    all_finished: bool
    violations: list[str]
    events: list[DeliveryEvent]

    @property
    def mean_bitrate_kbps(self) -> float:
        if self.delivered_chunks == 0:
            return 0.0
        return self.bitrate_sum_bps / self.delivered_chunks / 1e3

    @property
    def cache_bit_hit_ratio(self) -> float:
        if self.delivered_bits == 0:
            return 0.0
        return self.cache_bits / self.delivered_bits

    @property
    def no_valid_config_fraction(self) -> float:
        if self.solver_calls == 0:
            return 0.0
        return self.solver_fallbacks / self.solver_calls


class ApEngine:
    def __init__(
        self,
        scheme: str,
        catalog: Catalog,
        clients: list[DashClient],
        link_capacities_bps: dict[int, float],
        cache: LruChunkCache,
        backhaul_bps: float,
        t_ap_s: float,
        params: SolverParams,
        sufficient_chunks: float = 2.0,
        record_events: bool = False,
        max_time_s: float | None = None,
    ):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        if t_ap_s <= 0:
            raise ValueError("t_ap_s must be > 0")
        self.scheme = scheme
        self.catalog = catalog
        self.clients = sorted(clients, key=lambda c: c.client_id)
        self.capacity = dict(link_capacities_bps)
        self.cache = cache
        self.backhaul_bps = backhaul_bps
        self.t_ap_s = t_ap_s
        self.params = params
        self.sufficient_chunks = sufficient_chunks
        self.record_events = record_events
        total_media = max((c.total_media_s for c in self.clients), default=0.0)
        self.max_time_s = max_time_s if max_time_s is not None else total_media * 50 + 60

        self._by_id = {c.client_id: c for c in self.clients}
        self.dl_queues: dict[int, deque[DlItem]] = {c.client_id: deque() for c in self.clients}
        self.fifo: deque[BackhaulJob] = deque()
        self.intake: list[ChunkRequest] = []
        self.violations: list[str] = []
        self.events: list[DeliveryEvent] = []

        self.delivered_chunks = 0
        self.delivered_bits = 0.0
        self.cache_bits = 0.0
        self.backhaul_attributed_bits = 0.0
        self.pipe_bits = 0.0
        self.bitrate_sum_bps = 0.0
        self.solver_calls = 0
        self.solver_fallbacks = 0
        self.now = 0.0

    # ---- solver-facing snapshots -------------------------------------

    def _queue_snapshot(self, client_id: int) -> tuple[float, float, float]:
        """(remaining bits, whole-chunk media seconds, mean queued bitrate)."""
        q = self.dl_queues[client_id]
        bits = 0.0
        media = 0.0
        for i, item in enumerate(q):
            bits += item.remaining_bits
            if i > 0 or item.remaining_bits == item.size_bits:
                media += item.media_s
        if media > 0:
            avg_rate = bits / media
        elif q:
            head = q[0]
            avg_rate = head.size_bits / head.media_s
        else:
            avg_rate = 0.0
        return bits, media, avg_rate

    def _build_requests(self, n1: list[ChunkRequest]) -> list[QualityRequest]:
        # selection assumes equal airtime; the realized allocation may differ
        share = 1.0 / len(self.clients)
        backlog = sum(job.remaining_bits for job in self.fifo)
        out = []
        for r in n1:
            ladder = self.catalog.ladder(r.video_id)
            bits, media, _ = self._queue_snapshot(r.client_id)
            client = self._by_id[r.client_id]
            out.append(QualityRequest(
                client_id=r.client_id,
                video_id=r.video_id,
                chunk_index=r.chunk_index,
                requested_quality=r.quality_index,
                bitrates_bps=ladder.bitrates_bps,
                chunk_duration_s=ladder.chunk_duration_s,
                buffer_s=client.buffer_s,
                link_capacity_bps=self.capacity[r.client_id],
                equal_share=share,
                dl_queue_bits=bits,
                dl_queue_media_s=media,
                fifo_backlog_bits=backlog,
                backhaul_rate_bps=self.backhaul_bps,
            ))
        return out

    # ---- scheme dispatch ---------------------------------------------

    def _available_backhaul_bps(self) -> float:
        # only the transfer actually on the wire holds a rate claim; queued
        # jobs would multiply-count a pipelining client's single stream, and
        # their pressure already reaches the solver through the queue-drain
        # term of the buffer estimates
        if self.fifo:
            head = self.fifo[0]
            return max(0.0, self.backhaul_bps - head.size_bits / head.media_s)
        return self.backhaul_bps

    def _assign(self, requests: list[QualityRequest]) -> AssignmentResult:
        if self.scheme in ("CPH", "CPH-EQ"):
            return cph_assign(requests, self.cache, self._available_backhaul_bps(), self.params)
        if self.scheme == "BUFF":
            return buff_assign(requests, self.cache, self._available_backhaul_bps(), self.params)
        if self.scheme == "CLIENT-CACHE":
            picks = tuple(
                Assignment(
                    client_id=r.client_id, video_id=r.video_id,
                    chunk_index=r.chunk_index, quality_index=r.requested_quality,
                    from_cache=self.cache.contains(r.video_id, r.chunk_index, r.requested_quality),
                    requested_quality=r.requested_quality,
                )
                for r in requests
            )
            return AssignmentResult(picks, False, None, None)
        # CLIENT: pure repeater, never reads the cache
        picks = tuple(
            Assignment(
                client_id=r.client_id, video_id=r.video_id,
                chunk_index=r.chunk_index, quality_index=r.requested_quality,
                from_cache=False, requested_quality=r.requested_quality,
            )
            for r in requests
        )
        return AssignmentResult(picks, False, None, None)

    def _check_assignment(self, a: Assignment) -> None:
        if self.scheme in ("CLIENT", "CLIENT-CACHE"):
            if a.quality_index != a.requested_quality:
                self.violations.append(
                    f"t={self.now}: {self.scheme} rewrote quality for client {a.client_id}")
        elif abs(a.quality_index - a.requested_quality) > self.params.gamma:
            self.violations.append(
                f"t={self.now}: quality shift beyond tolerance for client {a.client_id} "
                f"({a.requested_quality} -> {a.quality_index})")
        if self.scheme not in ("CLIENT",):
            cached = self.cache.contains(a.video_id, a.chunk_index, a.quality_index)
            if a.from_cache != cached:
                self.violations.append(
                    f"t={self.now}: cache flag mismatch for client {a.client_id} "
                    f"chunk ({a.video_id},{a.chunk_index},{a.quality_index})")

    # ---- per-interval step -------------------------------------------

    def _enqueue_assignments(self, n1: list[ChunkRequest], result: AssignmentResult) -> None:
        enqueued_this_rai: set[tuple[int, int, int]] = set()
        for req, a in zip(n1, result.assignments):
            self._check_assignment(a)
            ladder = self.catalog.ladder(a.video_id)
            size = self.catalog.chunk_size_bits(a.video_id, a.chunk_index, a.quality_index)
            media = ladder.chunk_duration_s
            key = (a.video_id, a.chunk_index, a.quality_index)
            if a.from_cache:
                self.cache.touch(*key)
                self.dl_queues[a.client_id].append(DlItem(
                    video_id=a.video_id, chunk_index=a.chunk_index,
                    quality_index=a.quality_index, requested_quality=a.requested_quality,
                    size_bits=size, remaining_bits=size, media_s=media,
                    from_cache=True, issue_time_s=req.issue_time_s,
                    enqueue_time_s=self.now, backhaul_delay_s=0.0,
                ))
                continue
            existing = next((j for j in self.fifo if (j.video_id, j.chunk_index,
                                                      j.quality_index) == key), None)
            if existing is not None:
                existing.waiters.append((a.client_id, req.issue_time_s, a.requested_quality))
            else:
                if key in enqueued_this_rai:
                    self.violations.append(
                        f"t={self.now}: chunk {key} charged to backhaul twice in one interval")
                self.fifo.append(BackhaulJob(
                    video_id=a.video_id, chunk_index=a.chunk_index,
                    quality_index=a.quality_index, size_bits=size,
                    remaining_bits=size, media_s=media, enqueue_time_s=self.now,
                    waiters=[(a.client_id, req.issue_time_s, a.requested_quality)],
                ))
                enqueued_this_rai.add(key)

    def _allocate(self) -> dict[int, float]:
        loads = []
        for c in self.clients:
            bits, media, avg_rate = self._queue_snapshot(c.client_id)
            loads.append(ClientLoad(
                client_id=c.client_id,
                dl_queue_bits=bits,
                buffer_s=c.buffer_s,
                avg_queued_bitrate_bps=avg_rate,
                link_capacity_bps=self.capacity[c.client_id],
                buffered_chunks=c.buffer_s / c.ladder.chunk_duration_s,
                playing=c.playout_started,
            ))
        if self.scheme in ("CPH", "BUFF"):
            alloc = allocate_airtime(loads, self.params.b_min_s, self.t_ap_s,
                                     self.sufficient_chunks)
        else:
            alloc = equal_airtime(loads)
        total = alloc.total()
        if total > 1.0 + 1e-9:
            self.violations.append(f"t={self.now}: airtime shares sum to {total}")
        return alloc.shares

    def _deliver(self, t: float, client_id: int, item: DlItem) -> None:
        client = self._by_id[client_id]
        client.on_chunk_delivered(t, item.chunk_index, item.quality_index,
                                  item.size_bits, item.issue_time_s)
        self.delivered_chunks += 1
        self.delivered_bits += item.size_bits
        if item.from_cache:
            self.cache_bits += item.size_bits
        else:
            self.backhaul_attributed_bits += item.size_bits
        ladder = self.catalog.ladder(item.video_id)
        self.bitrate_sum_bps += ladder.bitrates_bps[item.quality_index]
        if self.record_events:
            self.events.append(DeliveryEvent(
                time_s=t, client_id=client_id, video_id=item.video_id,
                chunk_index=item.chunk_index, requested_quality=item.requested_quality,
                delivered_quality=item.quality_index, from_cache=item.from_cache,
                backhaul_delay_s=item.backhaul_delay_s,
                dl_delay_s=t - item.enqueue_time_s,
            ))
        self.intake.extend(client.maybe_issue_requests(t))

    def _serve_segment(self, t0: float, t1: float, shares: dict[int, float]) -> None:
        """Drain downlink queues over [t0, t1]; deliveries fire in time order."""
        if t1 <= t0:
            return
        completions: list[tuple[float, int, DlItem]] = []
        for c in self.clients:
            theta = shares.get(c.client_id, 0.0)
            if theta <= 0:
                continue
            rate = self.capacity[c.client_id] * theta
            q = self.dl_queues[c.client_id]
            cursor = t0
            while q and cursor < t1 - _EPS:
                head = q[0]
                finish = cursor + head.remaining_bits / rate
                if finish <= t1 + _EPS:
                    completions.append((min(finish, t1), c.client_id, head))
                    q.popleft()
                    cursor = finish
                else:
                    head.remaining_bits -= rate * (t1 - cursor)
                    cursor = t1
        completions.sort(key=lambda e: (e[0], e[1]))
        for (t, cid, item) in completions:
            self._deliver(t, cid, item)

    def _complete_backhaul_job(self, t: float, job: BackhaulJob) -> None:
        self.cache.insert(job.video_id, job.chunk_index, job.quality_index, job.size_bits)
        for (cid, issue_time, requested_m) in job.waiters:
            self.dl_queues[cid].append(DlItem(
                video_id=job.video_id, chunk_index=job.chunk_index,
                quality_index=job.quality_index, requested_quality=requested_m,
                size_bits=job.size_bits, remaining_bits=job.size_bits,
                media_s=job.media_s, from_cache=False, issue_time_s=issue_time,
                enqueue_time_s=t, backhaul_delay_s=t - job.enqueue_time_s,
            ))

    def step_rai(self) -> None:
        t = self.now
        for c in self.clients:
            c.advance_to(t)
            self.intake.extend(c.maybe_issue_requests(t))
        n1 = sorted(self.intake, key=lambda r: (r.issue_time_s, r.client_id, r.chunk_index))
        self.intake = []
        if n1:
            requests = self._build_requests(n1)
            result = self._assign(requests)
            if self.scheme in ("CPH", "CPH-EQ", "BUFF"):
                self.solver_calls += 1
                if result.no_valid_config:
                    self.solver_fallbacks += 1
            self._enqueue_assignments(n1, result)
        shares = self._allocate()

        end = t + self.t_ap_s
        cursor = t
        drained = 0.0
        while True:
            if self.fifo and self.backhaul_bps > 0:
                head = self.fifo[0]
                t_done = cursor + head.remaining_bits / self.backhaul_bps
            else:
                t_done = math.inf
            if t_done <= end + _EPS:
                # job finishes inside the window: pop it outright so float
                # roundoff can never strand a sliver of it in the queue
                seg_end = min(t_done, end)
                self._serve_segment(cursor, seg_end, shares)
                drained += head.remaining_bits
                head.remaining_bits = 0.0
                self.fifo.popleft()
                self._complete_backhaul_job(seg_end, head)
                cursor = seg_end
                if cursor >= end - _EPS:
                    break
                continue
            self._serve_segment(cursor, end, shares)
            if self.fifo and self.backhaul_bps > 0:
                sent = (end - cursor) * self.backhaul_bps
                head = self.fifo[0]
                head.remaining_bits -= sent
                drained += sent
            cursor = end
            break
        if drained > self.backhaul_bps * self.t_ap_s * (1 + 1e-9):
            self.violations.append(f"t={t}: backhaul drained {drained} bits in one interval")
        self.pipe_bits += drained
        self.now = end

    def run(self) -> SimulationResult:
        while self.now < self.max_time_s:
            if all(c.finished for c in self.clients):
                break
            self.step_rai()
        t_end = self.now
        for c in self.clients:
            c.advance_to(t_end)
        expected = self.cache_bits + self.backhaul_attributed_bits
        if abs(expected - self.delivered_bits) > 1e-6 * max(self.delivered_bits, 1.0):
            self.violations.append(
                f"delivered bits {self.delivered_bits} != cache {self.cache_bits} "
                f"+ backhaul {self.backhaul_attributed_bits}")
        return SimulationResult(
            scheme=self.scheme,
            t_end_s=t_end,
            delivered_chunks=self.delivered_chunks,
            delivered_bits=self.delivered_bits,
            cache_bits=self.cache_bits,
            backhaul_attributed_bits=self.backhaul_attributed_bits,
            pipe_bits=self.pipe_bits,
            bitrate_sum_bps=self.bitrate_sum_bps,
            solver_calls=self.solver_calls,
            solver_fallbacks=self.solver_fallbacks,
            startup_latencies_s=[c.startup_latency_s for c in self.clients
                                 if c.startup_latency_s is not None],
            stall_ratios=[c.stall_ratio(t_end) for c in self.clients],
            all_finished=all(c.finished for c in self.clients),
            violations=self.violations,
            events=self.events,
        )
