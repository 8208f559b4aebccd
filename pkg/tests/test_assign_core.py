"""Shared assignment primitives: tolerance window, delivery cost, utility, candidate scoring."""
from __future__ import annotations

import math

import pytest

from edgestream.assign_core import (
    QualityRequest,
    SolverParams,
    build_candidates,
    delivery_cost,
    tolerated_set,
    utility,
)
from edgestream.cache import LruChunkCache


class TestToleratedSet:
    def test_interior_window(self):
        assert tolerated_set(5, 2, 19) == (3, 4, 5, 6, 7)

    def test_clipped_at_bottom(self):
        assert tolerated_set(1, 2, 19) == (0, 1, 2, 3)

    def test_clipped_at_top(self):
        assert tolerated_set(18, 2, 19) == (16, 17, 18)

    def test_zero_tolerance_is_identity(self):
        assert tolerated_set(7, 0, 19) == (7,)

    def test_whole_ladder_when_tolerance_large(self):
        assert tolerated_set(1, 10, 4) == (0, 1, 2, 3)

    @pytest.mark.parametrize("m", [-1, 19])
    def test_request_outside_ladder_rejected(self, m):
        with pytest.raises(ValueError):
            tolerated_set(m, 2, 19)


def test_delivery_cost():
    assert delivery_cost(3e6, cached=True) == 0.0
    assert delivery_cost(3e6, cached=False) == 3e6


class TestUtility:
    def test_cached_comfortable(self):
        assert utility(3e6, True, 1.3, 10.0, 4.0, 15.0) == 12.710862930939367

    def test_uncached_comfortable(self):
        assert utility(3e6, False, 1.3, 10.0, 4.0, 15.0) == 10.308952660644291

    def test_buffer_term_clamped_at_b_max(self):
        got = utility(3e6, False, 1.3, 40.0, 4.0, 15.0)
        assert got == 10.714417768752456
        assert got == utility(3e6, False, 1.3, 15.0, 4.0, 15.0)

    def test_shallow_buffer_rewards_buffer_only(self):
        got = utility(3e6, True, 1.3, 2.0, 4.0, 15.0)
        assert got == pytest.approx(1.3 * math.log(2.0))
        # bitrate must not enter this regime
        assert got == utility(9e6, True, 1.3, 2.0, 4.0, 15.0)

    def test_negative_projection_passes_through(self):
        assert utility(3e6, False, 1.3, -3.25, 4.0, 15.0) == -3.25
        assert utility(3e6, True, 1.3, 0.0, 4.0, 15.0) == 0.0

    def test_cache_weight_is_a_log_multiplier(self):
        q = 2e6 / 1e3
        diff = (utility(2e6, True, 1.3, 10.0, 4.0, 15.0)
                - utility(2e6, False, 1.3, 10.0, 4.0, 15.0))
        assert diff == pytest.approx(0.3 * math.log(q))

    def test_invalid_bitrate(self):
        with pytest.raises(ValueError):
            utility(0.0, False, 1.3, 10.0, 4.0, 15.0)
        with pytest.raises(ValueError):
            utility(-1e6, False, 1.3, 10.0, 4.0, 15.0)


class TestSolverParams:
    def test_defaults_valid(self):
        p = SolverParams()
        assert p.gamma == 2 and p.mu_c == 1.3

    @pytest.mark.parametrize("kw", [
        dict(gamma=-1),
        dict(mu_c=0.9),
        dict(b_min_s=15.0, b_max_s=4.0),
        dict(b_min_s=0.0),
        dict(pareto_cap=0),
    ])
    def test_invalid_params(self, kw):
        with pytest.raises(ValueError):
            SolverParams(**kw)


def _request(**kw) -> QualityRequest:
    base = dict(
        client_id=0,
        video_id=0,
        chunk_index=0,
        requested_quality=1,
        bitrates_bps=(1e6, 2e6, 4e6),
        chunk_duration_s=2.0,
        buffer_s=8.0,
        link_capacity_bps=16e6,
        equal_share=0.25,
        dl_queue_bits=0.0,
        dl_queue_media_s=0.0,
        fifo_backlog_bits=2e6,
        backhaul_rate_bps=2e6,
    )
    base.update(kw)
    return QualityRequest(**base)


class TestBuildCandidates:
    def _params(self, **kw) -> SolverParams:
        base = dict(gamma=1, mu_c=1.3, b_min_s=4.0, b_max_s=15.0)
        base.update(kw)
        return SolverParams(**base)

    def test_window_and_per_level_scoring(self):
        cache = LruChunkCache()
        cache.insert(0, 0, 2, 8e6)  # top level of this chunk is cached
        cands = build_candidates(_request(), cache, self._params())
        assert [c.quality_index for c in cands] == [0, 1, 2]

        # level 0: backhaul wait (2e6+2e6)/2e6 = 2 s, transfer 2e6/4e6 = 0.5 s
        c0 = cands[0]
        assert not c0.cached
        assert c0.cost_bps == 1e6
        assert c0.estimated_buffer_s == pytest.approx(8.0 - 2.5)
        assert c0.utility == pytest.approx(math.log(1e3) + math.log(5.5))

        # level 1: wait 3 s, transfer 1 s -> lands exactly at the comfort floor
        c1 = cands[1]
        assert c1.estimated_buffer_s == pytest.approx(4.0)
        assert c1.utility == pytest.approx(math.log(2e3) + math.log(4.0))

        # level 2 is cache-served: no backhaul wait, no backhaul cost
        c2 = cands[2]
        assert c2.cached
        assert c2.cost_bps == 0.0
        assert c2.estimated_buffer_s == pytest.approx(8.0 - 2.0)
        assert c2.utility == pytest.approx(1.3 * math.log(4e3) + math.log(6.0))

    def test_cache_state_keys_on_exact_level(self):
        cache = LruChunkCache()
        cache.insert(0, 0, 0, 2e6)  # different level than the lookups below
        cands = build_candidates(_request(), cache, self._params())
        assert cands[0].cached and not cands[1].cached and not cands[2].cached

    def test_effective_rate_is_equal_share_of_link(self):
        cands = build_candidates(_request(equal_share=0.5), LruChunkCache(),
                                 self._params(gamma=0))
        # transfer time halves when the assumed share doubles: 4e6 bits / 8e6 bps
        assert cands[0].estimated_buffer_s == pytest.approx(8.0 - 3.0 - 0.5)

    def test_zero_backhaul_rate_sinks_uncached_levels(self):
        cands = build_candidates(_request(backhaul_rate_bps=0.0),
                                 LruChunkCache(), self._params(gamma=0))
        assert cands[0].estimated_buffer_s == -math.inf
        assert cands[0].utility == -math.inf

    def test_queued_bits_shift_the_projection(self):
        # 4e6 queued bits at 4e6 bps effective = 1 s extra wait, 6 s media gain
        cands = build_candidates(
            _request(dl_queue_bits=4e6, dl_queue_media_s=6.0),
            LruChunkCache(), self._params(gamma=0))
        # max(drain 1.0, backhaul 3.0) + transfer 1.0, then +6 media
        assert cands[0].estimated_buffer_s == pytest.approx(8.0 - 3.0 - 1.0 + 6.0)

    def test_candidate_identity_fields(self):
        cands = build_candidates(_request(client_id=7, video_id=3, chunk_index=11),
                                 LruChunkCache(), self._params(gamma=0))
        c = cands[0]
        assert (c.client_id, c.video_id, c.chunk_index) == (7, 3, 11)
        assert c.bitrate_bps == 2e6
