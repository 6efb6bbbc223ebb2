"""Cascade trials, spread estimation, and per-trial overhead accounting."""

import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_example_social, random_instance
from crosslayer import (AgentAssignment, DistanceOracle, DomainError,
                        InvalidLedgerError, LayerMapping, OverheadLedger,
                        SocialGraph, TrialPool, estimate_spread, ic_trial,
                        trial_overhead)
from crosslayer.diffusion import write_trial_log
from crosslayer import rng as crng


def forced_social(social: SocialGraph, live_edges: set) -> SocialGraph:
    """Copy with p=1 on the listed (u, v) edges and p=0 elsewhere."""
    prob = np.array([1.0 if (int(u), int(v)) in live_edges else 0.0
                     for u, v in zip(social.src, social.dst)])
    return social.with_probabilities(prob)


def exact_expected_spread(social: SocialGraph, seed: int) -> tuple[float, float]:
    """(mean, variance) of the activated count by live-edge enumeration.

    Enumerates all 2^m live-edge patterns at once with boolean matrix
    sweeps; only feasible for small m.
    """
    m = social.m
    patterns = 1 << m
    bits = ((np.arange(patterns)[:, None] >> np.arange(m)[None, :]) & 1).astype(bool)
    reach = np.zeros((patterns, social.n), dtype=bool)
    reach[:, seed] = True
    src = social.src.tolist()
    dst = social.dst.tolist()
    for _ in range(social.n):
        before = reach.sum()
        for k in range(m):
            np.logical_or(reach[:, dst[k]], bits[:, k] & reach[:, src[k]],
                          out=reach[:, dst[k]])
        if reach.sum() == before:
            break
    weights = np.prod(np.where(bits, social.prob[None, :],
                               1.0 - social.prob[None, :]), axis=1)
    sizes = reach.sum(axis=1)
    mean = float((weights * sizes).sum())
    second = float((weights * sizes.astype(float) ** 2).sum())
    return mean, second - mean * mean


class TestCounterCoins:
    def test_deterministic_and_in_range(self):
        vals = [crng.coin(1, t, u, v) for t in range(3) for u in range(3)
                for v in range(3)]
        assert vals == [crng.coin(1, t, u, v) for t in range(3)
                        for u in range(3) for v in range(3)]
        assert all(0.0 <= x < 1.0 for x in vals)

    def test_vectorized_matches_scalar(self):
        ts = np.arange(5, dtype=np.uint64)[:, None]
        us = np.array([0, 1, 2], dtype=np.uint64)[None, :]
        vs = np.array([3, 4, 5], dtype=np.uint64)[None, :]
        arr = crng.coin(9, ts, us, vs)
        for i in range(5):
            for j in range(3):
                assert arr[i, j] == crng.coin(9, i, int(us[0, j]), int(vs[0, j]))

    def test_roughly_uniform(self):
        xs = crng.coin(0, np.arange(20000, dtype=np.uint64), 1, 2)
        assert abs(xs.mean() - 0.5) < 0.01
        assert abs((xs < 0.1).mean() - 0.1) < 0.01

    def test_seed_sensitivity(self):
        assert crng.coin(0, 0, 0, 1) != crng.coin(1, 0, 0, 1)


class TestIcTrial:
    def test_forced_trial_from_example(self, example_oracle, example_mapping):
        social = make_example_social()
        # Node 4 (id 3) succeeds exactly on its edges to 2, 3, and 6.
        forced = forced_social(social, {(3, 1), (3, 2), (3, 5)})
        out = ic_trial(forced, [3], TrialPool(0, 1), 0)
        assert sorted(out.activated) == [1, 2, 3, 5]
        assert out.activations == [(3, 1, 1), (3, 2, 1), (3, 5, 1)]
        assert out.spread() == 4

    def test_all_zero_probabilities(self, example_social):
        zero = example_social.with_probabilities(np.zeros(example_social.m))
        out = ic_trial(zero, [0], TrialPool(0, 1), 0)
        assert out.activated == [0]
        assert out.activations == []

    def test_all_one_probabilities_reach_component(self, example_social):
        ones = example_social.with_probabilities(np.ones(example_social.m))
        out = ic_trial(ones, [0], TrialPool(0, 1), 0)
        # Everyone except the friendless node (id 4).
        assert sorted(out.activated) == [0, 1, 2, 3, 5, 6, 7]

    def test_rounds_are_bfs_layers(self, example_social):
        ones = example_social.with_probabilities(np.ones(example_social.m))
        out = ic_trial(ones, [7], TrialPool(0, 1), 0)
        rounds = {v: r for _u, v, r in out.activations}
        # 8 -> 3 -> {1, 4} -> {2, 6, 7}
        assert rounds[2] == 1 and rounds[0] == 2 and rounds[3] == 2
        assert rounds[1] == 3 and rounds[5] == 3 and rounds[6] == 3

    def test_activator_is_smallest_live_predecessor(self):
        g = SocialGraph(4, [(0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
        out = ic_trial(g, [1, 2], TrialPool(0, 1), 0)
        assert (1, 3, 1) in out.activations

    def test_determinism_across_calls(self):
        rng = np.random.default_rng(0)
        social, _, _, _ = random_instance(30, rng)
        pool = TrialPool(4, 8)
        for t in range(8):
            a = ic_trial(social, [0, 5], pool, t)
            b = ic_trial(social, [0, 5], pool, t)
            assert a.activated == b.activated
            assert a.activations == b.activations

    def test_seed_coupling_monotone(self):
        # With shared coins, a superset of seeds activates a superset of nodes.
        rng = np.random.default_rng(1)
        social, _, _, _ = random_instance(40, rng)
        pool = TrialPool(11, 20)
        for t in range(20):
            small = ic_trial(social, [3], pool, t).activated_set
            large = ic_trial(social, [3, 8], pool, t).activated_set
            assert small <= large

    def test_empty_or_invalid_seeds(self, example_social):
        with pytest.raises(DomainError):
            ic_trial(example_social, [], TrialPool(0, 1), 0)
        with pytest.raises(DomainError):
            ic_trial(example_social, [99], TrialPool(0, 1), 0)

    def test_unassigned_probabilities_rejected(self):
        g = SocialGraph(2, [(0, 1, math.nan)])
        with pytest.raises(DomainError):
            ic_trial(g, [0], TrialPool(0, 1), 0)


class TestEstimateSpread:
    def test_matches_trial_average(self):
        rng = np.random.default_rng(2)
        social, _, _, _ = random_instance(25, rng)
        pool = TrialPool(3, 64)
        est = estimate_spread(social, [1, 2], pool)
        manual = sum(ic_trial(social, [1, 2], pool, t).spread()
                     for t in range(64)) / 64
        assert est == manual

    def test_exact_enumeration_small(self):
        g = SocialGraph(3, [(0, 1, 0.5), (1, 2, 0.25)])
        exact, _ = exact_expected_spread(g, 0)
        assert exact == pytest.approx(1 + 0.5 + 0.5 * 0.25)
        est = estimate_spread(g, [0], TrialPool(0, 40000))
        assert est == pytest.approx(exact, abs=0.02)

    def test_seed_order_invariant(self):
        rng = np.random.default_rng(5)
        social, _, _, _ = random_instance(20, rng)
        pool = TrialPool(0, 32)
        assert estimate_spread(social, [4, 9], pool) == \
            estimate_spread(social, [9, 4], pool)

    @given(st.integers(0, 2**32), st.integers(1, 30))
    @settings(max_examples=25, deadline=None)
    def test_spread_bounds(self, seed, trials):
        social = make_example_social()
        est = estimate_spread(social, [0], TrialPool(seed, trials))
        assert 1.0 <= est <= social.n


class TestTrialOverhead:
    def test_golden_self_agents(self, example_oracle, example_mapping):
        social = make_example_social()
        forced = forced_social(social, {(3, 1), (3, 2), (3, 5)})
        out = ic_trial(forced, [3], TrialPool(0, 1), 0)
        self_agents = AgentAssignment.all_self(8)
        assert trial_overhead(out, self_agents, example_oracle,
                              example_mapping) == 9

    def test_golden_elected_agents(self, example_oracle, example_mapping,
                                   example_agents):
        social = make_example_social()
        forced = forced_social(social, {(3, 1), (3, 2), (3, 5)})
        out = ic_trial(forced, [3], TrialPool(0, 1), 0)
        assert trial_overhead(out, example_agents, example_oracle,
                              example_mapping) == 2

    def test_shared_agent_edges_cost_zero(self, example_oracle,
                                          example_mapping):
        social = make_example_social()
        forced = forced_social(social, {(3, 1), (3, 2), (3, 5)})
        out = ic_trial(forced, [3], TrialPool(0, 1), 0)
        # Everyone on a single agent: nothing to pay.
        one = AgentAssignment(agent=np.full(8, 3, dtype=np.int32),
                              represented=np.ones(8, dtype=bool))
        assert trial_overhead(out, one, example_oracle, example_mapping) == 0

    def test_self_agents_equal_direct_distances(self):
        rng = np.random.default_rng(8)
        social, _, oracle, mapping = random_instance(25, rng)
        pool = TrialPool(2, 10)
        self_agents = AgentAssignment.all_self(25)
        for t in range(10):
            out = ic_trial(social, [0], pool, t)
            expect = sum(int(oracle.distance(mapping[u], mapping[v]))
                         for u, v, _ in out.activations)
            assert trial_overhead(out, self_agents, oracle, mapping) == expect

    def test_disconnected_agents_rejected(self):
        from crosslayer import AdhocGraph
        social = SocialGraph(4, [(0, 3, 1.0)])
        adhoc = AdhocGraph(4, [(0, 1), (2, 3)])
        out = ic_trial(social, [0], TrialPool(0, 1), 0)
        with pytest.raises(InvalidLedgerError):
            trial_overhead(out, AgentAssignment.all_self(4),
                           DistanceOracle(adhoc), LayerMapping.identity(4))


class TestOverheadLedger:
    def test_total_and_add(self):
        a = OverheadLedger(influence_hops=3, return_hops=2, broadcast_tx=1)
        b = OverheadLedger(influence_hops=1, control_hops=4)
        a.add(b)
        assert a.total == 3 + 2 + 1 + 1 + 4
        assert a.influence_hops == 4

    def test_csv_shape(self):
        buf = io.StringIO()
        OverheadLedger(influence_hops=5).write_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "counter,value"
        assert "total,5" in lines[-1]

    def test_trial_log_csv(self):
        social = make_example_social()
        forced = forced_social(social, {(3, 1), (3, 2), (3, 5)})
        out = ic_trial(forced, [3], TrialPool(0, 1), 0)
        buf = io.StringIO()
        write_trial_log([out], buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "trial,round,u,v"
        assert len(lines) == 1 + 3
