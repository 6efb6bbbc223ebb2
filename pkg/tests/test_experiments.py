"""Study drivers: shapes, invariants, and cross-driver consistency."""

import numpy as np
import pytest

from crosslayer import AgentAssignment, TrialPool, asmtc, celf_select
from crosslayer.experiments import (ExperimentConfig, build_instance,
                                    run_fig3, run_fig4, run_fig5, run_fig6)
from crosslayer.seeding import deployment_overhead

CFG = ExperimentConfig(n=60, avg_degree=6, max_degree=10, k=3, trials=30,
                       rng_seed=1)


class TestBuildInstance:
    def test_layers_consistent(self):
        inst = build_instance(CFG)
        assert inst.social.n == inst.adhoc.n == len(inst.mapping) == 60
        assert inst.social.has_probabilities()

    def test_deterministic(self):
        a = build_instance(CFG)
        b = build_instance(CFG)
        assert a.social == b.social
        assert a.adhoc == b.adhoc
        assert np.array_equal(a.mapping.to_adhoc, b.mapping.to_adhoc)

    def test_social_and_adhoc_streams_independent(self):
        inst = build_instance(CFG)
        assert inst.social.m != 2 * inst.adhoc.m or \
            sorted((int(u), int(v)) for u, v in zip(inst.social.src,
                                                    inst.social.dst)
                   if u < v) != inst.adhoc.edges


class TestFig3:
    def test_spread_monotone_in_k(self):
        rows = run_fig3(CFG)
        assert [r[0] for r in rows] == [1, 2, 3]
        spreads = [r[1] for r in rows]
        assert all(b >= a for a, b in zip(spreads, spreads[1:]))

    def test_agent_arm_identical(self):
        rows = run_fig3(CFG)
        for _k, without, with_agents in rows:
            assert without == with_agents


class TestFig4:
    def test_row_per_size(self):
        cfg = ExperimentConfig(n=60, avg_degree=6, max_degree=10, k=2,
                               trials=20, rng_seed=1, fig4_sizes=(40, 60))
        rows = run_fig4(cfg)
        assert [r[0] for r in rows] == [40, 60]
        for _n, control, deploy in rows:
            assert control > 0 and deploy > 0


class TestFig5:
    def test_caps_and_monotonicity(self):
        rows = run_fig5(CFG)
        caps = [r[0] for r in rows]
        assert caps == [0, 60 // 8, 15, 30, 60]
        totals = [r[1] for r in rows]
        assert all(b <= a for a, b in zip(totals, totals[1:]))

    def test_cap_zero_equals_baseline(self):
        rows = run_fig5(CFG)
        inst = build_instance(CFG)
        pool = TrialPool(CFG.rng_seed, CFG.trials)
        sel = celf_select(inst.social, CFG.k, pool)
        base = deployment_overhead(inst.social, sel,
                                   AgentAssignment.all_self(60), inst.oracle,
                                   inst.mapping, pool)
        assert rows[0][1] == base.total


class TestFig6:
    def test_shape_and_reduction_sign(self):
        cfg = ExperimentConfig(n=80, avg_degree=6, max_degree=10, trials=20,
                               rng_seed=2, fig6_degrees=(6.0, 12.0),
                               fig6_ks=(2, 3))
        rows = run_fig6(cfg)
        assert len(rows) == 4
        for k, deg, base, with_agents, red in rows:
            assert k in (2, 3) and deg in (6.0, 12.0)
            assert with_agents <= base
            assert red == pytest.approx(100.0 * (base - with_agents) / base)

    def test_same_selection_across_degrees(self):
        # The social layer is pinned, so K rows repeat per degree with the
        # same budgets.
        cfg = ExperimentConfig(n=80, avg_degree=6, max_degree=10, trials=20,
                               rng_seed=2, fig6_degrees=(6.0, 12.0),
                               fig6_ks=(2,))
        rows = run_fig6(cfg)
        assert [r[0] for r in rows] == [2, 2]
