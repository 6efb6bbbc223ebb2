"""Seed selection (greedy and CELF lazy-greedy) and deployment pricing.

All candidate evaluations run against one shared trial pool (common random
numbers), which makes the coverage function deterministic and submodular
in the literal sense: CELF returns exactly the greedy selection, marginal
gains are non-increasing, and ties always break toward the smaller node id.

Deployment pricing replays the selection: every (iteration, candidate,
trial) triple is re-simulated and each successful activation is charged
agent-to-agent, each activated node reports back to the candidate, and each
candidate announces its spread with one network-wide broadcast.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from ._kernels import (LiveTrials, _marginal_count_one, _marginal_counts,
                       _reach_membership, _replay_iteration)
from .diffusion import OverheadLedger, TrialPool, agent_positions
from .errors import DomainError, InvalidLedgerError
from .graphs import DistanceOracle, LayerMapping, SocialGraph


@dataclass
class SeedSelection:
    """Ordered seeds with their mean marginal gains and the evaluation count."""

    seeds: list[int]
    marginal_gains: list[float]
    lookups: int

    def write_csv(self, stream: IO[str]) -> None:
        w = csv.writer(stream)
        w.writerow(["rank", "node", "marginal_gain", "total_lookups"])
        for rank, (node, gain) in enumerate(zip(self.seeds, self.marginal_gains), 1):
            w.writerow([rank, node, repr(gain), self.lookups])


@dataclass(frozen=True)
class DeploymentCostModel:
    """Prices for the distributed-deployment replay.

    broadcast_cost None means n - 1 transmissions per spread announcement
    (a flooding tree). return_mode "agent" prices state reports between the
    agents of the activated node and the candidate; "node" prices them
    between the nodes themselves. candidate_cap, when set, replays only the
    first that-many candidates per iteration (desk-scale speed knob; the
    cap is reported in the ledger's notes when active).
    """

    broadcast_cost: int | None = None
    include_returns: bool = True
    return_mode: str = "agent"
    candidate_cap: int | None = None

    def __post_init__(self):
        if self.return_mode not in ("agent", "node"):
            raise DomainError(f"unknown return mode {self.return_mode!r}")
        if self.broadcast_cost is not None and self.broadcast_cost < 0:
            raise DomainError("broadcast_cost must be non-negative")


def _check_k(social: SocialGraph, k: int) -> None:
    if not (1 <= k <= social.n):
        raise DomainError(f"K={k} outside [1, {social.n}]")


class _Evaluator:
    """Marginal-spread counts for candidates against a committed seed set."""

    def __init__(self, social: SocialGraph, pool: TrialPool):
        self.social = social
        self.pool = pool
        self.live = LiveTrials(social, pool)
        self.member = np.zeros((pool.trials, social.n), dtype=np.uint8)
        self.base_sizes = np.zeros(pool.trials, dtype=np.int64)
        self._stamp = np.full(social.n, -1, dtype=np.int64)
        self._queue = np.empty(max(social.n, 1), dtype=np.int32)

    def commit(self, seeds: list[int]) -> None:
        self.member[:] = 0
        self.base_sizes[:] = 0
        if seeds:
            _reach_membership(self.live.trial_ptr, self.live.indptr,
                              self.live.targets,
                              np.asarray(seeds, dtype=np.int32),
                              self.member, self.base_sizes)

    def marginal_one(self, w: int) -> int:
        self._stamp[:] = -1
        return int(_marginal_count_one(self.live.trial_ptr, self.live.indptr,
                                       self.live.targets, self.member,
                                       np.int32(w), self._stamp, self._queue))

    def marginal_many(self, cands: np.ndarray) -> np.ndarray:
        out = np.zeros(len(cands), dtype=np.int64)
        _marginal_counts(self.live.trial_ptr, self.live.indptr,
                         self.live.targets, self.member,
                         cands.astype(np.int32), out)
        return out


def greedy_select(social: SocialGraph, k: int, pool: TrialPool) -> SeedSelection:
    """Plain greedy: every non-seed candidate is re-evaluated each iteration."""
    _check_k(social, k)
    ev = _Evaluator(social, pool)
    seeds: list[int] = []
    gains: list[float] = []
    lookups = 0
    for _ in range(k):
        ev.commit(seeds)
        cands = np.array([v for v in range(social.n) if v not in seeds],
                         dtype=np.int64)
        counts = ev.marginal_many(cands)
        lookups += len(cands)
        best = int(cands[np.argmax(counts)])  # argmax returns first max: smallest id
        gains.append(int(counts.max()) / pool.trials)
        seeds.append(best)
    return SeedSelection(seeds=seeds, marginal_gains=gains, lookups=lookups)


def celf_select(social: SocialGraph, k: int, pool: TrialPool) -> SeedSelection:
    """Lazy greedy: identical seeds, order, and gains as greedy_select."""
    _check_k(social, k)
    ev = _Evaluator(social, pool)
    ev.commit([])
    all_nodes = np.arange(social.n, dtype=np.int64)
    counts = ev.marginal_many(all_nodes)
    lookups = social.n
    heap = [(-int(c), int(v)) for v, c in zip(all_nodes, counts)]
    heapq.heapify(heap)
    last_eval = np.zeros(social.n, dtype=np.int64)  # iteration of last evaluation

    seeds: list[int] = []
    gains: list[float] = []
    for i in range(k):
        while True:
            negc, v = heap[0]
            if last_eval[v] == i:
                heapq.heappop(heap)
                seeds.append(v)
                gains.append(-negc / pool.trials)
                break
            heapq.heappop(heap)
            c = ev.marginal_one(v)
            lookups += 1
            last_eval[v] = i
            heapq.heappush(heap, (-c, v))
        if len(seeds) < k:
            ev.commit(seeds)
    return SeedSelection(seeds=seeds, marginal_gains=gains, lookups=lookups)


# ----------------------------------------------------------------------
# Deployment overhead
# ----------------------------------------------------------------------


def _distance_table(oracle: DistanceOracle) -> np.ndarray:
    """Integer all-pairs hop table with -1 standing in for infinity."""
    mat = oracle.matrix()
    out = np.where(np.isinf(mat), -1, mat).astype(np.int32)
    return out


def deployment_profile(social: SocialGraph, selection: SeedSelection,
                       assignments, oracle: DistanceOracle,
                       mapping: LayerMapping, pool: TrialPool,
                       model: DeploymentCostModel | None = None,
                       live: LiveTrials | None = None) -> list[list[OverheadLedger]]:
    """Replay the selection and price it under several assignments at once.

    Returns one ledger per (iteration, assignment); the trial outcomes are
    identical for every assignment, so the replay runs once and only the
    pricing differs. ``deployment_overhead`` is the single-assignment view.
    """
    model = model or DeploymentCostModel()
    if live is None:
        live = LiveTrials(social, pool)
    n = social.n
    A = len(assignments)
    pos = np.stack([agent_positions(a, mapping) for a in assignments]).astype(np.int32)
    if model.return_mode == "agent":
        ret_pos = pos
    else:
        ret_pos = np.broadcast_to(mapping.to_adhoc.astype(np.int32), (A, n)).copy()
    dist = _distance_table(oracle)
    bcast = (n - 1) if model.broadcast_cost is None else model.broadcast_cost

    per_iteration: list[list[OverheadLedger]] = []
    for i in range(len(selection.seeds)):
        base = np.array(sorted(selection.seeds[:i]), dtype=np.int32)
        cands = np.array([v for v in range(n) if v not in selection.seeds[:i]],
                         dtype=np.int32)
        capped = False
        if model.candidate_cap is not None and len(cands) > model.candidate_cap:
            cands = cands[:model.candidate_cap]
            capped = True
        infl = np.zeros((len(cands), A), dtype=np.int64)
        ret = np.zeros((len(cands), A), dtype=np.int64)
        err = np.zeros(len(cands), dtype=np.int8)
        _replay_iteration(live.trial_ptr, live.indptr, live.targets, base,
                          cands, pos, ret_pos, dist, model.include_returns,
                          infl, ret, err)
        if err.any():
            w = int(cands[int(np.argmax(err))])
            raise InvalidLedgerError(
                f"iteration {i + 1}, candidate {w}: overhead touched a "
                f"disconnected ad-hoc pair")
        ledgers = []
        for a in range(A):
            led = OverheadLedger(
                influence_hops=int(infl[:, a].sum()),
                return_hops=int(ret[:, a].sum()),
                broadcast_tx=int(len(cands)) * int(bcast),
            )
            if capped:
                led.events.append(f"candidate_cap={model.candidate_cap} active")
            ledgers.append(led)
        per_iteration.append(ledgers)
    return per_iteration


def deployment_overhead(social: SocialGraph, selection: SeedSelection,
                        assignment, oracle: DistanceOracle,
                        mapping: LayerMapping, pool: TrialPool,
                        model: DeploymentCostModel | None = None) -> OverheadLedger:
    """Total ledger of deploying the selection under one agent assignment."""
    profile = deployment_profile(social, selection, [assignment], oracle,
                                 mapping, pool, model)
    total = OverheadLedger()
    for ledgers in profile:
        total.add(ledgers[0])
    return total
