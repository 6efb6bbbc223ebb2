"""Independent Cascade trials, spread estimation, per-trial hop overhead.

Trials use the live-edge formulation: edge (u, v) is live in trial t iff
``coin(base_seed, t, u, v) < p_{u,v}``, and the activated set is the set of
nodes reachable from the seeds over live edges. This is equivalent in
distribution to the sequential round process, and it makes determinism,
seed-set coupling, and agent-invariance exact properties.

Activation events are logged in breadth-first round order, ties broken by
ascending (u, v) within a round; a node's recorded activator is therefore
the smallest live in-neighbor of the previous round.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from . import rng as _rng
from .errors import DomainError, InvalidLedgerError
from .graphs import DistanceOracle, LayerMapping, SocialGraph


@dataclass(frozen=True)
class TrialPool:
    """A reproducible family of trials keyed by (base_seed, trial index)."""

    base_seed: int
    trials: int

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError(f"trial count must be >= 1, got {self.trials}")

    def coin(self, t: int, u: int, v: int) -> float:
        return _rng.coin(self.base_seed, t, u, v)

    def live_mask(self, social: SocialGraph, t: int) -> np.ndarray:
        """Boolean per-edge liveness for trial t (edge order = graph edge order)."""
        return self.live_masks(social, t, t + 1)[0]

    def live_masks(self, social: SocialGraph, t0: int, t1: int) -> np.ndarray:
        """Liveness matrix of shape (t1 - t0, m) computed in one vectorized pass."""
        if not social.has_probabilities():
            raise DomainError("social graph has unassigned edge probabilities")
        ts = np.arange(t0, t1, dtype=np.uint64)[:, None]
        coins = _rng.coin(self.base_seed, ts, social.src[None, :], social.dst[None, :])
        coins = np.atleast_2d(coins)
        return coins < social.prob[None, :]


@dataclass
class TrialOutcome:
    """One IC realization: seeds, activation order, and successful events."""

    seeds: tuple[int, ...]
    activated: list[int]                      # seeds first, then by round
    activations: list[tuple[int, int, int]]   # (activator u, node v, round r)

    @property
    def activated_set(self) -> frozenset:
        return frozenset(self.activated)

    def spread(self) -> int:
        return len(self.activated)


def _check_seeds(social: SocialGraph, seeds: Iterable[int]) -> list[int]:
    out = sorted({int(s) for s in seeds})
    if not out:
        raise DomainError("seed set must be non-empty")
    for s in out:
        if not (0 <= s < social.n):
            raise DomainError(f"seed {s} outside [0,{social.n})")
    return out


def ic_trial(social: SocialGraph, seeds: Iterable[int], pool: TrialPool,
             t: int) -> TrialOutcome:
    """Run trial t from the given seed set and log the activation events."""
    seed_list = _check_seeds(social, seeds)
    mask = pool.live_mask(social, t)

    active = set(seed_list)
    activated = list(seed_list)
    activations: list[tuple[int, int, int]] = []
    frontier = seed_list
    r = 1
    while frontier:
        nxt = []
        for u in frontier:  # frontier kept ascending: activator = smallest u
            targets = social.dst[social.out_indptr[u]:social.out_indptr[u + 1]]
            live = mask[social.out_indptr[u]:social.out_indptr[u + 1]]
            for v, ok in zip(targets.tolist(), live.tolist()):
                if ok and v not in active:
                    active.add(v)
                    activated.append(v)
                    activations.append((u, v, r))
                    nxt.append(v)
        frontier = sorted(nxt)
        r += 1
    return TrialOutcome(seeds=tuple(seed_list), activated=activated,
                        activations=activations)


def estimate_spread(social: SocialGraph, seeds: Iterable[int],
                    pool: TrialPool) -> float:
    """Mean activated count over the pool's trials (order-invariant, exact sum)."""
    seed_list = _check_seeds(social, seeds)
    total = 0
    block = 1024
    indptr = social.out_indptr
    dst = social.dst
    for t0 in range(0, pool.trials, block):
        t1 = min(t0 + block, pool.trials)
        masks = pool.live_masks(social, t0, t1)
        for row in masks:
            active = set(seed_list)
            stack = list(seed_list)
            while stack:
                u = stack.pop()
                lo, hi = indptr[u], indptr[u + 1]
                for k in range(lo, hi):
                    if row[k]:
                        v = int(dst[k])
                        if v not in active:
                            active.add(v)
                            stack.append(v)
            total += len(active)
    return total / pool.trials


@dataclass
class OverheadLedger:
    """Categorized message-cost counters (hops and transmissions)."""

    influence_hops: int = 0
    return_hops: int = 0
    broadcast_tx: int = 0
    control_hops: int = 0
    events: list = field(default_factory=list)  # free-form notes, not counted

    @property
    def total(self) -> int:
        return (self.influence_hops + self.return_hops
                + self.broadcast_tx + self.control_hops)

    def add(self, other: "OverheadLedger") -> "OverheadLedger":
        self.influence_hops += other.influence_hops
        self.return_hops += other.return_hops
        self.broadcast_tx += other.broadcast_tx
        self.control_hops += other.control_hops
        self.events.extend(other.events)
        return self

    def rows(self) -> list[tuple[str, int]]:
        return [("influence_hops", self.influence_hops),
                ("return_hops", self.return_hops),
                ("broadcast_tx", self.broadcast_tx),
                ("control_hops", self.control_hops),
                ("total", self.total)]

    def write_csv(self, stream: IO[str]) -> None:
        w = csv.writer(stream)
        w.writerow(["counter", "value"])
        for name, value in self.rows():
            w.writerow([name, value])


def agent_positions(assignment, mapping: LayerMapping) -> np.ndarray:
    """Ad-hoc position of each node's agent: pos[v] = mapping[agent(v)]."""
    agent = np.asarray(assignment.agent, dtype=np.int64)
    return mapping.to_adhoc[agent]


def trial_overhead(outcome: TrialOutcome, assignment, oracle: DistanceOracle,
                   mapping: LayerMapping) -> int:
    """Influence hops charged to one trial under an agent assignment.

    Each successful activation (u, v) costs the hop distance between
    agent(u) and agent(v) in the ad-hoc layer; nothing is charged when the
    two share an agent or when an influence attempt failed.
    """
    agent = assignment.agent
    if len(agent) != len(mapping):
        raise DomainError("assignment does not cover all nodes")
    pos = agent_positions(assignment, mapping)
    hops = 0
    for u, v, _r in outcome.activations:
        a, b = int(pos[u]), int(pos[v])
        if a == b:
            continue
        d = oracle.distance(a, b)
        if math.isinf(d):
            raise InvalidLedgerError(
                f"agents of activation ({u},{v}) are disconnected in the ad-hoc layer")
        hops += int(d)
    return hops


def write_trial_log(outcomes: Sequence[TrialOutcome], stream: IO[str]) -> None:
    """CSV export of activation events: one ``trial,round,u,v`` row each."""
    w = csv.writer(stream)
    w.writerow(["trial", "round", "u", "v"])
    for t, outcome in enumerate(outcomes):
        for u, v, r in outcome.activations:
            w.writerow([t, r, u, v])
