"""Agent election: objective, local deltas, the two-phase heuristic, oracle.

Every node must be represented by itself or one of its social friends; the
objective charges each directed social edge the hop distance between the
two endpoints' agents in the ad-hoc layer. Phase one iteratively elects
the node whose agency is estimated to remove the most overhead; phase two
locally adjusts agents (trying / checking / backward tracking) and commits
a round only when the global objective strictly drops.

Tie-breaks are by smallest node id everywhere, so runs are reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import IO, Sequence

import numpy as np

from .diffusion import OverheadLedger
from .errors import DomainError, InternalError, InvalidLedgerError
from .graphs import DistanceOracle, LayerMapping, SocialGraph, validate_layers

_EPS = 1e-9


@dataclass
class AgentAssignment:
    """Per-node agent choice; the decision variable of the selection problem."""

    agent: np.ndarray
    represented: np.ndarray

    def __post_init__(self):
        self.agent = np.asarray(self.agent, dtype=np.int32)
        self.represented = np.asarray(self.represented, dtype=bool)
        if self.agent.shape != self.represented.shape:
            raise DomainError("agent and represented arrays differ in length")

    @classmethod
    def all_self(cls, n: int) -> "AgentAssignment":
        return cls(agent=np.arange(n, dtype=np.int32),
                   represented=np.ones(n, dtype=bool))

    @property
    def n(self) -> int:
        return len(self.agent)

    @property
    def delegated_count(self) -> int:
        return int((self.agent != np.arange(self.n)).sum())

    def copy(self) -> "AgentAssignment":
        return AgentAssignment(self.agent.copy(), self.represented.copy())

    def check_candidate_rule(self, social: SocialGraph) -> None:
        """Raise unless agent(v) is v or one of v's social friends."""
        for v in range(self.n):
            a = int(self.agent[v])
            if a != v and a not in social.neighbors(v):
                raise InternalError(f"agent({v})={a} is not {v} or a friend of {v}")

    def write_csv(self, stream: IO[str]) -> None:
        w = csv.writer(stream)
        w.writerow(["node", "agent"])
        for v in range(self.n):
            w.writerow([v, int(self.agent[v])])


@dataclass(frozen=True)
class AsmtcParams:
    """Limits of the heuristic (all unlimited by default).

    alpha caps the hop distance between a node and its candidate agents;
    beta caps how many committed agent changes a node may make in phase
    two; max_delegated caps how many nodes may pick a non-self agent.
    """

    alpha: float = math.inf
    beta: float = math.inf
    max_delegated: float = math.inf
    weight_mode: str = "uniform"

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.max_delegated < 0:
            raise DomainError("alpha, beta, max_delegated must be >= 0")
        if self.weight_mode not in ("uniform", "probability"):
            raise DomainError(f"unknown weight mode {self.weight_mode!r}")

    @classmethod
    def from_kv(cls, kv: dict) -> "AsmtcParams":
        def num(key, default):
            raw = kv.get(key)
            if raw is None:
                return default
            return math.inf if str(raw).strip() in ("inf", "none") else float(raw)
        return cls(alpha=num("alpha", math.inf),
                   beta=num("beta", math.inf),
                   max_delegated=num("max_delegated", math.inf),
                   weight_mode=str(kv.get("weight_mode", "uniform")))


@dataclass(frozen=True)
class ControlCostModel:
    """Prices for the heuristic's own messages (an explicit cost model).

    Reports travel node-to-node (agents do not exist yet while electing);
    per-node cost announcements flood the network (broadcast_cost None
    means n - 1 transmissions); directory notifications travel
    agent-to-agent once agents exist.
    """

    count_reports: bool = True
    count_broadcasts: bool = True
    count_directory: bool = True
    broadcast_cost: int | None = None


@dataclass
class RmoReport:
    """Signed objective change from one proposed single-node agent switch."""

    node: int
    proposed_agent: int
    delta: float  # positive = overhead reduced


# ----------------------------------------------------------------------
# Shared workspace
# ----------------------------------------------------------------------


def _edge_weights(social: SocialGraph, weight_mode: str) -> np.ndarray:
    if weight_mode == "uniform":
        return np.ones(social.m)
    if weight_mode == "probability":
        if not social.has_probabilities():
            raise DomainError("probability weighting needs assigned probabilities")
        return social.prob.astype(np.float64)
    raise DomainError(f"unknown weight mode {weight_mode!r}")


class _Workspace:
    """Distance table, edge weights, and incident-edge views for one instance."""

    def __init__(self, social: SocialGraph, oracle: DistanceOracle,
                 mapping: LayerMapping, weight_mode: str):
        if social.n != oracle.adhoc.n or len(mapping) != social.n:
            raise DomainError("social graph, oracle, and mapping sizes differ")
        self.social = social
        self.D = oracle.matrix()
        self.map = mapping.to_adhoc.astype(np.int64)
        self.w = _edge_weights(social, weight_mode)
        self.in_src = social.src[social.in_order] if social.m else social.src
        self.in_w = self.w[social.in_order] if social.m else self.w
        self.nb = [social.neighbors(v) for v in range(social.n)]

    def pos(self, agent: np.ndarray) -> np.ndarray:
        return self.map[np.asarray(agent, dtype=np.int64)]

    def objective_from_pos(self, pos: np.ndarray) -> float:
        g = self.social
        if g.m == 0:
            return 0.0
        vals = self.D[pos[g.src], pos[g.dst]]
        bad = np.isinf(vals)
        if bad.any():
            e = int(np.flatnonzero(bad)[0])
            raise InvalidLedgerError(
                f"edge ({int(g.src[e])},{int(g.dst[e])}) joins agents in "
                f"disconnected ad-hoc components")
        return float((self.w * vals).sum())

    def delta_from_pos(self, pos: np.ndarray, node: int, new_pos: int) -> float:
        """Objective drop if only `node`'s agent moves to position new_pos."""
        g = self.social
        old = pos[node]
        if old == new_pos:
            return 0.0
        lo, hi = g.out_indptr[node], g.out_indptr[node + 1]
        d_out = self.D[old, pos[g.dst[lo:hi]]] - self.D[new_pos, pos[g.dst[lo:hi]]]
        total = float((self.w[lo:hi] * d_out).sum())
        lo, hi = g.in_indptr[node], g.in_indptr[node + 1]
        srcs = self.in_src[lo:hi]
        d_in = self.D[pos[srcs], old] - self.D[pos[srcs], new_pos]
        total += float((self.in_w[lo:hi] * d_in).sum())
        if math.isnan(total) or math.isinf(total):
            raise InvalidLedgerError(
                f"agent change for node {node} touches a disconnected ad-hoc pair")
        return total

    def alpha_ok(self, node: int, candidate: int, alpha: float) -> bool:
        if node == candidate:
            return True
        d = self.D[self.map[node], self.map[candidate]]
        return d <= alpha


# ----------------------------------------------------------------------
# Objective and local delta
# ----------------------------------------------------------------------


def objective(social: SocialGraph, assignment: AgentAssignment,
              oracle: DistanceOracle, mapping: LayerMapping,
              weight_mode: str = "uniform") -> float:
    """Total weighted agent-to-agent hop cost over all directed social edges."""
    ws = _Workspace(social, oracle, mapping, weight_mode)
    return ws.objective_from_pos(ws.pos(assignment.agent))


def rmo_delta(social: SocialGraph, assignment: AgentAssignment, node: int,
              proposed_agent: int, oracle: DistanceOracle,
              mapping: LayerMapping, params: AsmtcParams | None = None) -> RmoReport:
    """Objective change from switching one node's agent, all else fixed.

    Positive delta means the overhead would be reduced. The proposed agent
    must be the node itself or one of its friends, within the alpha hop
    limit when one is set.
    """
    params = params or AsmtcParams()
    ws = _Workspace(social, oracle, mapping, params.weight_mode)
    if proposed_agent != node and proposed_agent not in ws.nb[node]:
        raise DomainError(
            f"{proposed_agent} is not a candidate agent for node {node}")
    if not ws.alpha_ok(node, proposed_agent, params.alpha):
        raise DomainError(
            f"candidate {proposed_agent} exceeds the alpha hop limit for node {node}")
    pos = ws.pos(assignment.agent)
    delta = ws.delta_from_pos(pos, node, int(ws.map[proposed_agent]))
    return RmoReport(node=node, proposed_agent=proposed_agent, delta=delta)


# ----------------------------------------------------------------------
# Phase one: iterative agent election
# ----------------------------------------------------------------------


def das(social: SocialGraph, oracle: DistanceOracle, mapping: LayerMapping,
        params: AsmtcParams | None = None,
        control: ControlCostModel | None = None
        ) -> tuple[AgentAssignment, OverheadLedger]:
    """Elect agents round by round until every node is represented.

    Each round scores every node v that still has an unrepresented node in
    scope: its own stake (the cost of influencing unrepresented friends,
    which vanishes if they co-assign to v) plus each unrepresented
    friend's independently evaluated switch delta. The top scorer is
    elected; its unrepresented friends co-assign simultaneously. Electing
    stops early when the best score is no longer positive or the
    delegation cap is reached; remaining nodes become self-agents.
    """
    params = params or AsmtcParams()
    control = control or ControlCostModel()
    ws = _Workspace(social, oracle, mapping, params.weight_mode)
    n = social.n
    agent = np.arange(n, dtype=np.int32)
    represented = np.zeros(n, dtype=bool)
    pos = ws.pos(agent)
    ledger = OverheadLedger()
    bcast = (n - 1) if control.broadcast_cost is None else control.broadcast_cost

    if n == 0:
        return AgentAssignment(agent, np.ones(0, dtype=bool)), ledger

    def children_of(v: int) -> list[int]:
        return [int(u) for u in ws.nb[v]
                if not represented[u] and ws.alpha_ok(u, v, params.alpha)]

    def score(v: int) -> float:
        total = 0.0
        if not represented[v]:
            g = social
            lo, hi = g.out_indptr[v], g.out_indptr[v + 1]
            for k in range(lo, hi):
                u = int(g.dst[k])
                if not represented[u] and ws.alpha_ok(u, v, params.alpha):
                    d = ws.D[pos[v], pos[u]]
                    if math.isinf(d):
                        raise InvalidLedgerError(
                            f"nodes {v} and {u} are in disconnected ad-hoc components")
                    total += ws.w[k] * d
        for u in children_of(v):
            total += ws.delta_from_pos(pos, u, int(ws.map[v]))
        return total

    cost = np.full(n, -math.inf)
    dirty = set(range(n))
    delegated = 0
    objective_now = ws.objective_from_pos(pos)

    while not represented.all():
        if math.isfinite(params.max_delegated) and delegated >= params.max_delegated:
            break
        unrep = ~represented
        has_unrep_friend = np.zeros(n, dtype=bool)
        for v in range(n):
            if len(ws.nb[v]) and unrep[ws.nb[v]].any():
                has_unrep_friend[v] = True
        participating = unrep | has_unrep_friend
        for v in dirty:
            cost[v] = score(v) if participating[v] else -math.inf
        dirty = set()
        cost[~participating] = -math.inf

        if control.count_reports and social.m:
            # Each unrepresented node reports its switch delta to each friend.
            pair_d = ws.D[ws.map[social.src], ws.map[social.dst]]
            ledger.control_hops += int(pair_d[unrep[social.src]].sum())
        if control.count_broadcasts:
            ledger.broadcast_tx += int(participating.sum()) * bcast

        w_best = int(np.argmax(cost))
        best = float(cost[w_best])
        if not math.isfinite(best) or best <= _EPS:
            break

        children = children_of(w_best)
        if math.isfinite(params.max_delegated):
            budget = int(params.max_delegated) - delegated
            if len(children) > budget:
                # Keep the most valuable co-assignments, drop the rest.
                scored = sorted(children,
                                key=lambda u: (-ws.delta_from_pos(pos, u, int(ws.map[w_best])), u))
                children = sorted(scored[:budget])

        newly = len(children) + (0 if represented[w_best] else 1)
        if newly == 0:
            break
        estimated = best
        represented[w_best] = True
        for u in children:
            agent[u] = w_best
            represented[u] = True
            pos[u] = ws.map[w_best]
        delegated += len(children)
        new_obj = ws.objective_from_pos(pos)
        ledger.events.append({"phase": "election", "agent": w_best,
                              "children": children, "estimated": estimated,
                              "realized": objective_now - new_obj})
        objective_now = new_obj

        if control.count_directory:
            changed = [w_best] + children
            hops = 0
            for v in changed:
                for u in ws.nb[v]:
                    d = ws.D[pos[v], pos[int(u)]]
                    if math.isfinite(d):
                        hops += int(d)
            ledger.control_hops += hops

        ball = set(children)
        ball.add(w_best)
        for v in list(ball):
            ball.update(int(u) for u in ws.nb[v])
        for v in list(ball):
            ball.update(int(u) for u in ws.nb[v])
        dirty = ball

    represented[:] = True  # leftovers become self-agents (agent already self)
    return AgentAssignment(agent, represented), ledger


# ----------------------------------------------------------------------
# Phase two: local adjustment
# ----------------------------------------------------------------------


def mor(social: SocialGraph, assignment: AgentAssignment,
        oracle: DistanceOracle, mapping: LayerMapping,
        params: AsmtcParams | None = None,
        control: ControlCostModel | None = None
        ) -> tuple[AgentAssignment, OverheadLedger]:
    """Trying / checking / backward tracking until no global reduction.

    Trying: nodes in ascending id order each tentatively adopt their best
    positive-delta candidate against the running tentative assignment.
    Checking: the round commits only if the global objective dropped.
    Backward tracking: otherwise the tentative change whose reversion most
    improves the objective is undone, re-checking after each reversion,
    until the round beats the committed assignment or nothing remains.
    """
    params = params or AsmtcParams()
    control = control or ControlCostModel()
    if not assignment.represented.all():
        raise DomainError("phase two needs every node represented")
    ws = _Workspace(social, oracle, mapping, params.weight_mode)
    n = social.n
    ledger = OverheadLedger()
    bcast = (n - 1) if control.broadcast_cost is None else control.broadcast_cost

    committed = assignment.copy()
    committed_obj = ws.objective_from_pos(ws.pos(committed.agent))
    changes_count = np.zeros(n, dtype=np.int64)

    if params.beta <= 0:
        return committed, ledger

    while True:
        tent = committed.agent.copy()
        tent_pos = ws.pos(tent)
        tent_delegated = int((tent != np.arange(n)).sum())
        round_changes: list[tuple[int, int, int, float]] = []  # (v, old, new, delta)

        for v in range(n):
            if changes_count[v] >= params.beta:
                continue
            old = int(tent[v])
            best_u = -1
            best_delta = _EPS
            for u in sorted([v] + [int(x) for x in ws.nb[v]]):
                if u == old:
                    continue
                if not ws.alpha_ok(v, u, params.alpha):
                    continue
                if (math.isfinite(params.max_delegated) and old == v and u != v
                        and tent_delegated >= params.max_delegated):
                    continue
                d = ws.delta_from_pos(tent_pos, v, int(ws.map[u]))
                if d > best_delta:
                    best_delta = d
                    best_u = u
            if best_u >= 0:
                round_changes.append((v, old, best_u, best_delta))
                if old == v and best_u != v:
                    tent_delegated += 1
                elif old != v and best_u == v:
                    tent_delegated -= 1
                tent[v] = best_u
                tent_pos[v] = ws.map[best_u]
                if control.count_directory:
                    hops = 0
                    for u in ws.nb[v]:
                        d = ws.D[tent_pos[v], tent_pos[int(u)]]
                        if math.isfinite(d):
                            hops += int(d)
                    ledger.control_hops += hops

        if not round_changes:
            break

        if control.count_broadcasts:
            ledger.broadcast_tx += bcast
        tent_obj = ws.objective_from_pos(tent_pos)

        if not tent_obj < committed_obj - _EPS:
            # Backward tracking: undo the most harmful change first.
            active = list(round_changes)
            while active:
                gains = [(ws.delta_from_pos(tent_pos, v, ws.map[old]), delta, v, old)
                         for (v, old, _new, delta) in active]
                pick = max(range(len(active)),
                           key=lambda i: (gains[i][0], -gains[i][1], -gains[i][2]))
                v, old, _new, _delta = active.pop(pick)
                tent[v] = old
                tent_pos[v] = ws.map[old]
                tent_obj = ws.objective_from_pos(tent_pos)
                if control.count_broadcasts:
                    ledger.broadcast_tx += bcast
                if tent_obj < committed_obj - _EPS:
                    break
            round_changes = active

        if not round_changes or not tent_obj < committed_obj - _EPS:
            break

        for (v, _old, _new, _delta) in round_changes:
            changes_count[v] += 1
        ledger.events.append({"phase": "adjustment",
                              "changes": [(v, old, new) for v, old, new, _ in round_changes],
                              "objective": tent_obj})
        committed = AgentAssignment(tent, np.ones(n, dtype=bool))
        committed_obj = tent_obj

    return committed, ledger


def asmtc(social: SocialGraph, oracle: DistanceOracle, mapping: LayerMapping,
          params: AsmtcParams | None = None,
          control: ControlCostModel | None = None
          ) -> tuple[AgentAssignment, OverheadLedger]:
    """Both phases in sequence; ledgers summed."""
    validate_layers(social, oracle.adhoc, mapping)
    assignment, led1 = das(social, oracle, mapping, params, control)
    assignment, led2 = mor(social, assignment, oracle, mapping, params, control)
    return assignment, led1.add(led2)


# ----------------------------------------------------------------------
# Exact oracle for tiny instances
# ----------------------------------------------------------------------


def brute_force_asp(social: SocialGraph, oracle: DistanceOracle,
                    mapping: LayerMapping, weight_mode: str = "uniform",
                    guard: int = 10_000_000) -> tuple[AgentAssignment, float]:
    """Exhaustively minimize the objective over all candidate-agent vectors.

    Ties go to the lexicographically smallest agent vector. Refuses when
    the combination count exceeds the guard.
    """
    ws = _Workspace(social, oracle, mapping, weight_mode)
    n = social.n
    ca = [[v] + sorted(int(u) for u in ws.nb[v]) for v in range(n)]
    ca = [sorted(c) for c in ca]
    combos = 1
    for c in ca:
        combos *= len(c)
        if combos > guard:
            raise DomainError(f"combination count {combos} exceeds guard {guard}")

    # Edges between node i and already-assigned nodes j <= i, for incremental cost.
    incident: list[list[tuple[int, int, float, bool]]] = [[] for _ in range(n)]
    for e in range(social.m):
        u, v = int(social.src[e]), int(social.dst[e])
        hi = max(u, v)
        incident[hi].append((u, v, float(ws.w[e]), True))

    best_cost = math.inf
    best_vec: list[int] | None = None
    positions = np.zeros(n, dtype=np.int64)
    vec = [0] * n

    def recurse(i: int, partial: float) -> None:
        nonlocal best_cost, best_vec
        if partial >= best_cost:
            return
        if i == n:
            best_cost = partial
            best_vec = vec.copy()
            return
        for a in ca[i]:
            positions[i] = ws.map[a]
            vec[i] = a
            inc = 0.0
            for (u, v, w, _fwd) in incident[i]:
                d = ws.D[positions[u], positions[v]]
                if math.isinf(d):
                    inc = math.inf
                    break
                inc += w * d
            if math.isfinite(inc):
                recurse(i + 1, partial + inc)

    recurse(0, 0.0)
    if best_vec is None:
        raise InvalidLedgerError("every assignment touches a disconnected pair")
    out = AgentAssignment(np.array(best_vec, dtype=np.int32),
                          np.ones(n, dtype=bool))
    return out, best_cost
