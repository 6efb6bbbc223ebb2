"""Synthetic MANET generation, random layer mappings, edge probabilities.

The topology generator is a simplified LFR-style benchmark: power-law
degrees truncated at a cap and rescaled to a target mean, power-law
community sizes, and a per-node stub split so roughly a ``mixing_topology``
fraction of each node's links leave its community. Stubs are matched
configuration-model style; self-loops and multi-edges are dropped during
matching and connectivity is enforced afterwards by bridging components.

Everything here is a pure function of (params, seed): the same inputs
produce byte-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csgraph

from .errors import DomainError
from .graphs import AdhocGraph, LayerMapping, SocialGraph


@dataclass(frozen=True)
class GenParams:
    """Knobs of the topology generator (one row of the parameter table).

    ``mixing_weight`` is accepted and recorded for completeness but unused:
    the generated network is unweighted (overhead counts hops).
    """

    n: int
    avg_degree: float
    max_degree: int
    degree_exponent: float = 2.0
    community_exponent: float = 1.0
    mixing_topology: float = 0.1
    mixing_weight: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"need at least 2 nodes, got {self.n}")
        if not (0 < self.avg_degree <= self.max_degree < self.n):
            raise DomainError(
                f"need 0 < avg_degree <= max_degree < n, got "
                f"avg={self.avg_degree} max={self.max_degree} n={self.n}")
        if self.degree_exponent <= 0 or self.community_exponent <= 0:
            raise DomainError("power-law exponents must be positive")
        for name in ("mixing_topology", "mixing_weight"):
            val = getattr(self, name)
            if not (0.0 <= val <= 1.0):
                raise DomainError(f"{name}={val} outside [0,1]")


@dataclass
class GenDiagnostics:
    """What the generator actually achieved, for the emitted JSON record."""

    mean_degree: float
    max_degree: int
    intermix_fraction: float
    bridges_added: int
    stub_adjustments: int
    dropped_stubs: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# ----------------------------------------------------------------------
# Degree and community-size sampling
# ----------------------------------------------------------------------


def _truncated_power_law(u: np.ndarray, a: float, b: float, tau: float) -> np.ndarray:
    """Inverse-CDF samples of pdf ~ x^-tau on [a, b] from uniforms u."""
    if abs(tau - 1.0) < 1e-9:
        return a * (b / a) ** u
    e = 1.0 - tau
    return (a**e + u * (b**e - a**e)) ** (1.0 / e)


def _degree_sequence(rng: np.random.Generator, params: GenParams) -> tuple[np.ndarray, int]:
    """Power-law degrees capped at max_degree, mean within +-10% of target."""
    u = rng.random(params.n)
    b = params.max_degree + 0.999  # floor() then reaches the cap

    def mean_for(a: float) -> tuple[float, np.ndarray]:
        x = np.floor(_truncated_power_law(u, a, b, params.degree_exponent))
        deg = np.clip(x, 1, params.max_degree).astype(np.int64)
        return float(deg.mean()), deg

    lo, hi = 0.5, float(params.max_degree)
    target = params.avg_degree
    best = None
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        mean, deg = mean_for(mid)
        best = deg
        if abs(mean - target) / target <= 0.02:
            break
        if mean < target:
            lo = mid
        else:
            hi = mid
    deg = best
    mean = float(deg.mean())
    if abs(mean - target) / target > 0.10:
        raise DomainError(
            f"degree sequence infeasible: achieved mean {mean:.2f}, target {target}")
    adjustments = 0
    if int(deg.sum()) % 2 == 1:
        # Make the stub count even with a single-stub adjustment.
        idx = int(np.argmin(deg)) if deg.min() < params.max_degree else int(np.argmax(deg))
        deg[idx] += 1 if deg[idx] < params.max_degree else -1
        adjustments = 1
    return deg, adjustments


def _community_sizes(rng: np.random.Generator, params: GenParams) -> list[int]:
    n = params.n
    smin = min(n, max(8, params.max_degree + 1))
    smax = min(n, max(smin + 1, 4 * smin))
    sizes: list[int] = []
    while sum(sizes) < n:
        u = rng.random()
        s = int(np.floor(_truncated_power_law(np.array(u), smin, smax + 0.999,
                                              params.community_exponent)))
        sizes.append(min(s, smax))
    excess = sum(sizes) - n
    sizes[-1] -= excess
    if sizes[-1] < smin and len(sizes) > 1:
        sizes[-2] += sizes[-1]
        sizes.pop()
    return sizes


# ----------------------------------------------------------------------
# Stub matching
# ----------------------------------------------------------------------


def _match_stubs(rng: np.random.Generator, stubs: np.ndarray,
                 edge_set: set[tuple[int, int]], rounds: int = 5) -> int:
    """Pair stubs randomly, rejecting self-loops and duplicates.

    Rejected stubs are reshuffled and retried a few rounds; the number of
    stubs left unmatched at the end is returned.
    """
    pool = stubs.copy()
    for _ in range(rounds):
        if len(pool) < 2:
            break
        rng.shuffle(pool)
        leftover = []
        for i in range(0, len(pool) - 1, 2):
            a, b = int(pool[i]), int(pool[i + 1])
            if a == b:
                leftover.extend((a, b))
                continue
            key = (min(a, b), max(a, b))
            if key in edge_set:
                leftover.extend((a, b))
                continue
            edge_set.add(key)
        if len(pool) % 2 == 1:
            leftover.append(int(pool[-1]))
        pool = np.array(leftover, dtype=np.int64)
    return len(pool)


def generate_manet(params: GenParams) -> tuple[AdhocGraph, GenDiagnostics]:
    """Generate a connected undirected topology per the parameter set."""
    rng = np.random.default_rng(params.rng_seed)
    deg, adjustments = _degree_sequence(rng, params)
    n = params.n

    sizes = _community_sizes(rng, params)
    order = rng.permutation(n)
    community = np.empty(n, dtype=np.int64)
    start = 0
    members: list[np.ndarray] = []
    for ci, s in enumerate(sizes):
        block = order[start:start + s]
        community[block] = ci
        members.append(block)
        start += s

    mu = params.mixing_topology
    internal = np.rint((1.0 - mu) * deg).astype(np.int64)
    for block in members:
        # A node cannot have more intra-community links than the community holds.
        internal[block] = np.minimum(internal[block], len(block) - 1)
    external = deg - internal

    edge_set: set[tuple[int, int]] = set()
    dropped = 0
    for block in members:
        stubs = np.repeat(block, internal[block])
        if len(stubs) % 2 == 1:
            # Demote one internal stub to the external pool.
            victim = int(block[np.argmax(internal[block])])
            internal[victim] -= 1
            external[victim] += 1
            stubs = np.repeat(block, internal[block])
        dropped += _match_stubs(rng, stubs, edge_set)
    ext_stubs = np.repeat(np.arange(n), external)
    if len(ext_stubs) % 2 == 1:
        ext_stubs = ext_stubs[:-1]
        dropped += 1
    dropped += _match_stubs(rng, ext_stubs, edge_set)

    graph = AdhocGraph(n, sorted(edge_set))
    bridges = 0
    ncomp, comp = csgraph.connected_components(graph.to_csr(), directed=False)
    if ncomp > 1:
        comp_nodes = [np.where(comp == c)[0] for c in range(ncomp)]
        comp_nodes.sort(key=len, reverse=True)
        degs = graph.degrees()

        def anchor(nodes: np.ndarray) -> int:
            under = nodes[degs[nodes] < params.max_degree]
            pick_from = under if len(under) else nodes
            return int(pick_from[np.argmin(degs[pick_from])])

        main = comp_nodes[0]
        for other in comp_nodes[1:]:
            a, b = anchor(main), anchor(other)
            edge_set.add((min(a, b), max(a, b)))
            degs[a] += 1
            degs[b] += 1
            bridges += 1
        graph = AdhocGraph(n, sorted(edge_set))

    intermix = 0.0
    if graph.m:
        cross = sum(1 for u, v in graph.edges if community[u] != community[v])
        intermix = cross / graph.m
    diag = GenDiagnostics(
        mean_degree=float(graph.degrees().mean()),
        max_degree=int(graph.degrees().max()),
        intermix_fraction=intermix,
        bridges_added=bridges,
        stub_adjustments=adjustments,
        dropped_stubs=dropped,
    )
    return graph, diag


# ----------------------------------------------------------------------
# Mapping and probabilities
# ----------------------------------------------------------------------


def random_mapping(n: int, rng_seed: int) -> LayerMapping:
    """Uniform random social-to-adhoc permutation (unbiased shuffle)."""
    if n < 1:
        raise DomainError("mapping needs at least one node")
    rng = np.random.default_rng(rng_seed)
    return LayerMapping(rng.permutation(n).astype(np.int32))


@dataclass(frozen=True)
class ProbabilityModel:
    """How to put success probabilities on a social graph that lacks them.

    kind: "constant" (uses p), "weighted_cascade" (p_{u,v} = 1/indegree(v)),
    or "trivalency" (each edge draws uniformly from ``values``, seeded).
    """

    kind: str = "constant"
    p: float = 0.1
    values: Sequence[float] = (0.1, 0.01, 0.001)
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("constant", "weighted_cascade", "trivalency"):
            raise DomainError(f"unknown probability model {self.kind!r}")
        if self.kind == "constant" and not (0.0 <= self.p <= 1.0):
            raise DomainError(f"constant p={self.p} outside [0,1]")
        if self.kind == "trivalency":
            if not self.values:
                raise DomainError("trivalency needs a non-empty value set")
            for v in self.values:
                if not (0.0 <= v <= 1.0):
                    raise DomainError(f"trivalency value {v} outside [0,1]")


def assign_probabilities(social: SocialGraph, model: ProbabilityModel) -> SocialGraph:
    """Return a copy of the graph with every edge probability set by the model."""
    if model.kind == "constant":
        prob = np.full(social.m, model.p)
    elif model.kind == "weighted_cascade":
        indeg = np.bincount(social.dst, minlength=social.n) if social.m else np.zeros(social.n)
        prob = 1.0 / indeg[social.dst] if social.m else np.zeros(0)
    else:  # trivalency
        rng = np.random.default_rng(model.rng_seed)
        prob = rng.choice(np.asarray(model.values, dtype=np.float64), size=social.m)
    return social.with_probabilities(prob)


def social_from_undirected(graph: AdhocGraph) -> SocialGraph:
    """Direct an undirected topology: each edge becomes two directed edges.

    Probabilities are left unassigned; run assign_probabilities afterwards.
    Used when the friendship layer is synthesized rather than loaded.
    """
    edges = []
    for u, v in graph.edges:
        edges.append((u, v, math.nan))
        edges.append((v, u, math.nan))
    return SocialGraph(graph.n, edges, labels=graph.labels)
