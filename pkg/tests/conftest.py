"""Shared fixtures: the 8-node worked instance and random instance builders."""

from __future__ import annotations

import numpy as np
import pytest

from crosslayer import (AdhocGraph, AgentAssignment, DistanceOracle,
                        LayerMapping, SocialGraph)

# Node ids are labels 1..8 shifted down by one. Friendships are symmetric;
# node 5 has no friends. The ad-hoc layout is chosen so that the hop
# distances between the well-known agent pairs come out as 4, 3, 2, 2, 3.
FRIENDSHIPS = [(4, 2), (4, 3), (4, 6), (4, 7), (2, 1), (2, 6), (3, 1),
               (3, 8), (6, 1)]
ADHOC_LINKS = [(1, 5), (4, 5), (5, 6), (6, 3), (3, 2), (4, 7), (3, 8)]


def make_example_social(p: float = 0.5) -> SocialGraph:
    edges = []
    for a, b in FRIENDSHIPS:
        edges.append((a - 1, b - 1, p))
        edges.append((b - 1, a - 1, p))
    return SocialGraph(8, edges)


@pytest.fixture
def example_social() -> SocialGraph:
    return make_example_social()


@pytest.fixture
def example_adhoc() -> AdhocGraph:
    return AdhocGraph(8, [(a - 1, b - 1) for a, b in ADHOC_LINKS])


@pytest.fixture
def example_oracle(example_adhoc) -> DistanceOracle:
    return DistanceOracle(example_adhoc)


@pytest.fixture
def example_mapping() -> LayerMapping:
    return LayerMapping.identity(8)


@pytest.fixture
def example_agents() -> AgentAssignment:
    """The known good assignment: 4 serves {2, 4, 6}, 1 serves {1, 3, 5}."""
    agent = np.arange(8, dtype=np.int32)
    for node, ag in [(2, 4), (4, 4), (6, 4), (1, 1), (3, 1), (5, 1)]:
        agent[node - 1] = ag - 1
    return AgentAssignment(agent=agent, represented=np.ones(8, dtype=bool))


# ----------------------------------------------------------------------
# Random instance builders
# ----------------------------------------------------------------------


def random_adhoc(n: int, extra_edges: int, rng: np.random.Generator) -> AdhocGraph:
    """Connected undirected graph: a random tree plus extra random edges."""
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a = int(order[i])
        b = int(order[rng.integers(0, i)])
        edges.add((min(a, b), max(a, b)))
    for _ in range(extra_edges):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
    return AdhocGraph(n, sorted(edges))


def random_social(n: int, m: int, rng: np.random.Generator,
                  p_low: float = 0.0, p_high: float = 1.0,
                  symmetric: bool = False) -> SocialGraph:
    edges = {}
    for _ in range(m):
        u, v = rng.integers(0, n, size=2)
        if u == v:
            continue
        p = float(rng.uniform(p_low, p_high))
        edges[(int(u), int(v))] = p
        if symmetric:
            edges[(int(v), int(u))] = p
    return SocialGraph(n, [(u, v, p) for (u, v), p in edges.items()])


def random_instance(n: int, rng: np.random.Generator, symmetric: bool = True):
    """(social, adhoc, oracle, mapping) with a connected ad-hoc layer."""
    social = random_social(n, max(2 * n, 4), rng, p_low=0.05, p_high=0.95,
                           symmetric=symmetric)
    adhoc = random_adhoc(n, n // 2, rng)
    mapping = LayerMapping(rng.permutation(n).astype(np.int32))
    return social, adhoc, DistanceOracle(adhoc), mapping
