"""Both network layers, the identity mapping between them, and hop distances.

The social layer is a directed graph with a per-edge success probability;
the ad-hoc layer is undirected and unweighted (message cost = hop count).
Node ids are compacted to a dense 0..n-1 range at load time; the original
labels are kept in a side table so output files speak the input's language.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import DomainError, ParseError

INF = math.inf


# ----------------------------------------------------------------------
# Social layer
# ----------------------------------------------------------------------


class SocialGraph:
    """Directed friendship graph with per-edge success probabilities.

    Edges are stored as parallel arrays sorted by (src, dst) with a CSR
    row pointer for the out-adjacency and a permutation giving the exact
    transpose (in-adjacency). The structure is immutable after
    construction and safe to read concurrently.

    A probability of NaN marks "not yet assigned" (see
    ``netgen.assign_probabilities``).
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]],
                 labels: Sequence[int] | None = None):
        self.n = int(n)
        if labels is None:
            labels = list(range(self.n))
        if len(labels) != self.n:
            raise DomainError(f"{len(labels)} labels for {self.n} nodes")
        self.labels = list(labels)
        self.label_to_id = {lab: i for i, lab in enumerate(self.labels)}

        # Collapse duplicates keeping the last probability seen.
        last: dict[tuple[int, int], float] = {}
        for u, v, p in edges:
            u = int(u)
            v = int(v)
            if u == v:
                raise DomainError(f"self-loop on node {self.labels[u]}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise DomainError(f"edge ({u},{v}) outside id range [0,{self.n})")
            p = float(p)
            if not math.isnan(p) and not (0.0 <= p <= 1.0):
                raise DomainError(f"probability {p} outside [0,1] on edge ({u},{v})")
            last[(u, v)] = p

        keys = sorted(last)
        self.src = np.array([k[0] for k in keys], dtype=np.int32)
        self.dst = np.array([k[1] for k in keys], dtype=np.int32)
        self.prob = np.array([last[k] for k in keys], dtype=np.float64)
        self.m = len(keys)

        counts = np.bincount(self.src, minlength=self.n) if self.m else np.zeros(self.n, dtype=np.int64)
        self.out_indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        # Transpose: permutation of edge ids sorted by (dst, src).
        self.in_order = np.lexsort((self.src, self.dst)).astype(np.int64) if self.m else np.zeros(0, dtype=np.int64)
        in_counts = np.bincount(self.dst, minlength=self.n) if self.m else np.zeros(self.n, dtype=np.int64)
        self.in_indptr = np.concatenate([[0], np.cumsum(in_counts)]).astype(np.int64)
        self._nbrs: list[np.ndarray | None] = [None] * self.n

    # -- adjacency views ------------------------------------------------

    def out_edges(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """(targets, probabilities) of u's outgoing edges, targets ascending."""
        lo, hi = self.out_indptr[u], self.out_indptr[u + 1]
        return self.dst[lo:hi], self.prob[lo:hi]

    def in_edges(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """(sources, probabilities) of v's incoming edges, sources ascending."""
        lo, hi = self.in_indptr[v], self.in_indptr[v + 1]
        ids = self.in_order[lo:hi]
        return self.src[ids], self.prob[ids]

    def out_edge_ids(self, u: int) -> np.ndarray:
        lo, hi = self.out_indptr[u], self.out_indptr[u + 1]
        return np.arange(lo, hi, dtype=np.int64)

    def in_edge_ids(self, v: int) -> np.ndarray:
        lo, hi = self.in_indptr[v], self.in_indptr[v + 1]
        return self.in_order[lo:hi]

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted union of out- and in-neighbors (the friend set of v)."""
        cached = self._nbrs[v]
        if cached is None:
            o, _ = self.out_edges(v)
            i, _ = self.in_edges(v)
            cached = np.union1d(o, i).astype(np.int32)
            self._nbrs[v] = cached
        return cached

    def has_probabilities(self) -> bool:
        return self.m == 0 or not np.isnan(self.prob).any()

    def with_probabilities(self, prob: np.ndarray) -> "SocialGraph":
        """Copy of this graph with the edge probability array replaced."""
        prob = np.asarray(prob, dtype=np.float64)
        if prob.shape != self.prob.shape:
            raise DomainError("probability array shape mismatch")
        edges = zip(self.src.tolist(), self.dst.tolist(), prob.tolist())
        return SocialGraph(self.n, edges, labels=self.labels)

    def __eq__(self, other):
        if not isinstance(other, SocialGraph):
            return NotImplemented
        return (self.n == other.n and self.labels == other.labels
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.prob, other.prob, equal_nan=True))

    def __repr__(self):
        return f"SocialGraph(n={self.n}, m={self.m})"


# ----------------------------------------------------------------------
# Ad-hoc layer
# ----------------------------------------------------------------------


class AdhocGraph:
    """Undirected MANET adjacency; symmetric, no self-loops, unweighted."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]],
                 labels: Sequence[int] | None = None):
        self.n = int(n)
        if labels is None:
            labels = list(range(self.n))
        if len(labels) != self.n:
            raise DomainError(f"{len(labels)} labels for {self.n} nodes")
        self.labels = list(labels)
        self.label_to_id = {lab: i for i, lab in enumerate(self.labels)}

        pairs = set()
        for u, v in edges:
            u = int(u)
            v = int(v)
            if u == v:
                raise DomainError(f"self-loop on node {self.labels[u]}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise DomainError(f"edge ({u},{v}) outside id range [0,{self.n})")
            pairs.add((min(u, v), max(u, v)))
        self.edges = sorted(pairs)
        self.m = len(self.edges)

        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        self.adj = [np.array(sorted(a), dtype=np.int32) for a in adj]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adj], dtype=np.int64)

    def to_csr(self) -> sp.csr_matrix:
        if self.m == 0:
            return sp.csr_matrix((self.n, self.n), dtype=np.int8)
        r = np.array([e[0] for e in self.edges] + [e[1] for e in self.edges])
        c = np.array([e[1] for e in self.edges] + [e[0] for e in self.edges])
        return sp.csr_matrix((np.ones(2 * self.m, dtype=np.int8), (r, c)),
                             shape=(self.n, self.n))

    def __eq__(self, other):
        if not isinstance(other, AdhocGraph):
            return NotImplemented
        return self.n == other.n and self.labels == other.labels and self.edges == other.edges

    def __repr__(self):
        return f"AdhocGraph(n={self.n}, m={self.m})"


# ----------------------------------------------------------------------
# Layer mapping
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LayerMapping:
    """Bijection from social node ids to ad-hoc node ids."""

    to_adhoc: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.to_adhoc, dtype=np.int32)
        object.__setattr__(self, "to_adhoc", arr)
        n = len(arr)
        if n and (np.sort(arr) != np.arange(n)).any():
            raise DomainError("mapping is not a bijection on [0, n)")

    @classmethod
    def identity(cls, n: int) -> "LayerMapping":
        return cls(np.arange(n, dtype=np.int32))

    def inverse(self) -> "LayerMapping":
        inv = np.empty_like(self.to_adhoc)
        inv[self.to_adhoc] = np.arange(len(self.to_adhoc), dtype=np.int32)
        return LayerMapping(inv)

    def __len__(self):
        return len(self.to_adhoc)

    def __getitem__(self, i: int) -> int:
        return int(self.to_adhoc[i])


# ----------------------------------------------------------------------
# Hop distances
# ----------------------------------------------------------------------


class DistanceOracle:
    """Memoized hop distances on the ad-hoc layer.

    Rows are computed by breadth-first search on first use (via scipy's
    unweighted shortest path) and cached. Unreachable pairs report
    ``math.inf``. Concurrent read-through fills may duplicate work but
    each fill writes a complete, immutable row, so readers never see a
    partial result.
    """

    def __init__(self, adhoc: AdhocGraph, max_rows: int | None = None):
        self.adhoc = adhoc
        self.max_rows = max_rows
        self._csr = adhoc.to_csr()
        self._rows: dict[int, np.ndarray] = {}
        self._matrix: np.ndarray | None = None

    def row(self, a: int) -> np.ndarray:
        """Hop distances from a to every node (float array, inf = unreachable)."""
        if not (0 <= a < self.adhoc.n):
            raise DomainError(f"node {a} outside [0,{self.adhoc.n})")
        if self._matrix is not None:
            return self._matrix[a]
        got = self._rows.get(a)
        if got is None:
            got = csgraph.dijkstra(self._csr, directed=False, indices=a,
                                   unweighted=True)
            got.setflags(write=False)
            if self.max_rows is not None and len(self._rows) >= self.max_rows:
                self._rows.pop(next(iter(self._rows)))
            self._rows[a] = got
        return got

    def distance(self, a: int, b: int) -> float:
        """Hop count of the shortest a-b path (0 for a==b, inf if disconnected)."""
        return float(self.row(a)[b])

    def matrix(self) -> np.ndarray:
        """Full all-pairs distance matrix, computed once and cached."""
        if self._matrix is None:
            mat = csgraph.shortest_path(self._csr, method="D", directed=False,
                                        unweighted=True)
            mat.setflags(write=False)
            self._matrix = mat
        return self._matrix


def hop_distance(oracle: DistanceOracle, a: int, b: int) -> float:
    """Shortest-path hop count between a and b in the ad-hoc layer."""
    return oracle.distance(a, b)


# ----------------------------------------------------------------------
# Loading and saving
# ----------------------------------------------------------------------


def _data_lines(stream: IO[str]):
    for no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield no, line


def load_social(stream: IO[str]) -> SocialGraph:
    """Parse a SNAP-style edge list: ``u v`` or ``u v p`` per line.

    Node labels are compacted (sorted numerically) to dense ids; duplicate
    edges keep the last probability; lines starting with ``#`` are ignored.
    """
    records: list[tuple[int, int, float]] = []
    label_set: set[int] = set()
    for no, line in _data_lines(stream):
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'u v' or 'u v p', got {line!r}", line_no=no)
        try:
            u = int(parts[0])
            v = int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node label in {line!r}", line_no=no) from None
        if len(parts) == 3:
            try:
                p = float(parts[2])
            except ValueError:
                raise ParseError(f"non-numeric probability in {line!r}", line_no=no) from None
            if not (0.0 <= p <= 1.0):
                raise DomainError(f"line {no}: probability {p} outside [0,1]")
        else:
            p = math.nan
        if u == v:
            raise DomainError(f"line {no}: self-loop on node {u}")
        records.append((u, v, p))
        label_set.add(u)
        label_set.add(v)
    labels = sorted(label_set)
    to_id = {lab: i for i, lab in enumerate(labels)}
    edges = [(to_id[u], to_id[v], p) for u, v, p in records]
    return SocialGraph(len(labels), edges, labels=labels)


def load_adhoc(stream: IO[str]) -> AdhocGraph:
    """Parse an undirected edge list: ``u v`` per line, pairs unordered."""
    records: list[tuple[int, int]] = []
    label_set: set[int] = set()
    for no, line in _data_lines(stream):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'u v', got {line!r}", line_no=no)
        try:
            u = int(parts[0])
            v = int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node label in {line!r}", line_no=no) from None
        if u == v:
            raise DomainError(f"line {no}: self-loop on node {u}")
        records.append((u, v))
        label_set.add(u)
        label_set.add(v)
    labels = sorted(label_set)
    to_id = {lab: i for i, lab in enumerate(labels)}
    edges = [(to_id[u], to_id[v]) for u, v in records]
    return AdhocGraph(len(labels), edges, labels=labels)


def dump_social(graph: SocialGraph, stream: IO[str]) -> None:
    """Write the graph back as an edge list using original labels."""
    for e in range(graph.m):
        u = graph.labels[graph.src[e]]
        v = graph.labels[graph.dst[e]]
        p = graph.prob[e]
        if math.isnan(p):
            stream.write(f"{u} {v}\n")
        else:
            stream.write(f"{u} {v} {float(p)!r}\n")


def dump_adhoc(graph: AdhocGraph, stream: IO[str]) -> None:
    for u, v in graph.edges:
        stream.write(f"{graph.labels[u]} {graph.labels[v]}\n")


# ----------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------


@dataclass
class LayerDiagnostics:
    """Read-only findings from validate_layers; never mutates its inputs."""

    component_sizes: list[int]
    isolated_social: list[int]
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings


def validate_layers(social: SocialGraph, adhoc: AdhocGraph,
                    mapping: LayerMapping) -> LayerDiagnostics:
    """Cross-check the two layers and the mapping between them.

    A node-count mismatch is a hard error; disconnection of the ad-hoc
    layer and isolated social nodes are reported as warnings.
    """
    if social.n != adhoc.n:
        raise DomainError(
            f"layer node counts differ: social {social.n} vs adhoc {adhoc.n}")
    if len(mapping) != social.n:
        raise DomainError(
            f"mapping covers {len(mapping)} nodes, layers have {social.n}")

    if adhoc.n:
        ncomp, comp = csgraph.connected_components(adhoc.to_csr(), directed=False)
        sizes = sorted(np.bincount(comp).tolist(), reverse=True)
    else:
        sizes = []
    warnings = []
    if len(sizes) > 1:
        warnings.append(f"ad-hoc layer has {len(sizes)} components, sizes {sizes}")

    isolated = [v for v in range(social.n) if len(social.neighbors(v)) == 0]
    if isolated:
        warnings.append(f"{len(isolated)} isolated social nodes")
    return LayerDiagnostics(component_sizes=sizes, isolated_social=isolated,
                            warnings=warnings)
