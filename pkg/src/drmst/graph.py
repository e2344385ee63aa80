"""Undirected graphs, deterministic Prim and exhaustive spanning-tree enumeration."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

DEFAULT_TREE_CAP = 10**7
_CHUNK = 1 << 18


class EnumerationLimitError(RuntimeError):
    """Raised when an instance has more spanning trees than the enumeration cap."""


@dataclass(frozen=True)
class Graph:
    node_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        n = self.node_count
        if n < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        for j, (u, v) in enumerate(edges):
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge {j} has endpoint outside 0..{n - 1}")
            if u == v:
                raise ValueError(f"edge {j} is a self-loop on node {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"edge {j} duplicates node pair {key}")
            seen.add(key)
        if not _connected(n, edges):
            raise ValueError("graph is not connected")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_index(self) -> np.ndarray:
        """n x n matrix of edge ids, -1 where no edge."""
        idx = np.full((self.node_count, self.node_count), -1, dtype=np.int64)
        for j, (u, v) in enumerate(self.edges):
            idx[u, v] = idx[v, u] = j
        return idx

    def incident(self, node: int) -> list[int]:
        return [j for j, e in enumerate(self.edges) if node in e]


def _connected(n: int, edges: Sequence[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


@dataclass(frozen=True)
class SpanningTree:
    edge_ids: frozenset[int]
    edge_count: int

    @classmethod
    def of(cls, edge_ids, edge_count: int) -> "SpanningTree":
        return cls(frozenset(int(e) for e in edge_ids), int(edge_count))

    def incidence(self) -> np.ndarray:
        y = np.zeros(self.edge_count)
        y[list(self.edge_ids)] = 1.0
        return y

    @property
    def sorted_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.edge_ids))

    def is_valid(self, graph: Graph) -> bool:
        """Connected, spans every node, and has exactly n - 1 edges."""
        if self.edge_count != graph.edge_count:
            return False
        if len(self.edge_ids) != graph.node_count - 1:
            return False
        if any(not 0 <= e < graph.edge_count for e in self.edge_ids):
            return False
        return _connected(graph.node_count, [graph.edges[e] for e in self.edge_ids])

    def weight(self, weights) -> float:
        w = np.asarray(weights, dtype=float)
        return float(w[list(self.sorted_ids)].sum())


def prim(graph: Graph, weights) -> SpanningTree:
    """Minimum spanning tree grown from node 0.

    Every step adds the crossing edge with the smallest ``(weight, edge_id)``
    pair, so ties go to the smallest edge id and the result is the unique
    minimum under that lexicographic order.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (graph.edge_count,):
        raise ValueError(f"expected {graph.edge_count} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    n = graph.node_count
    idx = graph.edge_index
    wmat = np.where(idx >= 0, w[np.maximum(idx, 0)], np.inf)
    big = np.iinfo(np.int64).max
    idmat = np.where(idx >= 0, idx, big)

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    key = wmat[0].copy()
    key_id = idmat[0].copy()
    key[0] = np.inf
    chosen = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, key)
        best = cand.min()
        if not np.isfinite(best):
            raise ValueError("graph is disconnected")
        ties = np.flatnonzero(cand == best)
        v = ties[np.argmin(key_id[ties])] if len(ties) > 1 else ties[0]
        chosen.append(int(key_id[v]))
        in_tree[v] = True
        row_w, row_id = wmat[v], idmat[v]
        better = (row_w < key) | ((row_w == key) & (row_id < key_id))
        better &= ~in_tree
        key = np.where(better, row_w, key)
        key_id = np.where(better, row_id, key_id)
    return SpanningTree.of(chosen, graph.edge_count)


def count_spanning_trees(graph: Graph) -> int:
    """Kirchhoff count: determinant of a reduced Laplacian."""
    n = graph.node_count
    if n == 1:
        return 1
    lap = np.zeros((n, n))
    for u, v in graph.edges:
        lap[u, u] += 1
        lap[v, v] += 1
        lap[u, v] -= 1
        lap[v, u] -= 1
    sign, logdet = np.linalg.slogdet(lap[1:, 1:])
    return int(round(sign * np.exp(logdet)))


_tree_cache: dict[tuple[Graph, int], np.ndarray] = {}


def tree_matrix(graph: Graph, cap: int = DEFAULT_TREE_CAP) -> np.ndarray:
    """All spanning trees as a (T, n-1) array of sorted edge ids, rows in lexicographic order.

    Each non-root node picks one incident edge towards its parent; an
    assignment is a tree exactly when following parents from every node
    reaches node 0. Each tree is produced once (its orientation to node 0
    is unique).
    """
    cache_key = (graph, cap)
    if cache_key in _tree_cache:
        return _tree_cache[cache_key]
    n = graph.node_count
    if n == 1:
        out = np.zeros((1, 0), dtype=np.int64)
        _tree_cache[cache_key] = out
        return out
    expected = count_spanning_trees(graph)
    if expected > cap:
        raise EnumerationLimitError(
            f"graph has about {expected} spanning trees, above the cap of {cap}; "
            "exhaustive methods are limited to small instances"
        )
    inc = [graph.incident(v) for v in range(1, n)]
    degs = np.array([len(c) for c in inc], dtype=np.int64)
    total = int(np.prod(degs.astype(object)))
    if total > 50 * cap:
        raise EnumerationLimitError(
            f"{total} parent assignments to scan exceeds the enumeration budget"
        )
    width = int(degs.max())
    edge_of = np.full((n - 1, width), -1, dtype=np.int64)
    parent_of = np.full((n - 1, width), -1, dtype=np.int64)
    for i, cands in enumerate(inc):
        v = i + 1
        for c, e in enumerate(cands):
            a, b = graph.edges[e]
            edge_of[i, c] = e
            parent_of[i, c] = b if a == v else a
    strides = np.ones(n - 1, dtype=np.int64)
    for i in range(n - 3, -1, -1):
        strides[i] = strides[i + 1] * degs[i + 1]
    steps = max(1, int(np.ceil(np.log2(n))) + 1)
    rows = np.arange(n - 1)
    found = []
    for start in range(0, total, _CHUNK):
        code = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        digits = (code[:, None] // strides[None, :]) % degs[None, :]
        parents = np.empty((len(code), n), dtype=np.int64)
        parents[:, 0] = 0
        parents[:, 1:] = parent_of[rows[None, :], digits]
        reach = parents
        for _ in range(steps):
            reach = np.take_along_axis(reach, reach, axis=1)
        ok = np.all(reach == 0, axis=1)
        if ok.any():
            found.append(edge_of[rows[None, :], digits[ok]])
    trees = np.concatenate(found) if found else np.zeros((0, n - 1), dtype=np.int64)
    trees.sort(axis=1)
    order = np.lexsort(trees.T[::-1])
    trees = np.ascontiguousarray(trees[order])
    trees.setflags(write=False)
    if len(_tree_cache) > 64:
        _tree_cache.clear()
    _tree_cache[cache_key] = trees
    return trees


def enumerate_spanning_trees(graph: Graph, cap: int = DEFAULT_TREE_CAP) -> Iterator[SpanningTree]:
    m = graph.edge_count
    for row in tree_matrix(graph, cap):
        yield SpanningTree.of(row, m)
