"""Simple undirected graphs, edge-list ingestion, 2-cores and components."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

log = logging.getLogger(__name__)


class EdgeListError(ValueError):
    """Malformed edge-list input."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple graph with dense integer ids.

    ``indptr``/``indices`` hold the adjacency in CSR form with sorted
    neighbour lists; ``edges`` is an ``(M, 2)`` array with ``u < v``.
    ``labels[i]`` is the external label of internal vertex ``i``.
    """

    n_vertices: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    labels: list[str]
    n_self_loops: int = 0
    n_duplicates: int = 0
    _index: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable, labels=None,
                   n_self_loops: int = 0, n_duplicates: int = 0) -> "Graph":
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                       dtype=np.int64).reshape(-1, 2)
        if len(e):
            if e.min() < 0 or e.max() >= n_vertices:
                raise ValueError("edge endpoint out of range")
            e = e[e[:, 0] != e[:, 1]]
            e = np.sort(e, axis=1)
            e = np.unique(e, axis=0)
        indptr, indices = _csr(n_vertices, e)
        if labels is None:
            labels = [str(i) for i in range(n_vertices)]
        labels = list(labels)
        if len(labels) != n_vertices:
            raise ValueError("labels must have one entry per vertex")
        return cls(n_vertices, e, indptr, indices, labels, n_self_loops, n_duplicates)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < len(nb) and nb[k] == v)

    def index_of(self, label: str) -> int:
        """Internal id of an external label (``KeyError`` if unknown)."""
        if not self._index:
            self._index.update((lab, i) for i, lab in enumerate(self.labels))
        return self._index[label]

    def adjacency_matrix(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return sp.csr_matrix((data, self.indices, self.indptr),
                             shape=(self.n_vertices, self.n_vertices))

    def view(self, removed=None) -> "VertexSubsetView":
        return VertexSubsetView(self, removed)


def _csr(n: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(edges) == 0:
        return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst.astype(np.int64)


class VertexSubsetView:
    """Induced subgraph of ``parent`` on the vertices not flagged as removed."""

    def __init__(self, parent: Graph, removed=None):
        self.parent = parent
        if removed is None:
            self.removed = np.zeros(parent.n_vertices, dtype=bool)
        else:
            removed = np.asarray(removed)
            if removed.dtype == bool:
                self.removed = removed.copy()
            else:
                self.removed = np.zeros(parent.n_vertices, dtype=bool)
                self.removed[removed.astype(np.int64)] = True

    @property
    def present(self) -> np.ndarray:
        return ~self.removed

    @property
    def vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.removed)

    @property
    def n_present(self) -> int:
        return int((~self.removed).sum())

    def __len__(self) -> int:
        return self.n_present

    def remove(self, v: int) -> None:
        self.removed[v] = True

    def degrees(self) -> np.ndarray:
        """Degree of every vertex in the induced subgraph (0 for removed ones)."""
        g = self.parent
        rows = np.repeat(np.arange(g.n_vertices), np.diff(g.indptr))
        alive_nb = (~self.removed)[g.indices]
        deg = np.bincount(rows[alive_nb], minlength=g.n_vertices).astype(np.int64)
        deg[self.removed] = 0
        return deg

    def n_edges(self) -> int:
        return int(self.degrees().sum() // 2)


def _as_view(g) -> VertexSubsetView:
    return g if isinstance(g, VertexSubsetView) else VertexSubsetView(g)


def load_edge_list(source: TextIO) -> Graph:
    """Parse a whitespace-separated edge list.

    Lines starting with ``#`` and blank lines are skipped. Labels get dense ids
    in order of first appearance. Self-loops and repeated edges are dropped and
    tallied on the returned graph.
    """
    ids: dict[str, int] = {}
    labels: list[str] = []
    pairs: list[tuple[int, int]] = []
    loops = 0
    for lineno, line in enumerate(source, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        tok = s.split()
        if len(tok) != 2:
            raise EdgeListError(f"line {lineno}: expected 2 labels, got {len(tok)}")
        uv = []
        for t in tok:
            if t not in ids:
                ids[t] = len(labels)
                labels.append(t)
            uv.append(ids[t])
        if uv[0] == uv[1]:
            loops += 1
            continue
        pairs.append((uv[0], uv[1]))
    e = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    n_raw = len(e)
    g = Graph.from_edges(len(labels), e, labels)
    dups = n_raw - g.n_edges
    if loops or dups:
        log.warning("edge list: dropped %d self-loops and %d duplicate edges", loops, dups)
    return Graph(g.n_vertices, g.edges, g.indptr, g.indices, g.labels, loops, dups)


def write_edge_list(g: Graph, stream: TextIO) -> None:
    lab = g.labels
    for u, v in g.edges:
        stream.write(f"{lab[u]} {lab[v]}\n")


def two_core(g) -> VertexSubsetView:
    """Maximal induced subgraph with minimum degree 2 (leaf peeling)."""
    view = _as_view(g)
    parent = view.parent
    removed = view.removed.copy()
    deg = view.degrees()
    queue = deque(np.flatnonzero(~removed & (deg <= 1)).tolist())
    indptr, indices = parent.indptr, parent.indices
    while queue:
        v = queue.popleft()
        if removed[v]:
            continue
        removed[v] = True
        for u in indices[indptr[v]:indptr[v + 1]]:
            if not removed[u]:
                deg[u] -= 1
                if deg[u] == 1:
                    queue.append(u)
    return VertexSubsetView(parent, removed)


def connected_components(g) -> list[np.ndarray]:
    """Components of the present vertices, largest first."""
    view = _as_view(g)
    keep = view.vertices
    if len(keep) == 0:
        return []
    adj = view.parent.adjacency_matrix()[keep][:, keep]
    _, lab = _cc(adj, directed=False)
    order = np.argsort(lab, kind="stable")
    splits = np.flatnonzero(np.diff(lab[order])) + 1
    comps = [keep[c] for c in np.split(order, splits)]
    comps.sort(key=len, reverse=True)
    return comps


class UnionFind:
    """Disjoint sets over ``0..n-1`` with union by size and path halving."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return int(x)

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra
