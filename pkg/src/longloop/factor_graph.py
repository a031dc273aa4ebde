"""Bipartite factor-graphs built from clique covers, and their 2-cores.

Each factor is a vertex subset (a cluster of the source graph).  Links are
numbered by their position in the factor-major membership array ``fmem``;
``vlinks`` lists the same link ids grouped by vertex, so that
``link_factor[vlinks[vptr[i]:vptr[i+1]]]`` are the factors of vertex ``i``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
from numba import njit

from .graph import Graph


class CoverError(ValueError):
    """Invalid user-supplied cover."""


@dataclass(frozen=True)
class CoverRecipe:
    max_clique_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.max_clique_size not in (2, 3, 4):
            raise ValueError("max_clique_size must be 2, 3 or 4")


class FactorGraph:
    """Vertices and factors of a bipartite factor-graph over ``source``."""

    def __init__(self, n_vertices: int, factors: Sequence[Sequence[int]], source: Graph | None = None):
        self.n_vertices = int(n_vertices)
        self.source = source
        sizes = np.fromiter((len(f) for f in factors), dtype=np.int64, count=len(factors))
        if len(sizes) and sizes.min() < 2:
            raise ValueError("every factor needs at least two members")
        self.fptr = np.zeros(len(sizes) + 1, dtype=np.int64)
        np.cumsum(sizes, out=self.fptr[1:])
        self.fmem = (np.concatenate([np.asarray(f, dtype=np.int64) for f in factors])
                     if len(factors) else np.zeros(0, dtype=np.int64))
        if len(self.fmem) and (self.fmem.min() < 0 or self.fmem.max() >= n_vertices):
            raise ValueError("factor member out of range")
        self.link_factor = np.repeat(np.arange(len(sizes), dtype=np.int64), sizes)
        self.link_vertex = self.fmem
        order = np.lexsort((self.fmem, self.link_factor))
        sf, sm = self.link_factor[order], self.fmem[order]
        dup = (sf[1:] == sf[:-1]) & (sm[1:] == sm[:-1])
        if dup.any():
            raise ValueError(f"factor {int(sf[1:][dup][0])} lists a vertex twice")
        self.vlinks = np.argsort(self.fmem, kind="stable").astype(np.int64)
        self.vptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.add.at(self.vptr, self.fmem + 1, 1)
        np.cumsum(self.vptr, out=self.vptr)

    @property
    def n_factors(self) -> int:
        return len(self.fptr) - 1

    @property
    def n_links(self) -> int:
        return len(self.fmem)

    @property
    def factors(self) -> list[tuple[int, ...]]:
        return [tuple(self.members(a).tolist()) for a in range(self.n_factors)]

    def members(self, a: int) -> np.ndarray:
        return self.fmem[self.fptr[a]:self.fptr[a + 1]]

    def vertex_factors(self, i: int) -> np.ndarray:
        return self.link_factor[self.vlinks[self.vptr[i]:self.vptr[i + 1]]]

    @property
    def factor_sizes(self) -> np.ndarray:
        return np.diff(self.fptr)

    @property
    def vertex_degrees(self) -> np.ndarray:
        return np.diff(self.vptr)

    def __repr__(self):
        return f"FactorGraph(n_vertices={self.n_vertices}, n_factors={self.n_factors}, n_links={self.n_links})"


# ----------------------------------------------------------------------------
# bipartite 2-core


@njit(cache=True)
def _kill_and_peel(kill, fptr, fmem, vptr, vlinks, link_factor,
                   valive, falive, vdeg, fsize, seed_all, vstack, fstack, vq, fq):
    """Remove the vertices in ``kill`` and prune to the bipartite 2-core.

    Mutates masks and counters in place. With ``seed_all`` every live node at
    or below the threshold is queued first (full peel from scratch). The
    ``vq``/``fq`` queued flags persist between calls: a queued node always
    dies, so it never needs queueing again.
    """
    nv = len(valive)
    nf = len(falive)
    nvs = 0
    nfs = 0
    for v in kill:
        if valive[v] and not vq[v]:
            vq[v] = True
            vstack[nvs] = v
            nvs += 1
    if seed_all:
        for v in range(nv):
            if valive[v] and vdeg[v] <= 1 and not vq[v]:
                vq[v] = True
                vstack[nvs] = v
                nvs += 1
        for a in range(nf):
            if falive[a] and fsize[a] <= 1:
                fq[a] = True
                fstack[nfs] = a
                nfs += 1
    while nvs > 0 or nfs > 0:
        if nvs > 0:
            nvs -= 1
            v = vstack[nvs]
            if not valive[v]:
                continue
            valive[v] = False
            vdeg[v] = 0
            for k in range(vptr[v], vptr[v + 1]):
                a = link_factor[vlinks[k]]
                if falive[a]:
                    fsize[a] -= 1
                    if fsize[a] <= 1 and not fq[a]:
                        fq[a] = True
                        fstack[nfs] = a
                        nfs += 1
        else:
            nfs -= 1
            a = fstack[nfs]
            if not falive[a]:
                continue
            falive[a] = False
            fsize[a] = 0
            for k in range(fptr[a], fptr[a + 1]):
                j = fmem[k]
                if valive[j]:
                    vdeg[j] -= 1
                    if vdeg[j] <= 1 and not vq[j]:
                        vq[j] = True
                        vstack[nvs] = j
                        nvs += 1


class FactorCore:
    """Mutable bipartite 2-core of a factor-graph under vertex deletions.

    ``valive``/``falive`` flag surviving vertices and factors; ``vdeg`` counts
    surviving factors per vertex and ``fsize`` surviving members per factor.
    """

    def __init__(self, fg: FactorGraph, removed=None):
        self.fg = fg
        self.deleted = np.zeros(fg.n_vertices, dtype=bool)
        if removed is not None:
            idx = _as_index(removed, fg.n_vertices)
            self.deleted[idx] = True
        self.valive = ~self.deleted
        self.falive = np.ones(fg.n_factors, dtype=bool)
        self.vdeg = np.where(self.valive, fg.vertex_degrees, 0).astype(np.int64)
        self.fsize = np.bincount(fg.link_factor[self.valive[fg.fmem]],
                                 minlength=fg.n_factors).astype(np.int64)
        self._buffers()
        self._run(np.zeros(0, dtype=np.int64), True)

    def _buffers(self):
        fg = self.fg
        self._vstack = np.empty(fg.n_vertices, dtype=np.int64)
        self._fstack = np.empty(fg.n_factors, dtype=np.int64)
        self._vq = ~self.valive
        self._fq = ~self.falive

    def _run(self, kill, seed_all):
        fg = self.fg
        _kill_and_peel(kill, fg.fptr, fg.fmem, fg.vptr, fg.vlinks, fg.link_factor,
                       self.valive, self.falive, self.vdeg, self.fsize, seed_all,
                       self._vstack, self._fstack, self._vq, self._fq)

    def delete(self, vertices) -> None:
        """Delete vertices (they become part of the removed set) and re-peel."""
        idx = _as_index(vertices, self.fg.n_vertices)
        self.deleted[idx] = True
        self._run(idx, False)

    @property
    def vertices(self) -> np.ndarray:
        return np.flatnonzero(self.valive)

    @property
    def factors(self) -> np.ndarray:
        return np.flatnonzero(self.falive)

    @property
    def n_vertices(self) -> int:
        return int(self.valive.sum())

    @property
    def n_factors(self) -> int:
        return int(self.falive.sum())

    def is_empty(self) -> bool:
        return not self.valive.any()

    def link_mask(self) -> np.ndarray:
        fg = self.fg
        return self.valive[fg.link_vertex] & self.falive[fg.link_factor]

    def copy(self) -> "FactorCore":
        new = object.__new__(FactorCore)
        new.fg = self.fg
        for name in ("deleted", "valive", "falive", "vdeg", "fsize"):
            setattr(new, name, getattr(self, name).copy())
        new._buffers()
        return new


def _as_index(vertices, n) -> np.ndarray:
    arr = np.asarray(list(vertices) if isinstance(vertices, (set, frozenset)) else vertices)
    if arr.dtype == bool:
        return np.flatnonzero(arr).astype(np.int64)
    return arr.astype(np.int64).reshape(-1)


def fg_two_core(fg: FactorGraph, removed_vertices=()) -> FactorCore:
    """Bipartite 2-core of ``fg`` with ``removed_vertices`` deleted."""
    return FactorCore(fg, removed_vertices)


def is_long_loop_free(fg: FactorGraph, removed_vertices=()) -> bool:
    """True iff deleting ``removed_vertices`` leaves no vertex-factor loop."""
    return fg_two_core(fg, removed_vertices).is_empty()


def full_view(fg: FactorGraph) -> FactorCore:
    """A view holding every vertex and factor (no pruning)."""
    core = object.__new__(FactorCore)
    core.fg = fg
    core.deleted = np.zeros(fg.n_vertices, dtype=bool)
    core.valive = np.ones(fg.n_vertices, dtype=bool)
    core.falive = np.ones(fg.n_factors, dtype=bool)
    core.vdeg = fg.vertex_degrees.astype(np.int64)
    core.fsize = fg.factor_sizes.astype(np.int64)
    core._buffers()
    return core


# ----------------------------------------------------------------------------
# clique enumeration and covers


def _forward_adjacency(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    # orient each edge from lower to higher (degree, id) rank
    deg = g.degrees
    rank = np.empty(g.n_vertices, dtype=np.int64)
    rank[np.lexsort((np.arange(g.n_vertices), deg))] = np.arange(g.n_vertices)
    e = g.edges
    if len(e) == 0:
        return np.zeros(g.n_vertices + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    flip = rank[e[:, 0]] > rank[e[:, 1]]
    src = np.where(flip, e[:, 1], e[:, 0])
    dst = np.where(flip, e[:, 0], e[:, 1])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    ptr = np.zeros(g.n_vertices + 1, dtype=np.int64)
    np.add.at(ptr, src + 1, 1)
    return np.cumsum(ptr), dst.astype(np.int64)


@njit(cache=True)
def _intersect(a, b, out):
    i = j = n = 0
    while i < len(a) and j < len(b):
        if a[i] < b[j]:
            i += 1
        elif a[i] > b[j]:
            j += 1
        else:
            out[n] = a[i]
            n += 1
            i += 1
            j += 1
    return n


@njit(cache=True)
def _cliques(ptr, nbr, k, fill, out):
    nv = len(ptr) - 1
    maxd = 0
    for u in range(nv):
        maxd = max(maxd, ptr[u + 1] - ptr[u])
    buf1 = np.empty(maxd, dtype=np.int64)
    buf2 = np.empty(maxd, dtype=np.int64)
    count = 0
    for u in range(nv):
        fu = nbr[ptr[u]:ptr[u + 1]]
        for v in fu:
            n1 = _intersect(fu, nbr[ptr[v]:ptr[v + 1]], buf1)
            for t in range(n1):
                w = buf1[t]
                if k == 3:
                    if fill:
                        out[count, 0] = u
                        out[count, 1] = v
                        out[count, 2] = w
                    count += 1
                else:
                    n2 = _intersect(buf1[:n1], nbr[ptr[w]:ptr[w + 1]], buf2)
                    for s in range(n2):
                        if fill:
                            out[count, 0] = u
                            out[count, 1] = v
                            out[count, 2] = w
                            out[count, 3] = buf2[s]
                        count += 1
    return count


def enumerate_cliques(g: Graph, k: int) -> np.ndarray:
    """All ``k``-cliques of ``g`` (k = 2, 3, 4), one per row, members sorted.

    Triangles come from intersecting rank-ordered forward adjacencies;
    4-cliques extend each triangle by common forward neighbours.
    """
    if k == 2:
        return g.edges.copy()
    if k not in (3, 4):
        raise ValueError("only k in {2, 3, 4} is supported")
    ptr, nbr = _forward_adjacency(g)
    dummy = np.zeros((0, k), dtype=np.int64)
    n = _cliques(ptr, nbr, k, False, dummy)
    out = np.empty((n, k), dtype=np.int64)
    _cliques(ptr, nbr, k, True, out)
    return np.sort(out, axis=1)


def edge_ids(g: Graph, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row index in ``g.edges`` of each pair (``-1`` if not an edge)."""
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    keys = g.edges[:, 0] * g.n_vertices + g.edges[:, 1]
    q = lo * g.n_vertices + hi
    pos = np.searchsorted(keys, q)
    pos = np.minimum(pos, max(len(keys) - 1, 0))
    ok = len(keys) > 0
    hit = (keys[pos] == q) if ok else np.zeros(len(q), dtype=bool)
    return np.where(hit, pos, -1)


def _clique_edge_ids(g: Graph, cl: np.ndarray) -> np.ndarray:
    k = cl.shape[1]
    cols = [edge_ids(g, cl[:, i], cl[:, j]) for i in range(k) for j in range(i + 1, k)]
    return np.stack(cols, axis=1) if cols else np.zeros((len(cl), 0), dtype=np.int64)


@njit(cache=True)
def _greedy_accept(eids, used):
    accept = np.zeros(len(eids), dtype=np.bool_)
    for c in range(len(eids)):
        ok = True
        for t in range(eids.shape[1]):
            if used[eids[c, t]]:
                ok = False
                break
        if ok:
            accept[c] = True
            for t in range(eids.shape[1]):
                used[eids[c, t]] = True
    return accept


def build_clique_cover(g: Graph, recipe: CoverRecipe) -> FactorGraph:
    """Greedy randomised edge-disjoint clique cover.

    For ``k = max_clique_size`` down to 3 the k-cliques are enumerated, visited
    in a seeded uniform shuffle and accepted when none of their edges is taken
    yet. Edges left over become 2-clique factors.
    """
    rng = np.random.default_rng(recipe.seed)
    used = np.zeros(g.n_edges, dtype=np.bool_)
    factors: list[np.ndarray] = []
    for k in range(recipe.max_clique_size, 2, -1):
        cl = enumerate_cliques(g, k)
        if len(cl) == 0:
            continue
        cl = cl[rng.permutation(len(cl))]
        acc = _greedy_accept(_clique_edge_ids(g, cl), used)
        factors.extend(cl[acc])
    factors.extend(g.edges[~used])
    return FactorGraph(g.n_vertices, factors, source=g)


def trivial_cover(g: Graph) -> FactorGraph:
    """One 2-clique factor per edge: the plain-graph baseline."""
    return FactorGraph(g.n_vertices, list(g.edges), source=g)


def cover_for(g: Graph, max_clique: int, seed: int = 0) -> FactorGraph:
    if max_clique == 2:
        return trivial_cover(g)
    return build_clique_cover(g, CoverRecipe(max_clique, seed))


def _connected_within(g: Graph, members: np.ndarray) -> bool:
    inside = set(members.tolist())
    start = int(members[0])
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v).tolist():
            if u in inside and u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen) == len(inside)


def load_cover(g: Graph, source: TextIO) -> FactorGraph:
    """Read one factor per line (vertex labels); factors may overlap.

    Raises ``CoverError`` for unknown labels, factors that are not connected in
    ``g``, or edges of ``g`` left uncovered.
    """
    factors = []
    for lineno, line in enumerate(source, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        mem = []
        for lab in s.split():
            try:
                mem.append(g.index_of(lab))
            except KeyError:
                raise CoverError(f"line {lineno}: unknown vertex {lab!r}") from None
        arr = np.array(mem, dtype=np.int64)
        if len(np.unique(arr)) != len(arr):
            raise CoverError(f"line {lineno}: vertex repeated within a factor")
        if len(arr) < 2:
            raise CoverError(f"line {lineno}: a factor needs at least two vertices")
        if not _connected_within(g, arr):
            raise CoverError(f"line {lineno}: factor is not a connected subgraph")
        factors.append(arr)
    covered = np.zeros(g.n_edges, dtype=bool)
    for f in factors:
        iu, ju = np.triu_indices(len(f), 1)
        ids = edge_ids(g, f[iu], f[ju])
        covered[ids[ids >= 0]] = True
    if not covered.all():
        bad = g.edges[~covered]
        listed = ", ".join(f"({g.labels[u]},{g.labels[v]})" for u, v in bad[:20])
        more = "" if len(bad) <= 20 else f" and {len(bad) - 20} more"
        raise CoverError(f"{len(bad)} edges not covered by any factor: {listed}{more}")
    return FactorGraph(g.n_vertices, factors, source=g)


def write_cover(fg: FactorGraph, stream: TextIO, labels=None) -> None:
    if labels is None:
        labels = fg.source.labels if fg.source is not None else [str(i) for i in range(fg.n_vertices)]
    for a in range(fg.n_factors):
        stream.write(" ".join(labels[i] for i in fg.members(a)) + "\n")
