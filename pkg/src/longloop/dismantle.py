"""Decimation (FBPD, FCoreHD) and network dismantling with capped reinsertion.

Running either algorithm on :func:`~longloop.factor_graph.trivial_cover`
gives the plain-graph baselines BPD and CoreHD.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .bp import BPParams, MessageSet, bp_sweep, marginals
from .factor_graph import FactorCore, FactorGraph, is_long_loop_free
from .graph import Graph, UnionFind, connected_components

log = logging.getLogger(__name__)

ALGORITHMS = ("fbpd", "fcorehd")


@dataclass(frozen=True)
class DecimationParams:
    beta: float = 7.0
    sweeps_per_step: int = 10
    delete_fraction: float = 0.01
    seed: int = 0
    epsilon: float = 1e-12
    damping: float = 0.0

    def __post_init__(self):
        if not 0 < self.delete_fraction <= 0.1:
            raise ValueError("delete_fraction must lie in (0, 0.1]")
        if self.sweeps_per_step < 1:
            raise ValueError("sweeps_per_step must be at least 1")

    def bp_params(self) -> BPParams:
        return BPParams(beta=self.beta, epsilon=self.epsilon, seed=self.seed, damping=self.damping)


@dataclass
class DismantleReport:
    fvs_order: list[int]
    extra_tree_breaks: list[int]
    reinserted: list[int]
    final_removed: set[int]
    removed_count: int
    max_component: int
    cap: int
    trajectory: list[tuple] | None = None
    raw_fvs_size: int = 0
    extras: dict = field(default_factory=dict)

    def removal_order(self) -> list[int]:
        """Deletions in the order they happened, minus reinserted vertices."""
        back = set(self.reinserted)
        return [v for v in self.fvs_order + self.extra_tree_breaks if v not in back]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["final_removed"] = sorted(self.final_removed)
        return d


# ----------------------------------------------------------------------------
# FVS stage


def fbpd(fg: FactorGraph, params: DecimationParams = DecimationParams(), refine: bool = True,
         history: list | None = None) -> list[int]:
    """Belief-propagation guided decimation on the factor-graph 2-core.

    Each step runs ``sweeps_per_step`` warm-started sweeps on the current
    2-core and deletes the ``ceil(delete_fraction * |core|)`` vertices with the
    largest feedback probability. Stops once the 2-core is empty.
    ``history`` (if given) collects the 2-core vertex count before each step.
    """
    rng = np.random.default_rng(params.seed)
    bpp = params.bp_params()
    core = FactorCore(fg)
    msgs = MessageSet(fg, epsilon=params.epsilon)
    order: list[int] = []
    while not core.is_empty():
        for _ in range(params.sweeps_per_step):
            bp_sweep(core, msgs, bpp, rng)
        verts = core.vertices
        if history is not None:
            history.append(len(verts))
        q = marginals(core, msgs, bpp)[verts]
        k = max(1, math.ceil(params.delete_fraction * len(verts)))
        ranked = np.lexsort((rng.random(len(verts)), -q))[:k]
        chosen = verts[ranked]
        order.extend(chosen.tolist())
        core.delete(chosen)
    log.debug("fbpd: %d deletions before refinement", len(order))
    return refine_fvs(fg, order) if refine else order


def fcorehd(fg: FactorGraph, seed: int = 0, refine: bool = True) -> list[int]:
    """Repeatedly delete a highest-degree vertex of the bipartite 2-core.

    Degree counts surviving factors; ties are broken uniformly at random.
    """
    rng = np.random.default_rng(seed)
    core = FactorCore(fg)
    verts = core.vertices
    heap = list(zip((-core.vdeg[verts]).tolist(), rng.random(len(verts)).tolist(), verts.tolist()))
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        negd, _, v = heapq.heappop(heap)
        if not core.valive[v]:
            continue
        d = int(core.vdeg[v])
        if d != -negd:
            heapq.heappush(heap, (-d, rng.random(), v))
            continue
        order.append(v)
        core.delete([v])
    return refine_fvs(fg, order) if refine else order


@njit(cache=True)
def _uf_find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def _refine(nv, nf, link_vertex, link_factor, vptr, vlinks, fvs):
    parent = np.arange(nv + nf)
    infvs = np.zeros(nv, dtype=np.bool_)
    for v in fvs:
        infvs[v] = True
    for L in range(len(link_vertex)):
        i = link_vertex[L]
        if not infvs[i]:
            ri = _uf_find(parent, i)
            ra = _uf_find(parent, nv + link_factor[L])
            parent[ri] = ra
    keep = np.zeros(len(fvs), dtype=np.bool_)
    roots = np.empty(max(1, np.max(vptr[1:] - vptr[:-1])), dtype=np.int64)
    for idx in range(len(fvs) - 1, -1, -1):
        v = fvs[idx]
        d = 0
        for k in range(vptr[v], vptr[v + 1]):
            roots[d] = _uf_find(parent, nv + link_factor[vlinks[k]])
            d += 1
        r = np.sort(roots[:d])
        distinct = True
        for t in range(1, d):
            if r[t] == r[t - 1]:
                distinct = False
                break
        if distinct:
            infvs[v] = False
            for t in range(d):
                parent[_uf_find(parent, r[t])] = v
        else:
            keep[idx] = True
    return keep


def refine_fvs(fg: FactorGraph, fvs) -> list[int]:
    """Drop redundant feedback vertices, scanning in reverse deletion order.

    A vertex is re-admitted when its surviving factors all lie in different
    trees of the current forest. The result is minimal: no single remaining
    vertex can be put back without closing a loop.
    """
    fvs = np.asarray(list(fvs), dtype=np.int64)
    if len(np.unique(fvs)) != len(fvs):
        raise ValueError("feedback vertex set lists a vertex twice")
    if not is_long_loop_free(fg, fvs):
        raise ValueError("input is not a feedback vertex set of the factor-graph")
    if len(fvs) == 0:
        return []
    keep = _refine(fg.n_vertices, fg.n_factors, fg.link_vertex, fg.link_factor,
                   fg.vptr, fg.vlinks, fvs)
    return fvs[keep].tolist()


# ----------------------------------------------------------------------------
# tree breaking and reinsertion


@njit(cache=True)
def _largest_piece_on_removal(indptr, indices, present, root):
    """Iterative DFS with low-points over the component of ``root``.

    Returns the visited vertices and, for each, the size of the largest piece
    left when it is deleted.
    """
    n = len(present)
    disc = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    sub = np.ones(n, dtype=np.int64)
    sep_sum = np.zeros(n, dtype=np.int64)
    sep_max = np.zeros(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    ptr = np.zeros(n, dtype=np.int64)
    visited = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    t = 0
    disc[root] = 0
    low[root] = 0
    ptr[root] = indptr[root]
    visited[t] = root
    t += 1
    stack[top] = root
    top += 1
    while top > 0:
        v = stack[top - 1]
        if ptr[v] < indptr[v + 1]:
            u = indices[ptr[v]]
            ptr[v] += 1
            if not present[u]:
                continue
            if disc[u] < 0:
                disc[u] = t
                low[u] = t
                visited[t] = u
                t += 1
                parent[u] = v
                ptr[u] = indptr[u]
                stack[top] = u
                top += 1
            elif u != parent[v]:
                low[v] = min(low[v], disc[u])
        else:
            top -= 1
            p = parent[v]
            if p >= 0:
                low[p] = min(low[p], low[v])
                sub[p] += sub[v]
                if low[v] >= disc[p]:
                    sep_sum[p] += sub[v]
                    sep_max[p] = max(sep_max[p], sub[v])
    total = sub[root]
    out = np.empty(t, dtype=np.int64)
    for s in range(t):
        v = visited[s]
        out[s] = max(sep_max[v], total - 1 - sep_sum[v])
    return visited[:t].copy(), out


def break_trees(g: Graph, removed: np.ndarray, cap: int, rng: np.random.Generator) -> list[int]:
    """Delete vertices until no component exceeds ``cap``.

    Each deletion targets the largest component and picks the vertex whose
    removal leaves the smallest largest piece. ``removed`` is updated in place.
    """
    extra: list[int] = []
    present = ~removed
    while True:
        comps = connected_components(g.view(removed))
        if not comps or len(comps[0]) <= cap:
            return extra
        big = comps[0]
        verts, piece = _largest_piece_on_removal(g.indptr, g.indices, present, int(big[0]))
        best = np.flatnonzero(piece == piece.min())
        v = int(verts[best[rng.integers(len(best))]])
        removed[v] = True
        present[v] = False
        extra.append(v)


def reinsert(g: Graph, removed: np.ndarray, cap: int, rng: np.random.Generator) -> list[int]:
    """Greedily put back removed vertices while every component stays <= cap.

    The vertex whose return creates the smallest merged component goes first.
    Merged sizes only grow as reinsertion proceeds, so stale heap entries are
    re-scored lazily when popped. ``removed`` is updated in place.
    """
    n = g.n_vertices
    uf = UnionFind(n)
    present = ~removed
    for u, v in g.edges:
        if present[u] and present[v]:
            uf.union(int(u), int(v))

    def merged_size(v):
        roots = {uf.find(int(u)) for u in g.neighbors(v) if present[u]}
        return 1 + sum(int(uf.size[r]) for r in roots)

    cand = np.flatnonzero(removed)
    heap = [(merged_size(v), rng.random(), int(v)) for v in cand]
    heapq.heapify(heap)
    back: list[int] = []
    while heap:
        cost, _, v = heapq.heappop(heap)
        now = merged_size(v)
        if now != cost:
            heapq.heappush(heap, (now, rng.random(), v))
            continue
        if cost > cap:
            break
        present[v] = True
        removed[v] = False
        for u in g.neighbors(v):
            if present[u]:
                uf.union(v, int(u))
        back.append(v)
    return back


def dismantle(g: Graph, fg: FactorGraph, params: DecimationParams = DecimationParams(),
              algo: str = "fbpd", cap_fraction: float = 0.01, with_trajectory: bool = False) -> DismantleReport:
    """Break ``g`` into components of at most ``ceil(cap_fraction * N)`` vertices.

    Stages: long-loop FVS on ``fg`` (FBPD or FCoreHD), tree breaking, then
    greedy reinsertion.
    """
    N = g.n_vertices
    if fg.n_vertices != N:
        raise ValueError("factor-graph and graph disagree on the vertex count")
    if cap_fraction * N < 2:
        raise ValueError(f"cap {cap_fraction} * N = {cap_fraction * N:.3g} is below 2")
    cap = math.ceil(cap_fraction * N)
    if algo == "fbpd":
        fvs = fbpd(fg, params)
    elif algo == "fcorehd":
        fvs = fcorehd(fg, params.seed)
    else:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    rng = np.random.default_rng([params.seed, 1])
    removed = np.zeros(N, dtype=bool)
    removed[fvs] = True
    extra = break_trees(g, removed, cap, rng)
    back = reinsert(g, removed, cap, rng)
    comps = connected_components(g.view(removed))
    biggest = len(comps[0]) if comps else 0
    if biggest > cap:
        raise AssertionError(f"component of size {biggest} exceeds cap {cap}")
    final = set(np.flatnonzero(removed).tolist())
    report = DismantleReport(list(map(int, fvs)), extra, back, final, len(final), biggest, cap,
                             raw_fvs_size=len(fvs))
    if with_trajectory:
        report.trajectory = trajectory(g, report.removal_order())
    return report


# ----------------------------------------------------------------------------
# trajectories


def trajectory(g: Graph, deletion_order, fg: FactorGraph | None = None) -> list[tuple]:
    """Shrinkage of the 2-core and of the giant component along a deletion order.

    Row ``k`` holds ``(k, |2-core of g minus first k|, largest component)``;
    with ``fg`` a fourth entry gives the factor-graph 2-core vertex count.
    """
    order = [int(v) for v in deletion_order]
    N = g.n_vertices
    indptr, indices = g.indptr, g.indices

    # 2-core sizes, forward
    deg = g.degrees.copy()
    in_core = np.ones(N, dtype=bool)
    core_size = N

    def drop(v):
        nonlocal core_size
        stack = [v]
        in_core[v] = False
        core_size -= 1
        while stack:
            x = stack.pop()
            for u in indices[indptr[x]:indptr[x + 1]]:
                if in_core[u]:
                    deg[u] -= 1
                    if deg[u] <= 1:
                        in_core[u] = False
                        core_size -= 1
                        stack.append(u)

    for v in np.flatnonzero(deg <= 1):
        if in_core[v]:
            drop(int(v))
    cores = [core_size]
    for v in order:
        if in_core[v]:
            drop(v)
        cores.append(core_size)

    # largest component, backward with union-find
    uf = UnionFind(N)
    present = np.ones(N, dtype=bool)
    present[order] = False
    for u, v in g.edges:
        if present[u] and present[v]:
            uf.union(int(u), int(v))
    roots = [uf.find(v) for v in np.flatnonzero(present)]
    largest = int(uf.size[roots].max()) if roots else 0
    giants = [largest]
    for v in reversed(order):
        present[v] = True
        r = v
        for u in indices[indptr[v]:indptr[v + 1]]:
            if present[u]:
                r = uf.union(r, int(u))
        largest = max(largest, int(uf.size[uf.find(v)]))
        giants.append(largest)
    giants.reverse()

    rows = [(k, cores[k], giants[k]) for k in range(len(order) + 1)]
    if fg is not None:
        fc = FactorCore(fg)
        fcounts = [fc.n_vertices]
        for v in order:
            fc.delete([v])
            fcounts.append(fc.n_vertices)
        rows = [r + (fcounts[k],) for k, r in enumerate(rows)]
    return rows
