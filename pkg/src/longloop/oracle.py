"""Brute-force oracles for small instances.

These enumerate configurations and vertex subsets directly and share no code
with the message-passing kernels they are used to check.
"""

from __future__ import annotations

import math

import numpy as np

from .factor_graph import FactorGraph

MAX_CONFIGS = 10**8


class TooLargeError(ValueError):
    pass


def exact_enumeration(fg: FactorGraph, beta: float, chunk: int = 1 << 20):
    """Exact ``ln Z(beta)`` and ``P(c_i = inactive)`` by full enumeration.

    Vertex ``i`` has ``1 + |factors(i)|`` states: index 0 is inactive and
    index ``s >= 1`` means active under the ``s``-th factor of ``i``.
    """
    n = fg.n_vertices
    radix = [1 + len(fg.vertex_factors(i)) for i in range(n)]
    total = math.prod(radix)
    if total > MAX_CONFIGS:
        raise TooLargeError(f"{total} configurations exceed the limit of {MAX_CONFIGS}")
    vf = [fg.vertex_factors(i).tolist() for i in range(n)]
    # outsider[(i, a)][s]: state s of member i breaks ranks with factor a
    outsider = {}
    for a in range(fg.n_factors):
        for i in fg.members(a).tolist():
            outsider[(i, a)] = np.array([s > 0 and vf[i][s - 1] != a for s in range(radix[i])])
    strides = np.ones(n, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        strides[i] = strides[i + 1] * radix[i + 1]
    w0 = math.exp(-beta)
    z = 0.0
    zi0 = np.zeros(n)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        states = [(idx // strides[i]) % radix[i] for i in range(n)]
        ok = np.ones(len(idx), dtype=bool)
        for a in range(fg.n_factors):
            cnt = np.zeros(len(idx), dtype=np.int64)
            for i in fg.members(a).tolist():
                cnt += outsider[(i, a)][states[i]]
            ok &= cnt <= 1
        zeros = np.zeros(len(idx), dtype=np.int64)
        for i in range(n):
            zeros += states[i] == 0
        w = np.where(ok, w0 ** zeros, 0.0)
        z += w.sum()
        for i in range(n):
            zi0[i] += w[states[i] == 0].sum()
    return math.log(z), zi0 / z


def forest_after_removal(fg: FactorGraph, removed) -> bool:
    """Union-find test that the bipartite graph minus ``removed`` has no cycle."""
    gone = set(removed)
    parent = list(range(fg.n_vertices + fg.n_factors))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, a in zip(fg.link_vertex.tolist(), fg.link_factor.tolist()):
        if i in gone:
            continue
        ri, ra = find(i), find(fg.n_vertices + a)
        if ri == ra:
            return False
        parent[ri] = ra
    return True


def _strip(adj: dict[int, set[int]], gone: frozenset) -> dict[int, set[int]]:
    # bipartite 2-core of what is left after deleting ``gone``
    live = {x: {y for y in nb if y not in gone} for x, nb in adj.items() if x not in gone}
    leaves = [x for x, nb in live.items() if len(nb) <= 1]
    while leaves:
        x = leaves.pop()
        if x not in live:
            continue
        for y in live.pop(x):
            nb = live[y]
            nb.discard(x)
            if len(nb) <= 1:
                leaves.append(y)
    return live


def _short_cycle(live: dict[int, set[int]], n: int, roots: int = 8) -> set[int]:
    """Vertex nodes of a short closed walk, via BFS from a few busy vertices.

    Any loop is valid for branching; short ones just keep the tree narrow.
    """
    best = None
    cands = sorted((x for x in live if x < n), key=lambda x: -len(live[x]))[:roots]
    for root in cands:
        parent = {root: -1}
        queue = [root]
        hit = None
        for x in queue:
            for y in live[x]:
                if y not in parent:
                    parent[y] = x
                    queue.append(y)
                elif y != parent[x]:
                    hit = (x, y)
                    break
            if hit:
                break
        if hit is None:
            continue
        walk = set()
        for z in hit:
            while z != -1:
                walk.add(z)
                z = parent[z]
        verts = {z for z in walk if z < n}
        if best is None or len(verts) < len(best):
            best = verts
            if len(best) <= 2:
                break
    return best


def exact_min_fvs(fg: FactorGraph, budget: int = 200_000) -> int:
    """Size of a minimum long-loop feedback vertex set.

    Iterative deepening: some vertex of any loop must be deleted, so branch on
    the vertices of a shortest loop. Raises ``TooLargeError`` once more than
    ``budget`` search nodes have been visited.
    """
    n = fg.n_vertices
    adj: dict[int, set[int]] = {i: set() for i in range(n)}
    for a in range(fg.n_factors):
        mem = fg.members(a).tolist()
        adj[n + a] = set(mem)
        for i in mem:
            adj[i].add(n + a)
    adj = _strip(adj, frozenset())
    visited = 0
    failed: set[tuple[frozenset, int]] = set()

    def packing_bound(live: dict[int, set[int]]) -> int:
        # vertex-disjoint loops each need their own deletion
        bound = 0
        while live:
            bound += 1
            live = _strip(live, frozenset(_short_cycle(live, n)))
        return bound

    def search(gone: frozenset, k: int) -> bool:
        nonlocal visited
        if (gone, k) in failed:
            return False
        visited += 1
        if visited > budget:
            raise TooLargeError(f"search budget of {budget} nodes exhausted")
        live = _strip(adj, gone)
        if not live:
            return True
        if k > 0 and packing_bound(live) <= k:
            if any(search(gone | {v}, k - 1) for v in sorted(_short_cycle(live, n))):
                return True
        failed.add((gone, k))
        return False

    k = 0
    while not search(frozenset(), k):
        k += 1
    return k
