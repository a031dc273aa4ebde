"""Random regular clique networks and their replica-symmetric theory.

In the ensemble every vertex sits in exactly ``K`` cliques of size ``n`` and
the factor-graph is otherwise random, so all cavity messages coincide.  With
``S = 1 + (n - 1) * (1/m - 1)`` the scalar fixed point reads

    m = (exp(-beta) * S**(K-1) + 1) / (exp(-beta) * S**(K-1) + 1 + (K-1) * S)

which, eliminating ``m``, is ``S = 1 + (n-1)(K-1) S / (1 + exp(-beta) S**(K-1))``.
That form is solved for ``ln S`` by bracketing; plain iteration of the map
settles into a period-2 orbit at low temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .factor_graph import FactorGraph
from .graph import Graph


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    N: int
    K: int
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.K < 1 or self.N < 1:
            raise EnsembleError("need N >= 1, K >= 1, n >= 2")
        if (self.N * self.K) % self.n:
            raise EnsembleError(f"N*K = {self.N * self.K} is not divisible by n = {self.n}")
        if self.n > self.N:
            raise EnsembleError("clique size exceeds the number of vertices")


def _pairs(n):
    return [(s, t) for s in range(n) for t in range(s + 1, n)]


def generate(spec: EnsembleSpec, swap_budget: int | None = None) -> tuple[Graph, FactorGraph]:
    """Sample a random regular clique network.

    Vertex stubs are matched uniformly to factor slots, then slot swaps repair
    the two defects a random matching can have: a vertex twice in one factor,
    and two factors sharing two or more vertices (which would merge edges).
    """
    N, K, n = spec.N, spec.K, spec.n
    rng = np.random.default_rng(spec.seed)
    F = N * K // n
    slots = rng.permutation(np.repeat(np.arange(N, dtype=np.int64), K)).reshape(F, n)
    if F:
        _repair(slots, N, K, rng, swap_budget if swap_budget is not None else 100 * N * K)
    slots.sort(axis=1)
    iu, ju = np.triu_indices(n, 1)
    edges = np.stack([slots[:, iu].ravel(), slots[:, ju].ravel()], axis=1)
    g = Graph.from_edges(N, edges)
    expected = N * K * (n - 1) // 2
    if g.n_edges != expected:
        raise EnsembleError(f"generated {g.n_edges} edges, expected {expected}")
    return g, FactorGraph(N, slots, source=g)


def _repair(slots: np.ndarray, N: int, K: int, rng: np.random.Generator, budget: int) -> None:
    F, n = slots.shape
    pairs = _pairs(n)
    # vertex -> factors containing it (with multiplicity)
    where: list[list[int]] = [[] for _ in range(N)]
    for f, row in enumerate(slots.tolist()):
        for v in row:
            where[v].append(f)

    def shared(u, v, f):
        # number of factors other than f holding both u and v
        return sum(1 for g in set(where[u]) if g != f and g in where[v])

    def badness(f):
        row = slots[f].tolist()
        score = 0
        for s, t in pairs:
            u, v = row[s], row[t]
            if u == v:
                score += 1
            else:
                score += shared(u, v, f)
        return score

    bad = {f for f in _suspect_factors(slots, N) if badness(f)}
    attempts = 0
    while bad:
        if attempts >= budget:
            raise EnsembleError(f"could not repair the matching within {budget} swaps; try a larger N")
        attempts += 1
        f = next(iter(bad)) if len(bad) == 1 else list(bad)[rng.integers(len(bad))]
        g = int(rng.integers(F))
        if g == f:
            continue
        s, t = int(rng.integers(n)), int(rng.integers(n))
        before = badness(f) + badness(g)
        u, v = int(slots[f, s]), int(slots[g, t])
        if u == v:
            continue
        _move(where, slots, f, s, g, t, u, v)
        after = badness(f) + badness(g)
        if after >= before:
            _move(where, slots, f, s, g, t, v, u)
            continue
        for h in (f, g):
            if badness(h):
                bad.add(h)
            else:
                bad.discard(h)
        # factors that shared a pair with f or g may have been fixed too
        for h in list(bad):
            if not badness(h):
                bad.discard(h)


def _move(where, slots, f, s, g, t, u, v):
    # swap u (at f[s]) with v (at g[t])
    slots[f, s], slots[g, t] = v, u
    where[u].remove(f)
    where[u].append(g)
    where[v].remove(g)
    where[v].append(f)


def _suspect_factors(slots: np.ndarray, N: int) -> np.ndarray:
    """Factors with a repeated member or a vertex pair shared with another factor."""
    F, n = slots.shape
    iu, ju = np.triu_indices(n, 1)
    a, b = slots[:, iu], slots[:, ju]
    dup = (a == b).any(axis=1)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys = (lo * N + hi).ravel()
    owner = np.repeat(np.arange(F), len(iu))
    _, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
    multi = counts[inv] > 1
    suspect = np.zeros(F, dtype=bool)
    suspect[owner[multi]] = True
    return np.flatnonzero(suspect | dup)


# ----------------------------------------------------------------------------
# replica-symmetric theory


@dataclass(frozen=True)
class RSResult:
    K: int
    n: int
    beta: float
    m: float
    S: float
    rho: float
    entropy_density: float
    log_z_per_vertex: float
    residual: float
    rho_min: float | None = None
    beta_star: float | None = None
    branch: str | None = None


def _log_s_fixed_point(K: int, n: int, beta: float) -> float:
    if K == 1:
        return 0.0
    c = math.log((n - 1) * (K - 1))

    def h(t):
        return np.logaddexp(0.0, c + t - np.logaddexp(0.0, -beta + (K - 1) * t)) - t

    hi = 1.0
    while h(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise EnsembleError(f"no RS fixed point bracketed at beta={beta}")
    return brentq(h, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def rs_fixed_point(K: int, n: int, beta: float) -> RSResult:
    """Symmetric BP fixed point and Bethe densities at one temperature."""
    if K < 1 or n < 2 or beta < 0:
        raise EnsembleError("need K >= 1, n >= 2, beta >= 0")
    t = _log_s_fixed_point(K, n, beta)
    S = math.exp(t)
    y = (S - 1.0) / (n - 1)
    m = 1.0 / (1.0 + y)
    # residual of the message map itself
    x = math.exp(min(-beta + (K - 1) * t, 700.0))
    m_next = 1.0 - (K - 1) * S / (x + 1.0 + (K - 1) * S)
    residual = abs(m_next - m)
    if residual > 1e-12:
        raise EnsembleError(f"RS fixed point not reached (residual {residual:.3e})")
    log_x = -beta + K * t
    log_k = math.log(K) + t
    log_zi = np.logaddexp(log_x, log_k)
    rho = math.exp(log_x - log_zi)
    log_za = n * math.log(m) + math.log1p(n * y)
    log_zia = math.log1p(m * (S - 1.0))
    log_z = K / n * log_za + log_zi - K * log_zia
    s = log_z + beta * rho
    return RSResult(K, n, beta, m, S, rho, float(s), float(log_z), residual)


def rs_minfvs_scan(K: int, n: int, beta_max: float = 20.0, beta_step: float = 0.1,
                   beta_tol: float = 1e-4) -> RSResult:
    """Estimate the minimum feedback fraction from the RS entropy.

    Scans beta upward; at the first sign change of the entropy density from
    non-negative to negative the crossing is bisected to ``beta_tol`` and the
    density read there (branch ``"entropy-zero"``). If the entropy never turns
    negative up to ``beta_max``, the density at ``beta_max`` is used (branch
    ``"beta-max"``).
    """
    grid = np.arange(0.0, beta_max + beta_step / 2, beta_step)
    prev = rs_fixed_point(K, n, 0.0)
    for b in grid[1:]:
        cur = rs_fixed_point(K, n, float(b))
        if prev.entropy_density >= 0 > cur.entropy_density:
            lo, hi = prev.beta, cur.beta
            while hi - lo > beta_tol:
                mid = 0.5 * (lo + hi)
                if rs_fixed_point(K, n, mid).entropy_density >= 0:
                    lo = mid
                else:
                    hi = mid
            r = rs_fixed_point(K, n, lo)
            return _with_min(r, "entropy-zero")
        prev = cur
    return _with_min(prev, "beta-max")


def _with_min(r: RSResult, branch: str) -> RSResult:
    return RSResult(r.K, r.n, r.beta, r.m, r.S, r.rho, r.entropy_density, r.log_z_per_vertex,
                    r.residual, rho_min=r.rho, beta_star=r.beta, branch=branch)
