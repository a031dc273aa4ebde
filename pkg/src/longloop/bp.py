"""Belief propagation for the long-loop feedback vertex set model.

Every vertex ``i`` is either inactive (a feedback vertex) or active under one
of its factors.  A factor tolerates at most one member that is active under a
different factor.  Inactive vertices carry weight ``exp(-beta)``.

BP is run in the coarse-grained form: each directed link ``i -> a`` carries a
single number ``m[i->a]``, the cavity probability that ``i`` is inactive or
active under ``a``.  With ``y = 1/m - 1``, factor ``b`` sends vertex ``i`` the
weight ``S[b->i] = 1 + sum(y[j->b] for j in b, j != i)``, and

    m[i->a] = (x + 1) / (x + 1 + sum(S[b->i]))
    x       = exp(-beta) * prod(S[b->i])          (b over the factors of i but a)

All kernels act on a :class:`~longloop.factor_graph.FactorCore` view, so only
live vertices, factors and links take part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .factor_graph import FactorCore, FactorGraph, full_view

INACTIVE = -1


def chi(factor: int, members, cfg) -> int:
    """Constraint of ``factor``: 1 iff at most one member is an outsider.

    ``cfg[j]`` is ``INACTIVE`` or the factor ``j`` is active under; a member
    is an outsider when it is active under some other factor.
    """
    outsiders = sum(1 for j in members if cfg[j] != INACTIVE and cfg[j] != factor)
    return 1 if outsiders <= 1 else 0


@dataclass(frozen=True)
class BPParams:
    beta: float = 7.0
    max_sweeps: int = 1000
    tol: float = 1e-10
    epsilon: float = 1e-12
    seed: int = 0
    damping: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0 < self.epsilon <= 1e-6:
            raise ValueError("epsilon must lie in (0, 1e-6]")
        if not 0 <= self.damping < 1:
            raise ValueError("damping must lie in [0, 1)")


class MessageSet:
    """One coarse-grained message per link of a factor-graph.

    Messages on links outside the current view are kept but ignored, which
    is what lets decimation warm-start from the previous step.
    """

    def __init__(self, fg: FactorGraph, init: float = 0.5, epsilon: float = 1e-12):
        self.fg = fg
        self.epsilon = epsilon
        self.m = np.full(fg.n_links, float(init))

    @classmethod
    def random(cls, fg: FactorGraph, seed: int = 0, low: float = 0.3, high: float = 0.7,
               epsilon: float = 1e-12) -> "MessageSet":
        ms = cls(fg, epsilon=epsilon)
        ms.m = np.random.default_rng(seed).uniform(low, high, fg.n_links)
        return ms

    def copy(self) -> "MessageSet":
        new = MessageSet(self.fg, epsilon=self.epsilon)
        new.m = self.m.copy()
        return new

    def __getitem__(self, link):
        return self.m[link]


@dataclass(frozen=True)
class BetheEstimate:
    log_z_per_vertex: float
    energy_density: float
    free_energy_density: float
    entropy_density: float


# ----------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _cavity_weight(b, v, fptr, fmem, valive, m):
    # S[b->v] summed directly over the other live members of b
    s = 1.0
    for k in range(fptr[b], fptr[b + 1]):
        j = fmem[k]
        if j != v and valive[j]:
            s += 1.0 / m[k] - 1.0
    return s


@njit(cache=True)
def _sweep(order, vptr, vlinks, link_factor, fptr, fmem, valive, falive,
           m, beta, eps, damping):
    maxdeg = 0
    for v in order:
        maxdeg = max(maxdeg, vptr[v + 1] - vptr[v])
    S = np.empty(maxdeg)
    L = np.empty(maxdeg, dtype=np.int64)
    pre_log = np.empty(maxdeg + 1)
    pre_sum = np.empty(maxdeg + 1)
    suf_log = np.empty(maxdeg + 1)
    suf_sum = np.empty(maxdeg + 1)
    resid = 0.0
    for v in order:
        d = 0
        for k in range(vptr[v], vptr[v + 1]):
            link = vlinks[k]
            b = link_factor[link]
            if falive[b]:
                S[d] = _cavity_weight(b, v, fptr, fmem, valive, m)
                L[d] = link
                d += 1
        pre_log[0] = 0.0
        pre_sum[0] = 0.0
        for t in range(d):
            pre_log[t + 1] = pre_log[t] + math.log(S[t])
            pre_sum[t + 1] = pre_sum[t] + S[t]
        suf_log[d] = 0.0
        suf_sum[d] = 0.0
        for t in range(d - 1, -1, -1):
            suf_log[t] = suf_log[t + 1] + math.log(S[t])
            suf_sum[t] = suf_sum[t + 1] + S[t]
        for t in range(d):
            cav_log = pre_log[t] + suf_log[t + 1]
            cav_sum = pre_sum[t] + suf_sum[t + 1]
            ex = -beta + cav_log
            if ex > 700.0:
                new = 1.0 - cav_sum * math.exp(-ex) / (1.0 + (1.0 + cav_sum) * math.exp(-ex))
            else:
                x = math.exp(ex)
                new = 1.0 - cav_sum / (x + 1.0 + cav_sum)
            link = L[t]
            old = m[link]
            if damping > 0.0:
                new = damping * old + (1.0 - damping) * new
            if new < eps:
                new = eps
            elif new > 1.0:
                new = 1.0
            diff = abs(new - old)
            if diff > resid:
                resid = diff
            m[link] = new
    return resid


@njit(cache=True)
def _marginals(vptr, vlinks, link_factor, fptr, fmem, valive, falive, m, beta, out):
    for v in range(len(valive)):
        if not valive[v]:
            out[v] = 0.0
            continue
        logp = 0.0
        tot = 0.0
        for k in range(vptr[v], vptr[v + 1]):
            b = link_factor[vlinks[k]]
            if falive[b]:
                s = _cavity_weight(b, v, fptr, fmem, valive, m)
                logp += math.log(s)
                tot += s
        if tot == 0.0:
            out[v] = 1.0
        else:
            # x / (x + tot) with x = exp(-beta + logp)
            z = math.log(tot) - (-beta + logp)
            if z > 0:
                e = math.exp(-z)
                out[v] = e / (1.0 + e)
            else:
                out[v] = 1.0 / (1.0 + math.exp(z))


@njit(cache=True)
def _logaddexp(a, b):
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def _bethe_log_z(vptr, vlinks, link_factor, fptr, fmem, valive, falive, m, beta):
    total = 0.0
    # factor terms: ln[prod(m) * (1 + sum(y))]
    for a in range(len(falive)):
        if not falive[a]:
            continue
        slog = 0.0
        sy = 0.0
        for k in range(fptr[a], fptr[a + 1]):
            if valive[fmem[k]]:
                slog += math.log(m[k])
                sy += 1.0 / m[k] - 1.0
        total += slog + math.log1p(sy)
    # vertex terms and link terms
    for v in range(len(valive)):
        if not valive[v]:
            continue
        logp = 0.0
        tot = 0.0
        for k in range(vptr[v], vptr[v + 1]):
            link = vlinks[k]
            b = link_factor[link]
            if falive[b]:
                s = _cavity_weight(b, v, fptr, fmem, valive, m)
                logp += math.log(s)
                tot += s
                total -= math.log1p(m[link] * (s - 1.0))
        if tot == 0.0:
            total += -beta
        else:
            total += _logaddexp(-beta + logp, math.log(tot))
    return total


# ----------------------------------------------------------------------------
# public surface


def _view(core) -> FactorCore:
    return full_view(core) if isinstance(core, FactorGraph) else core


def _args(core: FactorCore):
    fg = core.fg
    return fg.vptr, fg.vlinks, fg.link_factor, fg.fptr, fg.fmem, core.valive, core.falive


def bp_sweep(core, msgs: MessageSet, params: BPParams, rng: np.random.Generator | None = None) -> float:
    """One in-place pass over every live message; returns the max change.

    Vertices are visited in a random order drawn from ``rng`` (or from
    ``params.seed`` when no generator is passed); all outgoing messages of a
    vertex are refreshed together, which is equivalent to any interleaving
    since none of them feeds another.
    """
    core = _view(core)
    if rng is None:
        rng = np.random.default_rng(params.seed)
    order = rng.permutation(core.vertices)
    fg = core.fg
    return _sweep(order, fg.vptr, fg.vlinks, fg.link_factor, fg.fptr, fg.fmem,
                  core.valive, core.falive, msgs.m, float(params.beta),
                  float(params.epsilon), float(params.damping))


def run_bp(core, msgs: MessageSet, params: BPParams, rng: np.random.Generator | None = None,
           sweeps: int | None = None) -> tuple[float, int]:
    """Sweep until the residual drops below ``params.tol``.

    Returns ``(residual, sweeps_done)``. With ``sweeps`` set, exactly that many
    sweeps are run unless convergence comes first.
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)
    limit = params.max_sweeps if sweeps is None else sweeps
    resid = math.inf
    done = 0
    while done < limit:
        resid = bp_sweep(core, msgs, params, rng)
        done += 1
        if resid < params.tol:
            break
    return resid, done


def marginals(core, msgs: MessageSet, params: BPParams) -> np.ndarray:
    """Probability of being a feedback vertex, per vertex (0 outside the view)."""
    core = _view(core)
    out = np.zeros(core.fg.n_vertices)
    _marginals(*_args(core), msgs.m, float(params.beta), out)
    return out


def rho(core, msgs: MessageSet, params: BPParams) -> float:
    """Mean feedback fraction over all vertices of the factor-graph."""
    core = _view(core)
    n = core.fg.n_vertices
    if n == 0:
        return 0.0
    return float(marginals(core, msgs, params).sum() / n)


def bethe_estimate(core, msgs: MessageSet, params: BPParams) -> BetheEstimate:
    """Bethe free entropy, energy, free energy and entropy densities.

    Factor, vertex and link terms are

        ln Z_a  = sum(ln m) + ln(1 + sum(y))
        ln Z_i  = ln(exp(-beta) * prod(S) + sum(S))
        ln Z_ia = ln(m * S + 1 - m)

    and ``ln Z = sum ln Z_a + sum ln Z_i - sum ln Z_ia``, exact on trees.
    At ``beta = 0`` the free energy is reported as ``-ln Z / N``.
    """
    core = _view(core)
    n = core.fg.n_vertices
    beta = float(params.beta)
    log_z = _bethe_log_z(*_args(core), msgs.m, beta) / n
    e = rho(core, msgs, params)
    if beta == 0.0:
        f = -log_z
        s = log_z
    else:
        f = -log_z / beta
        s = beta * (e - f)
    return BetheEstimate(log_z, e, f, s)
