import itertools
import math

import numpy as np
import pytest

from longloop.bp import (
    INACTIVE,
    BPParams,
    MessageSet,
    bethe_estimate,
    bp_sweep,
    chi,
    marginals,
    rho,
    run_bp,
)
from longloop.ensemble import EnsembleSpec, generate
from longloop.factor_graph import FactorGraph, cover_for, fg_two_core, trivial_cover
from longloop.oracle import exact_enumeration, exact_min_fvs

from conftest import complete, cycle, path, random_tree_fg


def brute_z(fg: FactorGraph, beta: float) -> float:
    states = [[INACTIVE] + fg.vertex_factors(i).tolist() for i in range(fg.n_vertices)]
    z = 0.0
    for cfg in itertools.product(*states):
        if all(chi(a, fg.members(a).tolist(), cfg) for a in range(fg.n_factors)):
            z += math.exp(-beta * sum(c == INACTIVE for c in cfg))
    return z


def test_chi_examples():
    assert chi(0, [0, 1, 2], [INACTIVE, INACTIVE, INACTIVE]) == 1
    assert chi(0, [0, 1, 2], [0, 0, 0]) == 1
    assert chi(0, [0, 1, 2], [1, 0, 0]) == 1
    assert chi(0, [0, 1, 2], [1, 2, 0]) == 0
    assert chi(0, [0, 1, 2], [1, 2, INACTIVE]) == 0


def test_hand_partition_functions():
    beta = 1.3
    one_edge = FactorGraph(2, [(0, 1)])
    assert brute_z(one_edge, beta) == pytest.approx((1 + math.exp(-beta)) ** 2)
    assert brute_z(trivial_cover(cycle(3)), 0.0) == 18
    assert brute_z(FactorGraph(3, [(0, 1, 2)]), 0.0) == 8


@pytest.mark.parametrize("fg", [
    FactorGraph(2, [(0, 1)]),
    trivial_cover(cycle(3)),
    trivial_cover(cycle(4)),
    FactorGraph(3, [(0, 1, 2)]),
    FactorGraph(6, [(0, 1, 2), (2, 3, 4), (4, 5, 0)]),
    cover_for(complete(4), 3, 1),
])
@pytest.mark.parametrize("beta", [0.0, 0.7, 3.0])
def test_enumeration_matches_brute_force(fg, beta):
    log_z, _ = exact_enumeration(fg, beta)
    assert log_z == pytest.approx(math.log(brute_z(fg, beta)), abs=1e-12)


def test_sweep_leaf_message():
    fg = trivial_cover(path(3))
    msgs = MessageSet(fg)
    bp_sweep(fg, msgs, BPParams(beta=2.0))
    for link in range(fg.n_links):
        if fg.vertex_degrees[fg.link_vertex[link]] == 1:
            assert msgs.m[link] == 1.0


def test_sweep_two_factor_vertex():
    beta = 2.0
    fg = trivial_cover(path(3))
    msgs = MessageSet(fg)
    run_bp(fg, msgs, BPParams(beta=beta))
    x = math.exp(-beta)
    for link in range(fg.n_links):
        if fg.link_vertex[link] == 1:
            assert msgs.m[link] == pytest.approx((x + 1) / (x + 2), abs=1e-14)


@pytest.mark.parametrize("beta", [0.0, 1.0, 7.0])
def test_tree_exactness(beta):
    rng = np.random.default_rng(int(beta * 10) + 3)
    for _ in range(15):
        fg = random_tree_fg(rng, max_configs=200_000)
        msgs = MessageSet.random(fg, seed=int(rng.integers(1000)))
        params = BPParams(beta=beta, tol=1e-13)
        _, done = run_bp(fg, msgs, params)
        assert done < params.max_sweeps
        log_z, p0 = exact_enumeration(fg, beta)
        est = bethe_estimate(fg, msgs, params)
        assert est.log_z_per_vertex == pytest.approx(log_z / fg.n_vertices, abs=1e-9)
        assert np.allclose(marginals(fg, msgs, params), p0, atol=1e-9)


def test_rho_decreases_with_beta_on_tree():
    fg = random_tree_fg(np.random.default_rng(8))
    values = []
    for beta in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]:
        msgs = MessageSet(fg)
        run_bp(fg, msgs, BPParams(beta=beta))
        values.append(rho(fg, msgs, BPParams(beta=beta)))
    assert all(a > b for a, b in zip(values, values[1:]))


def test_messages_stay_in_range():
    g, fg = generate(EnsembleSpec(2001, 4, 3, seed=5))
    msgs = MessageSet.random(fg, seed=1, low=0.0, high=1.0)
    params = BPParams(beta=7.0)
    rng = np.random.default_rng(0)
    for _ in range(30):
        bp_sweep(fg, msgs, params, rng)
        assert (msgs.m >= params.epsilon).all() and (msgs.m <= 1.0).all()


def test_determinism():
    _, fg = generate(EnsembleSpec(600, 5, 3, seed=2))
    out = []
    for _ in range(2):
        msgs = MessageSet.random(fg, seed=9)
        run_bp(fg, msgs, BPParams(beta=7.0, seed=4), sweeps=20)
        out.append(msgs.m)
    assert np.array_equal(out[0], out[1])


def test_random_init_insensitivity():
    _, fg = generate(EnsembleSpec(3000, 6, 3, seed=3))
    params = BPParams(beta=2.0, tol=1e-12)
    values = []
    for seed in range(3):
        msgs = MessageSet.random(fg, seed=seed)
        _, done = run_bp(fg, msgs, params)
        assert done < params.max_sweeps
        values.append(rho(fg, msgs, params))
    assert max(values) - min(values) < 1e-8


def test_core_view_ignores_outside_links():
    fg = FactorGraph(6, [(0, 1, 2), (2, 3, 4), (4, 5, 0)])
    core = fg_two_core(fg)
    msgs = MessageSet(fg)
    run_bp(core, msgs, BPParams(beta=1.0))
    outside = [l for l in range(fg.n_links) if fg.link_vertex[l] in (1, 3, 5)]
    assert np.all(msgs.m[outside] == 0.5)
    assert marginals(core, msgs, BPParams(beta=1.0))[[1, 3, 5]].tolist() == [0, 0, 0]


def test_params_validation():
    with pytest.raises(ValueError):
        BPParams(beta=-1)
    with pytest.raises(ValueError):
        BPParams(damping=1.0)
    with pytest.raises(ValueError):
        BPParams(epsilon=0.1)


@pytest.mark.parametrize("fg,expected", [
    (trivial_cover(complete(3)), 1),
    (trivial_cover(complete(4)), 2),
    (trivial_cover(complete(5)), 3),
    (trivial_cover(cycle(5)), 1),
    (trivial_cover(path(5)), 0),
    (FactorGraph(3, [(0, 1, 2)]), 0),
    (FactorGraph(6, [(0, 1, 2), (2, 3, 4), (4, 5, 0)]), 1),
])
def test_exact_min_fvs_examples(fg, expected):
    assert exact_min_fvs(fg) == expected
