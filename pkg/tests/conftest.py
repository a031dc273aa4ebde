import itertools
import os
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from longloop.factor_graph import FactorGraph
from longloop.graph import Graph

ROOT = Path(__file__).resolve().parents[1]
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def graph_from_nx(G) -> Graph:
    G = nx.convert_node_labels_to_integers(G)
    return Graph.from_edges(G.number_of_nodes(), list(G.edges()))


def graph_from_edges(edges, n=None) -> Graph:
    edges = list(edges)
    if n is None:
        n = 1 + max(itertools.chain.from_iterable(edges)) if edges else 0
    return Graph.from_edges(n, edges)


def cycle(n) -> Graph:
    return graph_from_edges([(i, (i + 1) % n) for i in range(n)])


def path(n) -> Graph:
    return graph_from_edges([(i, i + 1) for i in range(n - 1)], n)


def complete(n) -> Graph:
    return graph_from_edges(itertools.combinations(range(n), 2), n)


def random_tree_fg(rng, max_vertices=15, max_configs=2_000_000) -> FactorGraph:
    """Random loop-free factor-graph with factor sizes 2-4."""
    while True:
        nv = 1
        factors = []
        while True:
            size = int(rng.integers(2, 5))
            if nv + size - 1 > max_vertices:
                break
            anchor = int(rng.integers(nv))
            factors.append([anchor] + list(range(nv, nv + size - 1)))
            nv += size - 1
            if rng.random() < 0.08:
                break
        fg = FactorGraph(nv, factors)
        if np.prod(1 + fg.vertex_degrees.astype(float)) <= max_configs:
            return fg


def random_graph(rng, max_n=200) -> Graph:
    """Mixed bag of small graphs: sparse random, clustered and dense."""
    n = int(rng.integers(4, max_n + 1))
    kind = int(rng.integers(3))
    seed = int(rng.integers(2**31))
    if kind == 0:
        G = nx.gnp_random_graph(n, min(1.0, float(rng.uniform(1.0, 4.0)) / n), seed=seed)
    elif kind == 1:
        m = int(rng.integers(1, min(4, n - 1) + 1))
        G = nx.powerlaw_cluster_graph(n, m, float(rng.uniform(0.1, 0.9)), seed=seed)
    else:
        G = nx.gnp_random_graph(n, float(rng.uniform(0.05, 0.3)) if n > 30 else 0.4, seed=seed)
    return graph_from_nx(G)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")


def data_dir() -> Path:
    return Path(os.environ.get("LONGLOOP_DATA", ROOT / "data"))
