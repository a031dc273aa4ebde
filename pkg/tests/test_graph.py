import io

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longloop.graph import (
    EdgeListError,
    Graph,
    UnionFind,
    VertexSubsetView,
    connected_components,
    load_edge_list,
    two_core,
    write_edge_list,
)

from conftest import cycle, graph_from_edges, path


def test_load_path():
    g = load_edge_list(io.StringIO("0 1\n1 2\n"))
    assert (g.n_vertices, g.n_edges) == (3, 2)


def test_load_dedup_and_self_loops():
    g = load_edge_list(io.StringIO("a b\nb a\na a\n"))
    assert (g.n_vertices, g.n_edges) == (2, 1)
    assert g.n_self_loops == 1
    assert g.n_duplicates == 1


def test_load_labels_first_appearance():
    g = load_edge_list(io.StringIO("# header\n\nz y\ny x\n"))
    assert g.labels == ["z", "y", "x"]
    assert g.index_of("x") == 2


def test_load_malformed_reports_line():
    with pytest.raises(EdgeListError, match="line 2"):
        load_edge_list(io.StringIO("a b\na b c\n"))


def test_load_empty():
    g = load_edge_list(io.StringIO(""))
    assert (g.n_vertices, g.n_edges) == (0, 0)


def test_round_trip():
    g = load_edge_list(io.StringIO("a b\nb c\nc d\nd a\n"))
    buf = io.StringIO()
    write_edge_list(g, buf)
    h = load_edge_list(io.StringIO(buf.getvalue()))
    def named(x):
        return {frozenset((x.labels[u], x.labels[v])) for u, v in x.edges.tolist()}

    assert sorted(h.labels) == sorted(g.labels)
    assert named(h) == named(g)


def test_adjacency_consistent():
    g = graph_from_edges([(0, 1), (1, 2), (2, 0), (2, 3)])
    assert g.degrees.sum() == 2 * g.n_edges
    for u, v in g.edges:
        assert v in g.neighbors(u) and u in g.neighbors(v)


def test_two_core_examples():
    assert two_core(path(4)).n_present == 0
    c5 = cycle(5)
    assert two_core(c5).n_present == 5
    pend = graph_from_edges([(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 5)])
    assert sorted(two_core(pend).vertices.tolist()) == [0, 1, 2, 3, 4]


def test_two_core_on_view():
    view = VertexSubsetView(cycle(5), [0])
    assert two_core(view).n_present == 0


def test_components_examples():
    tri2 = graph_from_edges([(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
    assert [len(c) for c in connected_components(tri2)] == [3, 3]
    assert connected_components(Graph.from_edges(0, [])) == []
    # path 1..6 with vertex 3 removed (ids shifted down by one)
    comps = connected_components(VertexSubsetView(path(6), [2]))
    assert [sorted(c.tolist()) for c in comps] == [[3, 4, 5], [0, 1]]


def _has_cycle_uf(g: Graph, removed=None) -> bool:
    gone = np.zeros(g.n_vertices, bool) if removed is None else removed
    uf = UnionFind(g.n_vertices)
    for u, v in g.edges:
        if gone[u] or gone[v]:
            continue
        if uf.find(int(u)) == uf.find(int(v)):
            return True
        uf.union(int(u), int(v))
    return False


edge_lists = st.lists(st.tuples(st.integers(0, 14), st.integers(0, 14)), max_size=30)


@given(edge_lists)
@settings(max_examples=200, deadline=None)
def test_two_core_properties(edges):
    g = Graph.from_edges(15, edges)
    core = two_core(g)
    again = two_core(core)
    assert np.array_equal(core.removed, again.removed)
    assert (core.n_present == 0) == (not _has_cycle_uf(g))
    deg = core.degrees()
    assert (deg[core.present] >= 2).all()


@given(edge_lists, st.sets(st.integers(0, 14), max_size=5))
@settings(max_examples=200, deadline=None)
def test_components_partition(edges, removed):
    g = Graph.from_edges(15, edges)
    view = VertexSubsetView(g, sorted(removed))
    comps = connected_components(view)
    assert sum(len(c) for c in comps) == view.n_present
    assert [len(c) for c in comps] == sorted((len(c) for c in comps), reverse=True)
    G = nx.Graph()
    G.add_nodes_from(view.vertices.tolist())
    G.add_edges_from((u, v) for u, v in g.edges.tolist() if u not in removed and v not in removed)
    assert sorted(map(len, nx.connected_components(G))) == sorted(map(len, comps))
