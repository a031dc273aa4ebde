import csv
import gzip
import json
import zipfile

import pytest

from longloop import cli
from longloop.factor_graph import load_cover
from longloop.graph import load_edge_list

TRIANGLE = "a b\nb c\nc a\n"

# two K4 blocks joined by a path, plus a pendant triangle
SMALL = """\
0 1\n0 2\n0 3\n1 2\n1 3\n2 3
3 4\n4 5\n5 6
6 7\n6 8\n6 9\n7 8\n7 9\n8 9
9 10\n10 11\n11 9
"""


@pytest.fixture
def small_graph(tmp_path):
    p = tmp_path / "g.el"
    p.write_text(SMALL)
    return p


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_generate_and_cover_out(tmp_path):
    g_path, c_path = tmp_path / "g.el", tmp_path / "c.txt"
    assert run("generate", "--n", 300, "--k", 4, "--clique-size", 3, "--seed", 2,
               "-o", g_path, "--cover-out", c_path) == 0
    with open(g_path) as fh:
        g = load_edge_list(fh)
    assert (g.n_vertices, g.n_edges) == (300, 1200)
    with open(c_path) as fh:
        fg = load_cover(g, fh)
    assert fg.n_factors == 400 and (fg.factor_sizes == 3).all()


def test_cover_command(tmp_path, small_graph):
    out = tmp_path / "cover.txt"
    assert run("cover", "-i", small_graph, "--max-clique", 4, "--seed", 1, "-o", out) == 0
    with open(small_graph) as fh:
        g = load_edge_list(fh)
    with open(out) as fh:
        fg = load_cover(g, fh)
    assert sorted(fg.factor_sizes.tolist()) == [2, 2, 2, 3, 4, 4]


def test_fvs_triangle(tmp_path):
    g = tmp_path / "k3.el"
    g.write_text(TRIANGLE)
    out = tmp_path / "r.json"
    assert run("fvs", "-i", g, "--algo", "bpd", "-o", out) == 0
    rep = json.loads(out.read_text())
    assert rep["removed_count"] == 1
    assert rep["cover"]["max_clique"] == 2
    # as one 3-clique factor the triangle needs no deletion
    assert run("fvs", "-i", g, "--max-clique", 3, "-o", out) == 0
    assert json.loads(out.read_text())["removed_count"] == 0


REPORT_KEYS = {"command", "params", "seed", "version", "n_vertices", "n_edges", "cover", "fvs_order",
               "extra_tree_breaks", "reinserted", "removed_count", "max_component", "runtime_seconds"}


@pytest.mark.parametrize("algo,extra", [("fbpd", ["--max-clique", "4"]), ("fcorehd", ["--max-clique", "3"]),
                                        ("bpd", []), ("corehd", [])])
def test_dismantle_round_trip(tmp_path, small_graph, algo, extra):
    rep_path, traj = tmp_path / "r.json", tmp_path / "t.csv"
    assert run("dismantle", "-i", small_graph, "--algo", algo, *extra, "--cap", 0.25, "-o", rep_path) == 0
    rep = json.loads(rep_path.read_text())
    assert REPORT_KEYS <= rep.keys()
    assert rep["max_component"] <= rep["component_cap"] == 3
    assert run("trajectory", "-i", small_graph, "--order", rep_path, "-o", traj) == 0
    rows = list(csv.DictReader(traj.open()))
    assert int(rows[-1]["largest_component"]) == rep["max_component"]
    assert len(rows) == rep["removed_count"] + 1
    assert rows[0]["deleted_label"] == ""


def test_trajectory_with_cover_column(tmp_path, small_graph):
    rep_path, cover, traj = tmp_path / "r.json", tmp_path / "c.txt", tmp_path / "t.csv"
    run("cover", "-i", small_graph, "--max-clique", 4, "-o", cover)
    assert run("fvs", "-i", small_graph, "--cover", cover, "-o", rep_path) == 0
    assert run("trajectory", "-i", small_graph, "--order", rep_path, "--stage", "fvs",
               "--cover", cover, "-o", traj) == 0
    rows = list(csv.DictReader(traj.open()))
    assert rows[-1]["fg_twocore_vertices"] == "0"


def test_reruns_are_identical(tmp_path, small_graph):
    outs = []
    for i in range(2):
        rep, traj = tmp_path / f"r{i}.json", tmp_path / f"t{i}.csv"
        run("dismantle", "-i", small_graph, "--max-clique", 3, "--seed", 5, "--cap", 0.25, "-o", rep)
        run("trajectory", "-i", small_graph, "--order", rep, "-o", traj)
        d = json.loads(rep.read_text())
        d.pop("runtime_seconds")
        outs.append((d, traj.read_bytes()))
    assert outs[0] == outs[1]


def test_rs_command(tmp_path):
    out = tmp_path / "rs.csv"
    assert run("rs", "--k", 3, "--n", 2, "--beta-max", 5, "-o", out) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 52
    assert rows[-1]["kind"] == "rho_min"
    # entropy stays positive up to beta=5, so the scan falls back to beta-max
    assert rows[-1]["branch"] == "beta-max"
    assert rows[-1]["rho"] == rows[-2]["rho"]


def test_exit_codes(tmp_path, small_graph, capsys):
    assert run("dismantle", "-i", tmp_path / "missing.el", "-o", tmp_path / "r.json") == 2
    assert run("nonsense") == 1
    assert run("fvs", "-i", small_graph, "--algo", "bpd", "--max-clique", 3, "-o", tmp_path / "r.json") == 1
    assert run("fvs", "-i", small_graph, "--max-clique", 3, "--cover", small_graph,
               "-o", tmp_path / "r.json") == 1
    bad = tmp_path / "bad.el"
    bad.write_text("a b c\n")
    assert run("fvs", "-i", bad, "-o", tmp_path / "r.json") == 2
    assert "line 1" in capsys.readouterr().err
    assert not (tmp_path / "r.json").exists()


def test_dismantle_cap_too_small(tmp_path, small_graph):
    out = tmp_path / "r.json"
    assert run("dismantle", "-i", small_graph, "--cap", 0.01, "-o", out) == 2
    assert not out.exists()


def test_atomic_output_cleans_up(tmp_path):
    target = tmp_path / "out.txt"
    with pytest.raises(RuntimeError):
        with cli.atomic_output(target) as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


def test_trajectory_unknown_label(tmp_path, small_graph):
    rep = tmp_path / "r.json"
    rep.write_text(json.dumps({"fvs_order": ["zz"], "extra_tree_breaks": [], "reinserted": []}))
    out = tmp_path / "t.csv"
    assert run("trajectory", "-i", small_graph, "--order", rep, "-o", out) == 2
    assert not out.exists()


def test_fetch_zip_by_name(tmp_path, monkeypatch):
    src = tmp_path / "src"
    src.mkdir()
    archive = src / "demo.zip"
    with zipfile.ZipFile(archive, "w") as z:
        z.writestr("demo/demo_edges.csv", "node_1,node_2\n0,1\n1,2\n2,0\n")
        z.writestr("demo/readme.txt", "ignore me")
    manifest = {"demo": {"url": archive.as_uri(), "member": "*_edges.csv", "delimiter": ",", "skip_lines": 1}}
    monkeypatch.setattr(cli, "load_manifest", lambda: manifest)
    out = tmp_path / "data"
    assert run("fetch", "--name", "demo", "-o", out) == 0
    with open(out / "demo.el") as fh:
        g = load_edge_list(fh)
    assert (g.n_vertices, g.n_edges) == (3, 3)
    sums = json.loads((out / "checksums.json").read_text())
    assert set(sums) == {"demo.zip"}

    # second call is served from the cache
    def refuse(*a, **k):
        raise AssertionError("network touched")

    monkeypatch.setattr(cli.urllib.request, "urlopen", refuse)
    assert run("fetch", "--name", "demo", "-o", out) == 0


def test_fetch_gz_url(tmp_path):
    archive = tmp_path / "edges.txt.gz"
    with gzip.open(archive, "wt") as fh:
        fh.write("0\t1\n1\t2\n")
    out = tmp_path / "data"
    assert run("fetch", "--url", archive.as_uri(), "-o", out) == 0
    assert (out / "edges.txt.gz").read_bytes() == archive.read_bytes()


def test_fetch_needs_source(tmp_path):
    assert run("fetch", "-o", tmp_path) == 1
    assert run("fetch", "--name", "nope", "-o", tmp_path) == 1
