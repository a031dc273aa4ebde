"""Command-line entry point: ``longloop <command> ...``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import fnmatch
import gzip
import hashlib
import io
import json
import logging
import os
import sys
import tarfile
import tempfile
import time
import urllib.request
import zipfile
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .dismantle import DecimationParams, dismantle, fbpd, fcorehd, trajectory
from .ensemble import EnsembleSpec, generate, rs_fixed_point, rs_minfvs_scan
from .factor_graph import CoverRecipe, FactorGraph, build_clique_cover, load_cover, trivial_cover, write_cover
from .graph import Graph, connected_components, load_edge_list, write_edge_list

log = logging.getLogger("longloop")

ALGOS = {"fbpd": "fbpd", "fcorehd": "fcorehd", "bpd": "fbpd", "corehd": "fcorehd"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@contextlib.contextmanager
def atomic_output(path, mode="w"):
    """Write to a temporary sibling and move it into place only on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh)


def _cover(args, g: Graph) -> tuple[FactorGraph, dict]:
    if args.algo in ("bpd", "corehd"):
        if args.cover is not None or args.max_clique not in (None, 2):
            raise UsageError(f"--algo {args.algo} runs on the plain graph; drop --cover/--max-clique")
        return trivial_cover(g), {"max_clique": 2, "n_factors": g.n_edges, "source": "trivial"}
    if args.cover is not None:
        if args.max_clique is not None:
            raise UsageError("give either --cover or --max-clique, not both")
        with open(args.cover, encoding="utf-8") as fh:
            fg = load_cover(g, fh)
        return fg, {"max_clique": int(fg.factor_sizes.max(initial=0)), "n_factors": fg.n_factors,
                    "source": str(args.cover)}
    k = 2 if args.max_clique is None else args.max_clique
    fg = trivial_cover(g) if k == 2 else build_clique_cover(g, CoverRecipe(k, args.seed))
    return fg, {"max_clique": k, "n_factors": fg.n_factors, "source": "recipe"}


def _labels(g: Graph, ids) -> list[str]:
    return [g.labels[int(v)] for v in ids]


def _dump(path, payload) -> None:
    with atomic_output(path) as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


# ----------------------------------------------------------------------------
# commands


def cmd_generate(args) -> None:
    g, fg = generate(EnsembleSpec(args.n, args.k, args.clique_size, args.seed))
    with atomic_output(args.output) as fh:
        fh.write(f"# random regular clique network N={args.n} K={args.k} n={args.clique_size} "
                 f"seed={args.seed} longloop {__version__}\n")
        write_edge_list(g, fh)
    if args.cover_out:
        with atomic_output(args.cover_out) as fh:
            fh.write(f"# exact clique cover, seed={args.seed}\n")
            write_cover(fg, fh)


def cmd_cover(args) -> None:
    g = _read_graph(args.input)
    fg = build_clique_cover(g, CoverRecipe(args.max_clique, args.seed)) if args.max_clique > 2 \
        else trivial_cover(g)
    with atomic_output(args.output) as fh:
        fh.write(f"# max_clique={args.max_clique} seed={args.seed} longloop {__version__}\n")
        write_cover(fg, fh)


def _params(args) -> DecimationParams:
    return DecimationParams(beta=args.beta, sweeps_per_step=args.sweeps, delete_fraction=args.frac,
                            seed=args.seed)


def _header(args, g: Graph, cover: dict, params: dict) -> dict:
    return {
        "command": args.command,
        "params": params,
        "seed": args.seed,
        "version": __version__,
        "n_vertices": g.n_vertices,
        "n_edges": g.n_edges,
        "cover": cover,
    }


def cmd_fvs(args) -> None:
    t0 = time.perf_counter()
    g = _read_graph(args.input)
    fg, cover = _cover(args, g)
    p = _params(args)
    algo = ALGOS[args.algo]
    order = fbpd(fg, p) if algo == "fbpd" else fcorehd(fg, p.seed)
    removed = np.zeros(g.n_vertices, dtype=bool)
    removed[order] = True
    comps = connected_components(g.view(removed))
    out = _header(args, g, cover, {"algo": args.algo, "beta": p.beta, "frac": p.delete_fraction,
                                   "sweeps": p.sweeps_per_step})
    out.update(fvs_order=_labels(g, order), extra_tree_breaks=[], reinserted=[],
               removed_count=len(order), max_component=len(comps[0]) if comps else 0,
               runtime_seconds=round(time.perf_counter() - t0, 3))
    _dump(args.output, out)


def cmd_dismantle(args) -> None:
    t0 = time.perf_counter()
    g = _read_graph(args.input)
    fg, cover = _cover(args, g)
    p = _params(args)
    rep = dismantle(g, fg, p, ALGOS[args.algo], args.cap)
    out = _header(args, g, cover, {"algo": args.algo, "beta": p.beta, "frac": p.delete_fraction,
                                   "sweeps": p.sweeps_per_step, "cap": args.cap})
    out.update(fvs_order=_labels(g, rep.fvs_order), extra_tree_breaks=_labels(g, rep.extra_tree_breaks),
               reinserted=_labels(g, rep.reinserted), removed_count=rep.removed_count,
               max_component=rep.max_component, component_cap=rep.cap,
               runtime_seconds=round(time.perf_counter() - t0, 3))
    _dump(args.output, out)


def replay_order(report: dict, stage: str = "final") -> list[str]:
    """Deletion order (labels) stored in a report.

    ``final`` replays every deletion that was not undone by reinsertion;
    ``fvs`` replays the feedback-vertex stage alone.
    """
    if stage == "fvs":
        return list(report["fvs_order"])
    back = set(report.get("reinserted", []))
    return [v for v in report["fvs_order"] + report.get("extra_tree_breaks", []) if v not in back]


def cmd_trajectory(args) -> None:
    g = _read_graph(args.input)
    with open(args.order, encoding="utf-8") as fh:
        report = json.load(fh)
    labels = replay_order(report, args.stage)
    try:
        order = [g.index_of(lab) for lab in labels]
    except KeyError as exc:
        raise ValueError(f"order lists vertex {exc.args[0]!r} which is not in the graph") from None
    fg = None
    if args.cover:
        with open(args.cover, encoding="utf-8") as fh:
            fg = load_cover(g, fh)
    rows = trajectory(g, order, fg)
    with atomic_output(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["k", "deleted_label", "twocore_vertices", "largest_component"]
        w.writerow(head + (["fg_twocore_vertices"] if fg is not None else []))
        for r in rows:
            lab = "" if r[0] == 0 else labels[r[0] - 1]
            w.writerow([r[0], lab, *r[1:]])


def cmd_rs(args) -> None:
    best = rs_minfvs_scan(args.k, args.n, args.beta_max, args.beta_step)
    grid = np.arange(0.0, args.beta_max + args.beta_step / 2, args.beta_step)
    with atomic_output(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "K", "n", "beta", "m", "S", "rho", "entropy_density", "branch"])
        for b in grid:
            r = rs_fixed_point(args.k, args.n, float(b))
            w.writerow(["grid", args.k, args.n, f"{r.beta:.6g}", f"{r.m:.10g}", f"{r.S:.10g}",
                        f"{r.rho:.10g}", f"{r.entropy_density:.10g}", ""])
        w.writerow(["rho_min", args.k, args.n, f"{best.beta_star:.6g}", f"{best.m:.10g}", f"{best.S:.10g}",
                    f"{best.rho_min:.10g}", f"{best.entropy_density:.10g}", best.branch])


def load_manifest() -> dict:
    return json.loads(resources.files("longloop").joinpath("datasets.json").read_text())


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _extract_member(archive: Path, pattern: str) -> bytes:
    name = archive.name
    if name.endswith(".zip"):
        with zipfile.ZipFile(archive) as z:
            hits = [m for m in z.namelist() if fnmatch.fnmatch(m, pattern)]
            if not hits:
                raise ValueError(f"{name}: no member matches {pattern!r}")
            return z.read(hits[0])
    if name.endswith((".tar.gz", ".tgz", ".tar")):
        with tarfile.open(archive) as t:
            hits = [m for m in t.getmembers() if m.isfile() and fnmatch.fnmatch(m.name, pattern)]
            if not hits:
                raise ValueError(f"{name}: no member matches {pattern!r}")
            return t.extractfile(hits[0]).read()
    if name.endswith(".gz"):
        with gzip.open(archive) as fh:
            return fh.read()
    return archive.read_bytes()


def _to_edge_list(raw: bytes, delimiter: str | None, skip: int) -> str:
    out = io.StringIO()
    lines = raw.decode("utf-8").splitlines()[skip:]
    for line in lines:
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        tok = s.split(delimiter) if delimiter else s.split()
        out.write(f"{tok[0].strip()} {tok[1].strip()}\n")
    return out.getvalue()


def cmd_fetch(args) -> None:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    entry = {}
    if args.name:
        manifest = load_manifest()
        if args.name not in manifest:
            raise UsageError(f"unknown dataset {args.name!r}; known: {', '.join(sorted(manifest))}")
        entry = manifest[args.name]
        url = entry["url"]
    elif args.url:
        url = args.url
    else:
        raise UsageError("fetch needs --url or --name")
    target = outdir / os.path.basename(url.split("?")[0])
    sums_path = outdir / "checksums.json"
    sums = json.loads(sums_path.read_text()) if sums_path.exists() else {}
    if target.exists() and sums.get(target.name) == _sha256(target):
        log.info("cached: %s", target)
    else:
        with urllib.request.urlopen(url, timeout=120) as resp, atomic_output(target, "wb") as fh:
            while block := resp.read(1 << 20):
                fh.write(block)
        sums[target.name] = _sha256(target)
        with atomic_output(sums_path) as fh:
            json.dump(sums, fh, indent=1, sort_keys=True)
    if entry:
        raw = _extract_member(target, entry.get("member", "*"))
        text = _to_edge_list(raw, entry.get("delimiter"), entry.get("skip_lines", 0))
        with atomic_output(outdir / f"{args.name}.el") as fh:
            fh.write(f"# {args.name} from {url} sha256={sums[target.name]}\n")
            fh.write(text)
    print(target)


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="longloop", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("generate", help="sample a random regular clique network")
    s.add_argument("--n", type=int, required=True, help="number of vertices N")
    s.add_argument("--k", type=int, required=True, help="cliques per vertex K")
    s.add_argument("--clique-size", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--cover-out")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("cover", help="build a randomised clique cover")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("--max-clique", type=int, choices=(2, 3, 4), default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_cover)

    for name, func in (("fvs", cmd_fvs), ("dismantle", cmd_dismantle)):
        s = sub.add_parser(name)
        s.add_argument("-i", "--input", required=True)
        s.add_argument("--cover")
        s.add_argument("--max-clique", type=int, choices=(2, 3, 4))
        s.add_argument("--algo", choices=sorted(ALGOS), default="fbpd")
        s.add_argument("--beta", type=float, default=7.0)
        s.add_argument("--frac", type=float, default=0.01)
        s.add_argument("--sweeps", type=int, default=10)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("-o", "--output", required=True)
        if name == "dismantle":
            s.add_argument("--cap", type=float, default=0.01)
        s.set_defaults(func=func)

    s = sub.add_parser("trajectory", help="replay a report's deletion order")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("--order", required=True)
    s.add_argument("--stage", choices=("final", "fvs"), default="final")
    s.add_argument("--cover")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_trajectory)

    s = sub.add_parser("rs", help="replica-symmetric theory of the regular ensemble")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta-max", type=float, default=20.0)
    s.add_argument("--beta-step", type=float, default=0.1)
    s.add_argument("-o", "--output", default="rs.csv")
    s.set_defaults(func=cmd_rs)

    s = sub.add_parser("fetch", help="download a dataset (cached by checksum)")
    s.add_argument("--url")
    s.add_argument("--name")
    s.add_argument("-o", "--output", default="data")
    s.set_defaults(func=cmd_fetch)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"longloop {args.command}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, AssertionError) as exc:
        print(f"longloop {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
