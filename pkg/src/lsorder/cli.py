"""Command line harness: dataset generation, structure builds, verification
with JSON reports, NNS / path query loops, and smoke benchmarks.

Exit status contract: verification passes iff exit code 0.
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from . import fileio, seeds
from .doubling import build_ultrametric_cover, cover_preorder_to_triangle_lso
from .euclidean import build_classic_grid_lso, build_triangle_lso_verified
from .hopsets import FtTwoHopPathSpanner, TwoHopPathSpanner
from .metrics import (
    LpMetric,
    MatrixMetric,
    PointSet,
    WeightedGraph,
    shortest_path_metric,
)
from .nns import (
    RootedNns,
    TriangleNns,
    UltrametricNns,
    assign_rooted_labels,
    assign_triangle_labels,
)
from .orderings import build_rooted_lso_tree, build_rooted_lso_treewidth, verify_family
from .spanners import (
    ft_spanner_from_family,
    pr_spanner_from_classic,
    pr_spanner_from_rooted,
    pr_spanner_from_triangle,
    shortest_paths_on_edges,
    sparse_cover_spanner,
    spd_spanner,
    tree_heavy_path_spd,
    tz_spanner,
)

GEN_KINDS = (
    "uniform-cube",
    "gaussian-clusters",
    "grid",
    "random-metric",
    "random-tree",
    "random-graph",
)


def _rng(args, *tags):
    return seeds.rng_for(args.seed, *tags)


def cmd_gen(args):
    rng = _rng(args, "gen", args.kind, args.n, args.d)
    n, d = args.n, args.d
    if args.kind == "uniform-cube":
        fileio.write_points(args.out, PointSet(rng.uniform(size=(n, d))))
    elif args.kind == "gaussian-clusters":
        k = max(1, n // 50)
        centers = rng.uniform(size=(k, d))
        idx = rng.integers(0, k, size=n)
        pts = centers[idx] + rng.normal(scale=0.05, size=(n, d))
        fileio.write_points(args.out, PointSet(pts))
    elif args.kind == "grid":
        side = int(math.ceil(n ** (1.0 / d)))
        coords = np.stack(
            np.meshgrid(*([np.arange(side)] * d), indexing="ij"), axis=-1
        ).reshape(-1, d)[:n]
        fileio.write_points(args.out, PointSet(coords.astype(float)))
    elif args.kind == "random-tree":
        edges = [
            (int(rng.integers(0, v)), v, float(rng.integers(1, 9)))
            for v in range(1, n)
        ]
        fileio.write_graph(args.out, WeightedGraph(n, edges))
    elif args.kind == "random-graph":
        edges = [
            (int(rng.integers(0, v)), v, float(rng.integers(2, 512)) / 256.0)
            for v in range(1, n)
        ]
        extra = {(u, v) for u, v, _ in edges}
        for _ in range(2 * n):
            u, v = sorted(rng.integers(0, n, size=2).tolist())
            if u != v and (u, v) not in extra:
                extra.add((u, v))
                edges.append((u, v, float(rng.integers(2, 512)) / 256.0))
        fileio.write_graph(args.out, WeightedGraph(n, edges))
    elif args.kind == "random-metric":
        raw = rng.uniform(1.0, 10.0, size=(n, n))
        raw = (raw + raw.T) / 2
        np.fill_diagonal(raw, 0.0)
        g = WeightedGraph(
            n, [(i, j, float(raw[i, j])) for i in range(n) for j in range(i + 1, n)]
        )
        mat = shortest_path_metric(g).matrix()
        complete = WeightedGraph(
            n, [(i, j, float(mat[i, j])) for i in range(n) for j in range(i + 1, n)]
        )
        fileio.write_graph(args.out, complete)
    else:
        raise SystemExit(f"unknown dataset kind {args.kind!r}")
    print(f"wrote {args.kind} dataset to {args.out}")
    return 0


def load_metric(args):
    """Dataset file -> metric (points file => lp metric, graph file => SPM)."""
    with open(args.input, encoding="utf-8") as fh:
        first = ""
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                first = line
                break
    toks = first.split()
    if len(toks) == 2 and all(t.lstrip("-").isdigit() for t in toks):
        g = fileio.read_graph(args.input)
        return shortest_path_metric(g), g, None
    ps = fileio.read_points(args.input)
    p = args.p if args.p else 2.0
    return LpMetric(ps, p if p != 0 else math.inf), None, ps


def cmd_build(args):
    t0 = time.time()
    structure = args.structure
    if structure == "two-hop":
        s = TwoHopPathSpanner(args.n)
        doc = {"structure": "two-hop", "n": s.n, "edges": s.num_edges()}
        if s.n <= 4096:
            doc["adjacency"] = {str(i): s.edges_of(i) for i in range(1, s.n + 1)}
        _dump(args.out, doc)
    elif structure == "ft-two-hop":
        s = FtTwoHopPathSpanner(args.n, args.f)
        doc = {"structure": "ft-two-hop", "n": s.n, "f": s.f, "edges": s.num_edges()}
        _dump(args.out, doc)
    elif structure == "triangle-lso":
        metric, _, ps = load_metric(args)
        fam = build_triangle_lso_verified(
            ps, p=args.p or 2, t=args.t, delta=args.delta, seed=args.seed
        )
        fileio.write_family(args.out, fam)
    elif structure == "grid-lso":
        _, _, ps = load_metric(args)
        grid = build_classic_grid_lso(ps, eps=args.eps, seed=args.seed)
        fileio.write_family(args.out, grid.family)
    elif structure == "ultrametric-cover":
        metric, _, _ = load_metric(args)
        cover = build_ultrametric_cover(metric, t=args.t, seed=args.seed)
        fileio.write_cover(args.out, cover)
    elif structure == "cover-triangle-lso":
        metric, _, _ = load_metric(args)
        cover = build_ultrametric_cover(metric, t=args.t, seed=args.seed)
        fileio.write_family(args.out, cover_preorder_to_triangle_lso(cover))
    elif structure == "rooted-tree":
        _, g, _ = load_metric(args)
        if g is None:
            raise SystemExit("rooted-tree needs a graph input")
        fam = build_rooted_lso_tree(g)
        fileio.write_family(args.out, fam)
    elif structure == "rooted-treewidth":
        _, g, _ = load_metric(args)
        td = fileio.read_tree_decomposition(args.td)
        fam = build_rooted_lso_treewidth(g, td)
        fileio.write_family(args.out, fam)
    elif structure == "tz":
        metric, _, _ = load_metric(args)
        sp = tz_spanner(metric, k=args.k, seed=args.seed)
        fileio.write_spanner(args.out, sp)
    elif structure == "sparse-cover":
        metric, _, _ = load_metric(args)
        tzsp = tz_spanner(metric, k=args.k, seed=args.seed)
        sp = sparse_cover_spanner(
            metric, k=args.k, eps=args.eps, estimator=lambda u, v: tzsp.query(u, v)[1]
        )
        fileio.write_spanner(args.out, sp)
    elif structure == "spd-tree":
        _, g, _ = load_metric(args)
        spd = tree_heavy_path_spd(g)
        sp = spd_spanner(spd, eps=args.eps)
        fileio.write_spanner(args.out, sp)
    else:
        raise SystemExit(f"unknown structure {structure!r}")
    print(f"built {structure} in {time.time() - t0:.2f}s -> {args.out}")
    return 0


def cmd_verify(args):
    t0 = time.time()
    metric, _, _ = load_metric(args)
    fam = fileio.read_family(args.family)
    report_doc = None
    try:
        rep = verify_family(fam, metric)
        report_doc = fileio.make_report(
            structure=f"{fam.kind}-family",
            params={"rho": fam.rho, "tau": fam.tau},
            seed=args.seed,
            num_orderings=len(fam.orderings),
            verified_pairs=rep.pairs_checked,
            violations=[[int(x), int(y), float(r)] for x, y, r in rep.violations[:100]],
            max_observed_stretch=rep.max_observed_stretch,
            timings={"verify_s": time.time() - t0},
        )
    except ValueError as exc:
        report_doc = fileio.make_report(
            structure=f"{fam.kind}-family",
            params={"rho": fam.rho, "tau": fam.tau},
            seed=args.seed,
            num_orderings=len(fam.orderings),
            verified_pairs=0,
            violations=[["structural", str(exc), 0.0]],
            max_observed_stretch=float("nan"),
            timings={"verify_s": time.time() - t0},
        )
    if args.out:
        fileio.write_report(args.out, report_doc)
    print(json.dumps({k: report_doc[k] for k in ("structure", "pass", "max_observed_stretch")}))
    return 0 if report_doc["pass"] else 1


def cmd_nns(args):
    metric, g, ps = load_metric(args)
    fam = fileio.read_family(args.family)
    if fam.kind == "rooted":
        labels = assign_rooted_labels(fam, metric)
        nns = RootedNns(fam, labels)
    elif fam.kind == "triangle":
        labels, hop = assign_triangle_labels(fam, metric)
        nns = TriangleNns(fam, labels, hop)
    else:
        raise SystemExit("nns needs a rooted or triangle family")
    for line in sys.stdin:
        toks = line.split()
        if not toks:
            continue
        op = toks[0]
        if op == "i":
            nns.insert(int(toks[1]))
            print("ok")
        elif op == "d":
            nns.delete(int(toks[1]))
            print("ok")
        elif op == "q":
            pid, est = nns.query(labels[int(toks[1])])
            print(f"{pid} {float(est)!r}")
        else:
            print(f"unknown op {op!r}", file=sys.stderr)
    return 0


def cmd_path(args):
    metric, g, ps = load_metric(args)
    fam = fileio.read_family(args.family)
    if fam.kind == "classic":
        sp = pr_spanner_from_classic(fam, metric)
    elif fam.kind == "triangle":
        sp = pr_spanner_from_triangle(fam, metric)
    else:
        sp = pr_spanner_from_rooted(fam, metric)
    ft = None
    if args.f:
        ft = ft_spanner_from_family(fam, metric, args.f)
    for line in sys.stdin:
        toks = line.split()
        if not toks:
            continue
        if toks[0] != "p":
            print(f"unknown op {toks[0]!r}", file=sys.stderr)
            continue
        u, v = int(toks[1]), int(toks[2])
        faults = [int(t) for t in toks[3:]]
        if faults:
            if ft is None:
                print("fault query needs --f budget", file=sys.stderr)
                continue
            path, w = ft.query(u, v, faults)
        else:
            path, w = sp.query(u, v)
        print(" ".join(str(x) for x in path) + f" | {float(w)!r}")
    return 0


def cmd_bench(args):
    n = args.n
    t0 = time.time()
    s = TwoHopPathSpanner(n)
    build_s = time.time() - t0
    rng = _rng(args, "bench")
    lat = []
    queries = min(200_000, max(10_000, n // 4))
    us = rng.integers(1, n + 1, size=queries)
    vs = rng.integers(1, n + 1, size=queries)
    for u, v in zip(us, vs):
        a, b = (int(u), int(v)) if u <= v else (int(v), int(u))
        t1 = time.perf_counter()
        s.query(a, b)
        lat.append(time.perf_counter() - t1)
    lat.sort()
    doc = {
        "structure": "two-hop",
        "n": n,
        "build_s": build_s,
        "queries": queries,
        "p50_us": lat[len(lat) // 2] * 1e6,
        "p99_us": lat[int(len(lat) * 0.99)] * 1e6,
    }
    if args.out:
        _dump(args.out, doc)
    print(json.dumps(doc))
    return 0


def cmd_report(args):
    with open(args.input, encoding="utf-8") as fh:
        doc = json.load(fh)
    status = "PASS" if doc.get("pass") else "FAIL"
    print(
        f"[{status}] {doc.get('structure')} pairs={doc.get('verified_pairs')} "
        f"max_stretch={doc.get('max_observed_stretch')}"
    )
    return 0 if doc.get("pass") else 1


def _dump(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def make_parser():
    ap = argparse.ArgumentParser(prog="lsorder")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", help="dataset file (points or graph)")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--structure")
        p.add_argument("--t", type=float, default=4.0)
        p.add_argument("--eps", type=float, default=0.25)
        p.add_argument("--k", type=int, default=2)
        p.add_argument("--f", type=int, default=0)
        p.add_argument("--p", type=float, default=2.0)
        p.add_argument("--delta", type=float, default=0.5)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--n", type=int, default=16)
        p.add_argument("--d", type=int, default=2)

    g = sub.add_parser("gen", help="generate a dataset")
    g.add_argument("kind", choices=GEN_KINDS)
    common(g)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build a structure")
    common(b)
    b.add_argument("--td", help="tree decomposition file")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="verify an ordering family file")
    common(v)
    v.add_argument("--family", required=True)
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("nns", help="drive NNS queries from stdin")
    common(q)
    q.add_argument("--family", required=True)
    q.set_defaults(func=cmd_nns)

    pth = sub.add_parser("path", help="drive path queries from stdin")
    common(pth)
    pth.add_argument("--family", required=True)
    pth.set_defaults(func=cmd_path)

    be = sub.add_parser("bench", help="smoke benchmark")
    common(be)
    be.set_defaults(func=cmd_bench)

    r = sub.add_parser("report", help="summarize a report file")
    common(r)
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
