"""``setse`` command line: embed, quintet, eval, bench."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .autotune import AutoTuneParams, UntunableError
from .bench import benchmark, loglog_slope
from .blocks import default_workers
from .engine import DivergenceError, SolverParams
from .evaluation import adjacency_vote, assortativity, knn_predict, multinomial_separability, score_predictions
from .graph import EdgeTable, GraphError, NodeAttributeTable, build_prepared_graph
from .io import RunConfig, fmt, load_edge_list, load_node_attributes, write_edge_list, write_embeddings, write_node_attributes
from .pipeline import MODES, embed_graph
from .summary import aggregate_network, node_summary
from .synthetic import QUINTET_TYPES, generate_peel

log = logging.getLogger("setse")


def _solver_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--mode", choices=MODES, default="auto")
    g.add_argument("--k", default="1000", help="spring stiffness: a number or an edge column name")
    g.add_argument("--d", default="1", help="rest distance: a number or an edge column name")
    g.add_argument("--dt", type=float, help="time step (fixed mode) or starting time step (auto modes)")
    g.add_argument("--drag", type=float, help="drag coefficient (fixed mode)")
    g.add_argument("--mass", type=float)
    g.add_argument("--max-iter", type=int, help="iteration cap (fixed mode)")
    g.add_argument("--tol", type=float, help="absolute convergence tolerance (default sum|F|/1000)")
    g.add_argument("--drag-min", type=float)
    g.add_argument("--drag-max", type=float)
    g.add_argument("--hyper-iter", type=int)
    g.add_argument("--final-iter", type=int)
    g.add_argument("--p-max", type=int)


def _solver_overrides(args) -> tuple[dict, dict]:
    solver = {
        key: val
        for key, val in (
            ("dt", args.dt), ("drag", args.drag), ("mass", args.mass),
            ("max_iterations", args.max_iter), ("tolerance", args.tol),
        )
        if val is not None
    }
    tune = {
        key: val
        for key, val in (
            ("dt", args.dt), ("mass", args.mass), ("tolerance", args.tol),
            ("drag_min", args.drag_min), ("drag_max", args.drag_max),
            ("hyper_iterations", args.hyper_iter), ("final_iterations", args.final_iter),
            ("p_max", args.p_max),
        )
        if val is not None
    }
    return solver, tune


def _embed_config(cfg: RunConfig, workers: int | None = None):
    edges = load_edge_list(cfg.edges)
    nodes = load_node_attributes(cfg.nodes)
    graph = build_prepared_graph(edges, nodes, cfg.force, k=cfg.k, d=cfg.d, expand_binary=cfg.expand_binary)
    base = SolverParams()
    solver = SolverParams(**{**base.__dict__, **cfg.solver})
    tune = AutoTuneParams(**cfg.autotune)
    emb = embed_graph(graph, cfg.mode, solver, tune, workers=workers)
    if cfg.normalize and graph.n_edges:
        if not np.all(graph.d == graph.d[0]):
            raise GraphError("--normalize needs a constant edge distance")
        emb.node_elevation = emb.node_elevation / graph.d[0]
    return graph, nodes, emb


def cmd_embed(args) -> int:
    if args.config:
        cfg = RunConfig.from_json(args.config)
    else:
        if not (args.edges and args.nodes and args.force):
            raise ValueError("embed needs --edges, --nodes and --force (or --config)")
        solver, tune = _solver_overrides(args)
        cfg = RunConfig(
            edges=args.edges, nodes=args.nodes, force=args.force, k=args.k, d=args.d,
            mode=args.mode, out=args.out, seed=args.seed, expand_binary=args.expand_binary,
            normalize=args.normalize, solver=solver, autotune=tune,
        )
    cfg.check_paths()
    _, _, emb = _embed_config(cfg)
    write_embeddings(emb, cfg.out, cfg.to_dict())
    status = "converged" if emb.converged else "NOT converged"
    print(f"{status}: eta={emb.eta:.6g} tolerance={emb.tolerance:.6g} iterations={emb.iterations} -> {cfg.out}")
    return 0


def cmd_quintet(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        inst = generate_peel(args.type, args.seed + 10_000 * i)
        target = out / f"quintet_{inst.type}_{i:03d}"
        target.mkdir(exist_ok=True)
        edges = EdgeTable(
            tuple(inst.node_ids[a] for a in inst.edges[:, 0]),
            tuple(inst.node_ids[b] for b in inst.edges[:, 1]),
        )
        write_edge_list(edges, target / "edges.csv")
        table = NodeAttributeTable.from_dict(inst.node_ids, {"class": inst.classes, "subclass": inst.subclasses})
        write_node_attributes(table, target / "nodes.csv")
        with open(target / "meta.json", "w", encoding="utf-8") as fh:
            json.dump({"type": inst.type, "seed": inst.seed, "requested_seed": args.seed + 10_000 * i}, fh, indent=2)
            fh.write("\n")
    print(f"wrote {args.count} type {args.type.upper()} instances to {out}")
    return 0


def _instances(root: Path) -> list[Path]:
    found = sorted(p for p in root.iterdir() if (p / "edges.csv").exists() and (p / "nodes.csv").exists())
    if not found:
        raise FileNotFoundError(f"no instance directories (with edges.csv and nodes.csv) under {root}")
    return found


def _eval_one(inst: Path, args, solver: dict, tune: dict) -> dict:
    cfg = RunConfig(
        edges=str(inst / "edges.csv"), nodes=str(inst / "nodes.csv"), force=args.force,
        k=args.k, d=args.d, mode=args.mode, solver=solver, autotune=tune,
    )
    graph, nodes, emb = _embed_config(cfg, workers=1)
    summary = node_summary(emb)
    meta = {}
    if (inst / "meta.json").exists():
        meta = json.loads((inst / "meta.json").read_text(encoding="utf-8"))
    row = {"instance": inst.name, "group": meta.get("type", ""), "converged": emb.converged, "eta": emb.eta}
    net = aggregate_network(summary)
    row["mean_abs_elevation"] = float(net.mean_abs_elevation[0])
    row["mean_node_tension"] = net.mean_node_tension
    if args.label:
        labels = list(nodes[args.label].values)
        row["assortativity"] = assortativity(graph, labels)
        coords = np.column_stack([summary.node_tension, summary.elevation])
        if args.experiment == "separability":
            keep = [i for i, lab in enumerate(labels) if lab is not None]
            row["acc"] = multinomial_separability(coords[keep], [labels[i] for i in keep])
        elif args.experiment == "knn":
            pred = knn_predict(coords, labels, args.k_neighbors)
            row.update(score_predictions(labels, pred))
        elif args.experiment == "adjacency":
            eligible = args.eligible.split(",") if args.eligible else None
            pred = adjacency_vote(graph, labels, eligible)
            row.update(score_predictions(labels, pred))
    return row


def cmd_eval(args) -> int:
    root = Path(args.data)
    instances = _instances(root)
    solver, tune = _solver_overrides(args)
    if args.experiment != "network" and not args.label:
        raise ValueError(f"--label is required for the {args.experiment} experiment")
    workers = args.threads or default_workers()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda p: _eval_one(p, args, solver, tune), instances))
    summary = {}
    if args.experiment == "network":
        groups = [r["group"] or r["instance"] for r in rows]
        points = [(r["mean_abs_elevation"], r["mean_node_tension"]) for r in rows]
        if len(set(groups)) >= 2:
            summary["network_separability"] = multinomial_separability(points, groups)
    columns = []
    for r in rows:
        columns.extend(c for c in r if c not in columns)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in columns])
    print(f"{len(rows)} networks -> {out}")
    for key, val in summary.items():
        print(f"{key}: {val:.4f}")
    return 0


def _cell(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else fmt(v)
    return str(v)


def cmd_bench(args) -> int:
    sizes = [int(float(s)) for s in args.sizes.split(",") if s]
    rows = benchmark(sizes, seed=args.seed, iterations=args.iterations, repeats=args.repeats, converge=not args.no_converge)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cols = ["n_edges", "n_nodes", "sec_per_iteration", "iterations_to_converge", "sec_to_converge", "converged"]
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r[c]) for c in cols])
    m = [r["n_edges"] for r in rows]
    print(f"per-iteration log-log slope: {loglog_slope(m, [r['sec_per_iteration'] for r in rows]):.3f}")
    if not args.no_converge:
        print(f"time-to-convergence log-log slope: {loglog_slope(m, [r['sec_to_converge'] for r in rows]):.3f}")
    print(f"timings -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="setse", description="Spring-network equilibrium graph embeddings.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed one graph")
    p.add_argument("--edges")
    p.add_argument("--nodes")
    p.add_argument("--force", help="comma-separated node attribute(s) used as force")
    p.add_argument("--out", default="out")
    p.add_argument("--config", help="JSON run config (overrides the other flags)")
    p.add_argument("--seed", type=int, default=0, help="recorded in run.json; the solver itself is deterministic")
    p.add_argument("--expand-binary", action="store_true", help="one dimension per level for binary attributes")
    p.add_argument("--normalize", action="store_true", help="divide elevations by the constant edge distance")
    _solver_args(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("quintet", help="generate Peel's quintet instances")
    p.add_argument("--type", required=True, type=str.upper, choices=QUINTET_TYPES)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quintet)

    p = sub.add_parser("eval", help="embed and evaluate a directory of instances")
    p.add_argument("--data", required=True)
    p.add_argument("--experiment", choices=("network", "separability", "knn", "adjacency"), default="network")
    p.add_argument("--force", default="class")
    p.add_argument("--label", help="node attribute to predict")
    p.add_argument("--k-neighbors", type=int, default=3)
    p.add_argument("--eligible", help="comma-separated labels allowed to vote (adjacency)")
    p.add_argument("--threads", type=int, help="parallel instances (default SETSE_THREADS or core count)")
    p.add_argument("--out", default="report.csv")
    _solver_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="per-iteration and convergence timing sweep")
    p.add_argument("--sizes", default="1000,3000,10000,30000,100000", help="comma-separated edge counts")
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-converge", action="store_true", help="skip the time-to-convergence runs")
    p.add_argument("--out", default="bench.csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (GraphError, ValueError, FileNotFoundError, PermissionError, DivergenceError, UntunableError) as exc:
        print(f"setse {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
