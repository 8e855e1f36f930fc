"""CSV/JSON formats for edge lists, node attributes and embeddings."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .engine import Embeddings
from .graph import AttributeColumn, EdgeTable, GraphError, NodeAttributeTable
from .summary import node_tension

__all__ = [
    "RunConfig",
    "load_edge_list",
    "load_node_attributes",
    "write_edge_list",
    "write_node_attributes",
    "write_embeddings",
    "fmt",
]


def fmt(x: float) -> str:
    """Round-trip decimal text (up to 17 significant digits)."""
    return format(float(x), ".17g")


def _rows(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            yield lineno, [cell.strip() for cell in row]


def load_edge_list(path) -> EdgeTable:
    """Read ``from,to[,k][,d][,...]``; extra columns must be numeric."""
    path = Path(path)
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise GraphError(f"{path}: empty edge file") from None
    for required in ("from", "to"):
        if required not in header:
            raise GraphError(f"{path}: missing required column {required!r}")
    i_from, i_to = header.index("from"), header.index("to")
    extra = [(c, h) for c, h in enumerate(header) if c not in (i_from, i_to)]
    sources, targets = [], []
    values: dict[str, list[float]] = {h: [] for _, h in extra}
    seen: dict[tuple[str, str], int] = {}
    for lineno, row in rows:
        if len(row) != len(header):
            raise GraphError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        a, b = row[i_from], row[i_to]
        if not a or not b:
            raise GraphError(f"{path}:{lineno}: empty node id")
        if a == b:
            raise GraphError(f"{path}:{lineno}: self-loop on node {a!r}")
        key = (a, b) if a <= b else (b, a)
        if key in seen:
            raise GraphError(f"{path}:{lineno}: duplicate edge {a!r}-{b!r} (first at line {seen[key]})")
        seen[key] = lineno
        for c, h in extra:
            try:
                values[h].append(float(row[c]))
            except ValueError:
                raise GraphError(f"{path}:{lineno}: column {h!r} value {row[c]!r} is not numeric") from None
        sources.append(a)
        targets.append(b)
    return EdgeTable(tuple(sources), tuple(targets), {h: np.array(v) for h, v in values.items()})


def _parse_float(cell: str):
    try:
        return float(cell)
    except ValueError:
        return None


def load_node_attributes(path) -> NodeAttributeTable:
    """Read ``node,<attr...>``. Empty cells are missing. A column whose
    present values all parse as numbers is continuous, otherwise categorical."""
    path = Path(path)
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise GraphError(f"{path}: empty node file") from None
    if not header or header[0] != "node":
        raise GraphError(f"{path}: first column must be 'node'")
    ids: list[str] = []
    seen: dict[str, int] = {}
    raw: list[list[str]] = [[] for _ in header[1:]]
    for lineno, row in rows:
        if len(row) != len(header):
            raise GraphError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        nid = row[0]
        if nid in seen:
            raise GraphError(f"{path}:{lineno}: duplicate node id {nid!r} (first at line {seen[nid]})")
        seen[nid] = lineno
        ids.append(nid)
        for c, cell in enumerate(row[1:]):
            raw[c].append(cell)
    cols = {}
    for name, cells in zip(header[1:], raw):
        present = [c for c in cells if c != ""]
        parsed = [_parse_float(c) for c in present]
        if present and all(p is not None for p in parsed):
            arr = np.array([float(c) if c != "" else math.nan for c in cells])
            cols[name] = AttributeColumn(name, "continuous", arr)
        else:
            arr = np.empty(len(cells), dtype=object)
            arr[:] = [c if c != "" else None for c in cells]
            cols[name] = AttributeColumn(name, "categorical", arr)
    return NodeAttributeTable(tuple(ids), cols)


def write_edge_list(edges: EdgeTable, path) -> Path:
    path = Path(path)
    names = list(edges.columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from", "to", *names])
        for e, (a, b) in enumerate(zip(edges.sources, edges.targets)):
            w.writerow([a, b, *(fmt(edges.columns[h][e]) for h in names)])
    return path


def write_node_attributes(table: NodeAttributeTable, path) -> Path:
    path = Path(path)
    cols = list(table.columns.values())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", *(c.name for c in cols)])
        for r, nid in enumerate(table.node_ids):
            cells = []
            for c in cols:
                v = c.values[r]
                if c.kind == "continuous":
                    cells.append("" if math.isnan(v) else fmt(v))
                else:
                    cells.append("" if v is None else v)
            w.writerow([nid, *cells])
    return path


@dataclass
class RunConfig:
    """Everything needed to regenerate one ``embed`` run."""

    edges: str
    nodes: str
    force: list[str]
    k: Any = 1000.0
    d: Any = 1.0
    mode: str = "auto"
    out: str = "out"
    seed: int = 0
    expand_binary: bool = False
    normalize: bool = False
    solver: dict = field(default_factory=dict)
    autotune: dict = field(default_factory=dict)

    MODES = ("fixed", "auto", "biconnected")

    def __post_init__(self) -> None:
        if isinstance(self.force, str):
            self.force = [f for f in self.force.split(",") if f]
        if self.mode not in self.MODES:
            raise ValueError(f"mode must be one of {', '.join(self.MODES)}")
        if not self.force:
            raise ValueError("at least one force attribute is required")
        self.k = _number_or_column(self.k)
        self.d = _number_or_column(self.d)

    def check_paths(self) -> None:
        for p in (self.edges, self.nodes):
            if not os.path.exists(p):
                raise FileNotFoundError(f"input file not found: {p}")

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


def _number_or_column(spec):
    if isinstance(spec, (int, float)):
        return float(spec)
    try:
        return float(spec)
    except ValueError:
        return str(spec)


def write_embeddings(emb: Embeddings, out_dir, config: dict | None = None) -> dict[str, Path]:
    """Write ``nodes.csv``, ``edges.csv`` and ``run.json`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"{out} is not writable")
    tension = node_tension(emb)
    dims = list(emb.dimension_names)
    elev_cols = ["elevation"] if len(dims) == 1 else [f"elevation_{name}" for name in dims]
    nodes_path = out / "nodes.csv"
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", *elev_cols, "node_tension", "residual_static_force"])
        for i, nid in enumerate(emb.node_ids):
            w.writerow([nid, *(fmt(x) for x in emb.node_elevation[i]), fmt(tension[i]), fmt(emb.node_static_force[i])])
    edges_path = out / "edges.csv"
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from", "to", "tension", "strain"])
        for e in range(emb.src.size):
            w.writerow([
                emb.node_ids[emb.src[e]], emb.node_ids[emb.dst[e]],
                fmt(emb.edge_tension[e]), fmt(emb.edge_strain[e]),
            ])
    run_path = out / "run.json"
    info = {
        "config": config or {},
        "converged": emb.converged,
        "eta": emb.eta,
        "tolerance": emb.tolerance,
        "iterations": emb.iterations,
        "wall_time": emb.wall_time,
        "params": emb.params,
        "dimensions": dims,
    }
    with open(run_path, "w", encoding="utf-8") as fh:
        json.dump(info, fh, indent=2, default=_json_default)
        fh.write("\n")
    return {"nodes": nodes_path, "edges": edges_path, "run": run_path}


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"{type(obj).__name__} is not JSON serialisable")


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a CSV written by this module (used by ``eval``)."""
    rows = list(_rows(Path(path)))
    return rows[0][1], [r for _, r in rows[1:]]
