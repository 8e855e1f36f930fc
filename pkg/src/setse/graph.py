"""Graph data model and force preparation.

Node attributes become forces: continuous columns are mean-centred, categorical
columns are one-hot expanded and mean-centred per level. Every force dimension
of a :class:`PreparedGraph` sums to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "GraphError",
    "PreparedGraph",
    "AttributeColumn",
    "NodeAttributeTable",
    "EdgeTable",
    "balance_continuous",
    "expand_categorical",
    "build_prepared_graph",
    "component_labels",
    "rebalance_components",
]

BALANCE_RTOL = 1e-9


class GraphError(ValueError):
    """Invalid graph, attribute table or force specification."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PreparedGraph:
    """Undirected spring network with balanced node forces.

    ``forces`` has shape ``(n_nodes, n_dims)``. Edge arrays are parallel:
    edge ``e`` joins ``src[e]`` and ``dst[e]`` with stiffness ``k[e]`` and
    rest distance ``d[e]``.
    """

    node_ids: tuple[str, ...]
    src: np.ndarray
    dst: np.ndarray
    k: np.ndarray
    d: np.ndarray
    forces: np.ndarray
    dimension_names: tuple[str, ...]

    def __post_init__(self) -> None:
        n = len(self.node_ids)
        src = np.asarray(self.src, dtype=np.int64).reshape(-1)
        dst = np.asarray(self.dst, dtype=np.int64).reshape(-1)
        m = src.size
        k = np.broadcast_to(np.asarray(self.k, dtype=np.float64), (m,)).copy()
        d = np.broadcast_to(np.asarray(self.d, dtype=np.float64), (m,)).copy()
        forces = np.asarray(self.forces, dtype=np.float64)
        if forces.ndim == 1:
            forces = forces.reshape(-1, 1)
        names = tuple(self.dimension_names)

        if len(set(self.node_ids)) != n:
            raise GraphError("duplicate node ids")
        if dst.size != m:
            raise GraphError("src and dst differ in length")
        if forces.shape[0] != n:
            raise GraphError(f"forces have {forces.shape[0]} rows for {n} nodes")
        if len(names) != forces.shape[1]:
            raise GraphError("one dimension name is required per force column")
        if not np.all(np.isfinite(forces)):
            raise GraphError("forces must be finite")
        if m:
            bad = np.flatnonzero((src < 0) | (src >= n) | (dst < 0) | (dst >= n))
            if bad.size:
                raise GraphError(f"edge {bad[0]} has an endpoint outside 0..{n - 1}")
            loops = np.flatnonzero(src == dst)
            if loops.size:
                raise GraphError(f"edge {loops[0]} is a self-loop on node {self.node_ids[src[loops[0]]]!r}")
            bad = np.flatnonzero(~(k > 0) | ~np.isfinite(k))
            if bad.size:
                raise GraphError(f"edge {bad[0]} has non-positive stiffness k={k[bad[0]]}")
            bad = np.flatnonzero(~(d > 0) | ~np.isfinite(d))
            if bad.size:
                raise GraphError(f"edge {bad[0]} has non-positive distance d={d[bad[0]]}")
            lo, hi = np.minimum(src, dst), np.maximum(src, dst)
            key = lo * n + hi
            order = np.argsort(key, kind="stable")
            dup = np.flatnonzero(key[order][1:] == key[order][:-1])
            if dup.size:
                e = order[dup[0] + 1]
                raise GraphError(
                    f"duplicate edge {self.node_ids[src[e]]!r}-{self.node_ids[dst[e]]!r} (edge {e})"
                )
        total = np.abs(forces).sum(axis=0)
        net = forces.sum(axis=0)
        for q in np.flatnonzero(np.abs(net) > BALANCE_RTOL * total):
            raise GraphError(f"forces in dimension {names[q]!r} sum to {net[q]:.6g}, not 0")
        degree = np.bincount(np.concatenate([src, dst]), minlength=n)
        iso = np.flatnonzero((degree == 0) & np.any(forces != 0, axis=1))
        if iso.size:
            raise GraphError(
                f"isolated node {self.node_ids[iso[0]]!r} carries a non-zero force and can never equilibrate"
            )

        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        object.__setattr__(self, "src", _readonly(src))
        object.__setattr__(self, "dst", _readonly(dst))
        object.__setattr__(self, "k", _readonly(k))
        object.__setattr__(self, "d", _readonly(d))
        object.__setattr__(self, "forces", _readonly(forces))
        object.__setattr__(self, "dimension_names", names)

    @classmethod
    def from_edges(
        cls,
        n_or_ids: Union[int, Sequence[str]],
        edges: Iterable[tuple[int, int]],
        forces,
        k=1000.0,
        d=1.0,
        dimension_names: Sequence[str] | None = None,
    ) -> "PreparedGraph":
        """Build from index pairs; node ids default to ``"0".."n-1"``."""
        ids = [str(i) for i in range(n_or_ids)] if isinstance(n_or_ids, int) else list(n_or_ids)
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        forces = np.asarray(forces, dtype=np.float64)
        if forces.ndim == 1:
            forces = forces.reshape(-1, 1)
        if dimension_names is None:
            dimension_names = [f"force{q}" if forces.shape[1] > 1 else "force" for q in range(forces.shape[1])]
        return cls(tuple(ids), pairs[:, 0], pairs[:, 1], k, d, forces, tuple(dimension_names))

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    @property
    def n_dims(self) -> int:
        return int(self.forces.shape[1])

    @property
    def edges(self) -> list[tuple[int, int, float, float]]:
        return [(int(i), int(j), float(kk), float(dd)) for i, j, kk, dd in zip(self.src, self.dst, self.k, self.d)]

    def degree(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.src, self.dst]), minlength=self.n_nodes)

    def with_forces(self, forces, dimension_names: Sequence[str] | None = None) -> "PreparedGraph":
        names = self.dimension_names if dimension_names is None else tuple(dimension_names)
        return PreparedGraph(self.node_ids, self.src, self.dst, self.k, self.d, forces, names)

    def subgraph(self, nodes: np.ndarray, edges: np.ndarray, forces) -> "PreparedGraph":
        """Induced piece on parent node indices ``nodes`` using parent edges ``edges``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        local = {int(v): i for i, v in enumerate(nodes)}
        src = np.array([local[int(v)] for v in self.src[edges]], dtype=np.int64)
        dst = np.array([local[int(v)] for v in self.dst[edges]], dtype=np.int64)
        return PreparedGraph(
            tuple(self.node_ids[v] for v in nodes),
            src,
            dst,
            self.k[edges],
            self.d[edges],
            forces,
            self.dimension_names,
        )


@dataclass(frozen=True)
class AttributeColumn:
    """One node attribute; ``values`` is float (NaN = missing) or object (None = missing)."""

    name: str
    kind: str  # "continuous" | "categorical"
    values: np.ndarray

    @property
    def missing(self) -> np.ndarray:
        if self.kind == "continuous":
            return np.isnan(self.values)
        return np.array([v is None for v in self.values], dtype=bool)

    @property
    def levels(self) -> list[str]:
        if self.kind != "categorical":
            raise GraphError(f"column {self.name!r} is not categorical")
        return sorted({v for v in self.values if v is not None})


@dataclass(frozen=True)
class NodeAttributeTable:
    node_ids: tuple[str, ...]
    columns: Mapping[str, AttributeColumn] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        if len(set(self.node_ids)) != len(self.node_ids):
            raise GraphError("node ids must be unique in the attribute table")
        for col in self.columns.values():
            if len(col.values) != len(self.node_ids):
                raise GraphError(f"column {col.name!r} has {len(col.values)} values for {len(self.node_ids)} nodes")

    @classmethod
    def from_dict(cls, node_ids: Sequence[str], data: Mapping[str, Sequence]) -> "NodeAttributeTable":
        """Infer column kinds: all non-missing values numeric -> continuous."""
        cols = {}
        for name, raw in data.items():
            vals = list(raw)
            present = [v for v in vals if not _is_missing(v)]
            if present and all(isinstance(v, (int, float, np.integer, np.floating)) for v in present):
                arr = np.array([math.nan if _is_missing(v) else float(v) for v in vals], dtype=np.float64)
                cols[name] = AttributeColumn(name, "continuous", arr)
            else:
                arr = np.empty(len(vals), dtype=object)
                arr[:] = [None if _is_missing(v) else str(v) for v in vals]
                cols[name] = AttributeColumn(name, "categorical", arr)
        return cls(tuple(str(i) for i in node_ids), cols)

    def __getitem__(self, name: str) -> AttributeColumn:
        try:
            return self.columns[name]
        except KeyError:
            raise GraphError(f"unknown attribute {name!r}") from None


@dataclass(frozen=True)
class EdgeTable:
    """Raw edge list keyed by node id, plus numeric edge columns (``k``, ``d``, ...)."""

    sources: tuple[str, ...]
    targets: tuple[str, ...]
    columns: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.sources)


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v)) or v == ""


def balance_continuous(values, missing=None) -> np.ndarray:
    """Subtract the mean of the present values; missing entries get exactly 0.

    >>> balance_continuous([3.0, 1.0, 2.0]).tolist()
    [1.0, -1.0, 0.0]
    """
    vals = np.asarray(values, dtype=np.float64).reshape(-1)
    if missing is None:
        missing = np.isnan(vals)
    missing = np.asarray(missing, dtype=bool).reshape(-1)
    present = ~missing
    if not present.any():
        raise GraphError("empty attribute: every value is missing")
    out = np.zeros_like(vals)
    out[present] = vals[present] - vals[present].mean()
    return out


def expand_categorical(levels: Sequence) -> list[tuple[str, np.ndarray]]:
    """One balanced dimension per level, levels in sorted order.

    Members of level g carry ``1 - |g|/|V|``, non-members ``-|g|/|V|``;
    missing labels (None) carry 0 in every dimension and are left out of |V|.
    """
    labels = [None if _is_missing(v) else str(v) for v in levels]
    missing = np.array([v is None for v in labels], dtype=bool)
    names = sorted({v for v in labels if v is not None})
    if len(names) < 2:
        raise GraphError("degenerate categorical: fewer than two levels")
    out = []
    for name in names:
        indicator = np.array([1.0 if v == name else 0.0 for v in labels])
        out.append((name, balance_continuous(indicator, missing)))
    return out


def build_prepared_graph(
    edges: EdgeTable,
    attributes: NodeAttributeTable,
    force: Union[str, Sequence[str]],
    k: Union[float, str] = 1000.0,
    d: Union[float, str] = 1.0,
    expand_binary: bool = False,
) -> PreparedGraph:
    """Assemble a :class:`PreparedGraph` from raw tables.

    ``force`` names one or more attribute columns. ``k`` and ``d`` are either
    constants or names of numeric edge columns. Binary categorical columns give
    a single dimension (the first level in sorted order) unless
    ``expand_binary`` is set.
    """
    index = {nid: i for i, nid in enumerate(attributes.node_ids)}
    src = np.empty(len(edges), dtype=np.int64)
    dst = np.empty(len(edges), dtype=np.int64)
    for e, (a, b) in enumerate(zip(edges.sources, edges.targets)):
        for name in (a, b):
            if name not in index:
                raise GraphError(f"edge {e} ({a!r}-{b!r}) references unknown node {name!r}")
        src[e], dst[e] = index[a], index[b]

    def edge_values(spec, label):
        if isinstance(spec, str):
            if spec not in edges.columns:
                raise GraphError(f"edge column {spec!r} for {label} not found")
            return np.asarray(edges.columns[spec], dtype=np.float64)
        return float(spec)

    force_cols = [force] if isinstance(force, str) else list(force)
    dims, names = [], []
    for col_name in force_cols:
        col = attributes[col_name]
        if col.kind == "continuous":
            try:
                dims.append(balance_continuous(col.values, col.missing))
            except GraphError as exc:
                raise GraphError(f"attribute {col_name!r}: {exc}") from None
            names.append(col_name)
        else:
            try:
                expanded = expand_categorical(col.values)
            except GraphError as exc:
                raise GraphError(f"attribute {col_name!r}: {exc}") from None
            if len(expanded) == 2 and not expand_binary:
                expanded = expanded[:1]
            for level, vec in expanded:
                dims.append(vec)
                names.append(f"{col_name}={level}")
    forces = np.column_stack(dims) if dims else np.zeros((len(index), 0))
    return PreparedGraph(
        attributes.node_ids,
        src,
        dst,
        edge_values(k, "k"),
        edge_values(d, "d"),
        forces,
        tuple(names),
    )


def component_labels(graph: PreparedGraph) -> tuple[int, np.ndarray]:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    n = graph.n_nodes
    adj = coo_matrix((np.ones(graph.n_edges), (graph.src, graph.dst)), shape=(n, n))
    return connected_components(adj, directed=False)


def rebalance_components(graph: PreparedGraph) -> PreparedGraph:
    """Mean-centre forces within each connected component separately."""
    n_comp, labels = component_labels(graph)
    forces = np.array(graph.forces)
    for c in range(n_comp):
        members = labels == c
        forces[members] -= forces[members].mean(axis=0)
    return graph.with_forces(forces)
