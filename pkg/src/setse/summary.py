"""Node- and network-level summaries of an embedding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import Embeddings

__all__ = ["NodeSummary", "NetworkSummary", "node_tension", "node_summary", "aggregate_network"]


@dataclass(frozen=True)
class NodeSummary:
    node_ids: tuple[str, ...]
    elevation: np.ndarray  # (n_nodes, n_dims)
    node_tension: np.ndarray  # (n_nodes,)
    n_edges: int = 0

    def __len__(self) -> int:
        return len(self.node_ids)


@dataclass(frozen=True)
class NetworkSummary:
    mean_abs_elevation: np.ndarray  # per dimension
    mean_node_tension: float
    n_nodes: int
    n_edges: int

    def as_point(self, dim: int = 0) -> tuple[float, float]:
        return float(self.mean_abs_elevation[dim]), self.mean_node_tension


def node_tension(emb: Embeddings) -> np.ndarray:
    """Mean absolute tension over each node's incident edges; 0 for isolated nodes."""
    n = emb.n_nodes
    t = np.abs(emb.edge_tension)
    total = np.bincount(emb.src, weights=t, minlength=n) + np.bincount(emb.dst, weights=t, minlength=n)
    degree = np.bincount(emb.src, minlength=n) + np.bincount(emb.dst, minlength=n)
    out = np.zeros(n)
    np.divide(total, degree, out=out, where=degree > 0)
    return out


def node_summary(emb: Embeddings) -> NodeSummary:
    return NodeSummary(emb.node_ids, np.array(emb.node_elevation), node_tension(emb), int(emb.src.size))


def aggregate_network(
    nodes: NodeSummary,
    reduce: Callable[[np.ndarray], float] | None = None,
) -> NetworkSummary:
    """Mean |elevation| per dimension and mean node tension.

    ``reduce`` swaps the mean for another reduction over the per-node values.
    """
    if len(nodes) == 0:
        raise ValueError("cannot aggregate an empty node set")
    if reduce is None:
        elev = np.abs(nodes.elevation).mean(axis=0)
        tens = float(nodes.node_tension.mean())
    else:
        elev = np.array([reduce(np.abs(nodes.elevation[:, q])) for q in range(nodes.elevation.shape[1])])
        tens = float(reduce(nodes.node_tension))
    return NetworkSummary(elev, tens, len(nodes), nodes.n_edges)
