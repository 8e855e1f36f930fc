"""One entry point for the three solver modes."""

from __future__ import annotations

from .autotune import AutoTuneParams, auto_setse
from .blocks import setse_biconnected
from .engine import Embeddings, SolverParams, run_setse
from .graph import PreparedGraph

MODES = ("fixed", "auto", "biconnected")


def embed_graph(
    graph: PreparedGraph,
    mode: str = "auto",
    solver: SolverParams | None = None,
    tune: AutoTuneParams | None = None,
    *,
    workers: int | None = None,
    center: bool = True,
) -> Embeddings:
    """Embed with ``fixed``, ``auto`` or ``biconnected``.

    With ``center`` the elevations are mean-centred per dimension so the
    three modes are directly comparable (the block-wise mode always is).
    """
    if mode == "fixed":
        emb = run_setse(graph, solver)
    elif mode == "auto":
        emb, _ = auto_setse(graph, tune)
    elif mode == "biconnected":
        emb = setse_biconnected(graph, tune, workers=workers)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    if center and graph.n_nodes:
        emb.node_elevation = emb.node_elevation - emb.node_elevation.mean(axis=0)
    return emb
