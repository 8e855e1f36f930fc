"""Spring-network equilibrium embeddings of attributed graphs."""

__version__ = "0.1.0"

from .autotune import AutoTuneParams, TuneTrace, UntunableError, auto_setse
from .blocks import BlockCutTree, decompose, setse_biconnected
from .engine import DivergenceError, Embeddings, SolverParams, run_setse
from .graph import (
    GraphError,
    NodeAttributeTable,
    PreparedGraph,
    balance_continuous,
    build_prepared_graph,
    expand_categorical,
)
from .pipeline import embed_graph
from .summary import aggregate_network, node_summary

__all__ = [
    "AutoTuneParams",
    "BlockCutTree",
    "DivergenceError",
    "Embeddings",
    "GraphError",
    "NodeAttributeTable",
    "PreparedGraph",
    "SolverParams",
    "TuneTrace",
    "UntunableError",
    "aggregate_network",
    "auto_setse",
    "balance_continuous",
    "build_prepared_graph",
    "decompose",
    "embed_graph",
    "expand_categorical",
    "node_summary",
    "run_setse",
    "setse_biconnected",
]
