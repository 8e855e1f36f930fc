"""Timing sweeps: per-iteration cost and time to convergence against |E|."""

from __future__ import annotations

import time

import numpy as np

from .autotune import AutoTuneParams, auto_setse
from .engine import integrate
from .graph import PreparedGraph
from .synthetic import random_prepared_graph

__all__ = ["bench_graph", "time_per_iteration", "time_to_convergence", "benchmark", "loglog_slope"]

AVG_DEGREE = 10


def bench_graph(n_edges: int, seed: int = 0, avg_degree: int = AVG_DEGREE) -> PreparedGraph:
    n = max(2, int(round(2 * n_edges / avg_degree)))
    return random_prepared_graph(n, n_edges, seed=seed)


def time_per_iteration(
    graph: PreparedGraph, iterations: int = 200, repeats: int = 3, dt: float = 0.02, drag: float = 8.0
) -> float:
    """Best-of-``repeats`` wall time per iteration, convergence disabled."""
    integrate(graph, dt=dt, mass=1.0, drag=drag, tolerance=-1.0, max_iterations=2, trace_every=0)
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        res = integrate(graph, dt=dt, mass=1.0, drag=drag, tolerance=-1.0, max_iterations=iterations, trace_every=0)
        elapsed = time.perf_counter() - start
        best = min(best, elapsed / max(res.iterations, 1))
    return float(best)


def time_to_convergence(graph: PreparedGraph, params: AutoTuneParams | None = None) -> tuple[float, int, bool]:
    start = time.perf_counter()
    emb, trace = auto_setse(graph, params)
    return time.perf_counter() - start, emb.iterations, emb.converged


def benchmark(
    sizes,
    *,
    seed: int = 0,
    iterations: int = 200,
    repeats: int = 3,
    converge: bool = True,
    params: AutoTuneParams | None = None,
) -> list[dict]:
    rows = []
    for m in sizes:
        g = bench_graph(int(m), seed=seed)
        row = {
            "n_edges": g.n_edges,
            "n_nodes": g.n_nodes,
            "sec_per_iteration": time_per_iteration(g, iterations, repeats),
            "sec_to_converge": float("nan"),
            "iterations_to_converge": -1,
            "converged": False,
        }
        if converge:
            secs, its, ok = time_to_convergence(g, params)
            row.update(sec_to_converge=secs, iterations_to_converge=its, converged=ok)
        rows.append(row)
    return rows


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) on log(x)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])
