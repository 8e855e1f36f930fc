"""Damped spring dynamics that relax a :class:`PreparedGraph` to equilibrium.

Nodes are beads that move only along the force dimensions. Each edge is a
spring whose length is the hypotenuse of the elevation difference and the
rest distance ``d``; its tension is ``k * (H - d)``. The loop follows the
update order:

    f_vten = scatter of k * dz * (1 - d / H) over edges   (at current z)
    z     += v * dt + a * dt**2 / 2
    v     += a * dt
    f_static = F - f_vten
    a      = (f_static - c * v) / m

and stops once ``eta = sum |f_static|`` falls to the tolerance.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numba import njit

from .graph import BALANCE_RTOL, GraphError, PreparedGraph, component_labels

__all__ = [
    "DivergenceError",
    "SolverParams",
    "DynamicsState",
    "Embeddings",
    "edge_geometry",
    "vertical_tension",
    "net_force",
    "static_force",
    "strain",
    "initial_state",
    "step",
    "run_setse",
    "integrate",
    "build_embeddings",
    "check_component_balance",
    "default_tolerance",
]

# Kernel status codes.
CONVERGED = 0
MAX_ITER = 1
DIVERGED = 2
ABORTED = 3

DIVERGENCE_RATIO = 1e6


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"dynamics diverged at iteration {iteration}")


@dataclass(frozen=True)
class SolverParams:
    """Integration settings. ``tolerance=None`` means ``sum|F| / 1000``."""

    dt: float = 0.02
    mass: float = 1.0
    drag: float = 8.0
    max_iterations: int = 100_000
    tolerance: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.drag >= 0:
            raise ValueError("drag must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tolerance is not None and not self.tolerance >= 0:
            raise ValueError("tolerance must be non-negative")


@dataclass
class DynamicsState:
    z: np.ndarray
    v: np.ndarray
    a: np.ndarray
    f_static: np.ndarray
    t: float = 0.0
    iteration: int = 0

    @property
    def eta(self) -> float:
        return float(np.abs(self.f_static).sum())


@dataclass
class Embeddings:
    """Converged (or final) solution of one run.

    ``node_elevation`` is ``(n_nodes, n_dims)``; edge arrays follow the
    graph's edge order. ``edge_vertical_tension`` holds the per-dimension
    component of each edge's tension, signed from ``src`` towards ``dst``.
    """

    node_ids: tuple[str, ...]
    dimension_names: tuple[str, ...]
    src: np.ndarray
    dst: np.ndarray
    node_elevation: np.ndarray
    edge_tension: np.ndarray
    edge_strain: np.ndarray
    edge_vertical_tension: np.ndarray
    node_static_force: np.ndarray
    converged: bool
    eta: float
    tolerance: float
    iterations: int
    params: dict = field(default_factory=dict)
    eta_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    wall_time: float = 0.0

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)


def default_tolerance(graph: PreparedGraph) -> float:
    return float(np.abs(graph.forces).sum()) / 1e3


def check_component_balance(graph: PreparedGraph) -> None:
    """Each connected component must have zero net force, or no equilibrium exists."""
    n_comp, labels = component_labels(graph)
    if n_comp <= 1:
        return
    scale = np.abs(graph.forces).sum(axis=0)
    for c in range(n_comp):
        net = graph.forces[labels == c].sum(axis=0)
        if np.any(np.abs(net) > BALANCE_RTOL * np.maximum(scale, 1e-300)):
            raise GraphError(
                f"component {c} has net force {net.tolist()}; no equilibrium exists "
                "(use rebalance_components to balance each component)"
            )


def strain(H, d):
    """Mechanical strain ``(H - d) / d``."""
    return (np.asarray(H, dtype=np.float64) - d) / d


def edge_geometry(z: np.ndarray, graph: PreparedGraph):
    """Per-edge elevation difference ``z[src] - z[dst]``, length ``H`` and tension."""
    z = np.asarray(z, dtype=np.float64).reshape(graph.n_nodes, -1)
    dz = z[graph.src] - z[graph.dst]
    H = np.sqrt(np.einsum("ij,ij->i", dz, dz) + graph.d**2)
    tension = graph.k * (H - graph.d)
    return dz, H, tension


def vertical_tension(z: np.ndarray, graph: PreparedGraph) -> np.ndarray:
    """Net vertical spring force ``f_vten`` acting against each node's own force."""
    dz, H, _ = edge_geometry(z, graph)
    per_edge = (graph.k * (1.0 - graph.d / H))[:, None] * dz
    n, q = graph.n_nodes, per_edge.shape[1]
    out = np.zeros((n, q))
    np.add.at(out, graph.src, per_edge)
    np.add.at(out, graph.dst, -per_edge)
    return out


def static_force(z: np.ndarray, graph: PreparedGraph) -> np.ndarray:
    return graph.forces - vertical_tension(z, graph)


def net_force(state: DynamicsState, graph: PreparedGraph, params: SolverParams) -> np.ndarray:
    return static_force(state.z, graph) - params.drag * state.v


def initial_state(graph: PreparedGraph, mass: float = 1.0) -> DynamicsState:
    """At rest with unstretched springs, so the starting acceleration is ``F / m``."""
    shape = graph.forces.shape
    return DynamicsState(np.zeros(shape), np.zeros(shape), graph.forces / mass, np.array(graph.forces))


def step(state: DynamicsState, graph: PreparedGraph, params: SolverParams) -> DynamicsState:
    """Advance one time step; returns a new state."""
    dt = params.dt
    f_vten = vertical_tension(state.z, graph)
    z = state.v * dt + 0.5 * state.a * dt * dt + state.z
    v = state.v + state.a * dt
    f_static = graph.forces - f_vten
    f_net = f_static - params.drag * v
    a = f_net / params.mass
    it = state.iteration + 1
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(v)) and np.all(np.isfinite(a))):
        raise DivergenceError(it)
    return DynamicsState(z, v, a, f_static, state.t + dt, it)


@njit(cache=True, nogil=True)
def _kernel(
    src, dst, k, d, force, z, v, a,
    dt, mass, drag, tol, max_iter,
    check_every, abort_ratio, noise_ratio, trace_every, trace,
):  # pragma: no cover - compiled
    n, nq = force.shape
    m = src.size
    fvten = np.zeros((n, nq))
    fstatic = np.empty((n, nq))
    eta0 = 0.0
    for i in range(n):
        for q in range(nq):
            eta0 += abs(force[i, q])
    last_check = eta0
    n_trace = 0
    eta = eta0
    it = 0
    status = MAX_ITER
    while True:
        for i in range(n):
            for q in range(nq):
                fvten[i, q] = 0.0
        for e in range(m):
            i = src[e]
            j = dst[e]
            h2 = d[e] * d[e]
            for q in range(nq):
                diff = z[i, q] - z[j, q]
                h2 += diff * diff
            coef = k[e] * (1.0 - d[e] / math.sqrt(h2))
            for q in range(nq):
                t = coef * (z[i, q] - z[j, q])
                fvten[i, q] += t
                fvten[j, q] -= t
        eta = 0.0
        for i in range(n):
            for q in range(nq):
                fstatic[i, q] = force[i, q] - fvten[i, q]
                eta += abs(fstatic[i, q])
        if trace_every > 0 and it % trace_every == 0 and n_trace < trace.size:
            trace[n_trace] = eta
            n_trace += 1
        if not math.isfinite(eta) or eta > 1e6 * eta0:
            status = DIVERGED
            break
        if eta <= tol:
            status = CONVERGED
            break
        if it >= max_iter:
            break
        if check_every > 0 and it > 0 and it % check_every == 0:
            if abort_ratio > 0.0 and eta > abort_ratio * eta0:
                status = ABORTED
                break
            if noise_ratio > 0.0 and eta > noise_ratio * last_check:
                dt *= 0.5
            last_check = eta
        half_dt2 = 0.5 * dt * dt
        for i in range(n):
            for q in range(nq):
                z[i, q] += v[i, q] * dt + a[i, q] * half_dt2
                v[i, q] += a[i, q] * dt
                a[i, q] = (fstatic[i, q] - drag * v[i, q]) / mass
        it += 1
    return status, it, eta, dt, n_trace, fstatic


@dataclass
class IntegrationResult:
    status: int
    iterations: int
    eta: float
    dt: float
    z: np.ndarray
    v: np.ndarray
    a: np.ndarray
    f_static: np.ndarray
    trace: np.ndarray
    eta0: float


def integrate(
    graph: PreparedGraph,
    *,
    dt: float,
    mass: float,
    drag: float,
    tolerance: float,
    max_iterations: int,
    check_every: int = 50,
    abort_ratio: float = 0.0,
    noise_ratio: float = 0.0,
    trace_every: int = 100,
    state: DynamicsState | None = None,
) -> IntegrationResult:
    """Run the compiled loop from rest (or from ``state``).

    The returned ``z`` is the position at which ``f_static`` and ``eta`` were
    evaluated; a converged run does not take the final position update.
    ``abort_ratio > 0`` stops early (status ABORTED) when eta exceeds
    ``abort_ratio * eta0`` at a check. ``noise_ratio > 0`` halves dt when eta
    grows by more than that factor between checks.
    """
    forces = np.ascontiguousarray(graph.forces)
    if state is None:
        z = np.zeros_like(forces)
        v = np.zeros_like(forces)
        a = forces / mass
    else:
        z, v, a = (np.array(x, dtype=np.float64) for x in (state.z, state.v, state.a))
    trace = np.zeros(max_iterations // trace_every + 2 if trace_every > 0 else 0)
    status, it, eta, dt_out, n_trace, fstatic = _kernel(
        graph.src, graph.dst, graph.k, graph.d, forces, z, v, a,
        float(dt), float(mass), float(drag), float(tolerance), int(max_iterations),
        int(check_every), float(abort_ratio), float(noise_ratio), int(trace_every), trace,
    )
    return IntegrationResult(
        int(status), int(it), float(eta), float(dt_out), z, v, a, fstatic,
        trace[:n_trace].copy(), float(np.abs(forces).sum()),
    )


def build_embeddings(
    graph: PreparedGraph,
    z: np.ndarray,
    *,
    tolerance: float,
    iterations: int,
    params: dict | None = None,
    eta_trace: np.ndarray | None = None,
    wall_time: float = 0.0,
    converged: bool | None = None,
) -> Embeddings:
    """Derive tension, strain and residual force from elevations ``z``."""
    z = np.asarray(z, dtype=np.float64).reshape(graph.n_nodes, graph.n_dims)
    dz, H, tension = edge_geometry(z, graph)
    fs = static_force(z, graph)
    eta = float(np.abs(fs).sum())
    if converged is None:
        converged = eta <= tolerance
    return Embeddings(
        node_ids=graph.node_ids,
        dimension_names=graph.dimension_names,
        src=np.array(graph.src),
        dst=np.array(graph.dst),
        node_elevation=np.array(z),
        edge_tension=tension,
        edge_strain=strain(H, graph.d),
        edge_vertical_tension=tension[:, None] * dz / H[:, None],
        node_static_force=np.abs(fs).sum(axis=1),
        converged=bool(converged),
        eta=eta,
        tolerance=float(tolerance),
        iterations=int(iterations),
        params=dict(params or {}),
        eta_trace=np.zeros(0) if eta_trace is None else np.asarray(eta_trace),
        wall_time=wall_time,
    )


def _normalize(emb: Embeddings, graph: PreparedGraph) -> Embeddings:
    if graph.n_edges == 0:
        return emb
    if not np.all(graph.d == graph.d[0]):
        raise GraphError("elevation normalisation needs a constant edge distance d")
    return replace(emb, node_elevation=emb.node_elevation / graph.d[0])


def run_setse(
    graph: PreparedGraph,
    params: SolverParams | None = None,
    *,
    normalize: bool = False,
    trace_every: int = 100,
) -> Embeddings:
    """Iterate to equilibrium with fixed parameters.

    Raises :class:`DivergenceError` on non-finite values or runaway static
    force. Running out of iterations is not an error: the result has
    ``converged=False``.
    """
    params = params or SolverParams()
    check_component_balance(graph)
    tol = default_tolerance(graph) if params.tolerance is None else params.tolerance
    start = time.perf_counter()
    res = integrate(
        graph,
        dt=params.dt,
        mass=params.mass,
        drag=params.drag,
        tolerance=tol,
        max_iterations=params.max_iterations,
        trace_every=trace_every,
    )
    if res.status == DIVERGED:
        raise DivergenceError(res.iterations, f"dynamics diverged at iteration {res.iterations} (eta={res.eta:.3g})")
    emb = build_embeddings(
        graph,
        res.z,
        tolerance=tol,
        iterations=res.iterations,
        params={"mode": "fixed", "dt": params.dt, "mass": params.mass, "drag": params.drag},
        eta_trace=res.trace,
        wall_time=time.perf_counter() - start,
        converged=res.status == CONVERGED,
    )
    emb.eta = res.eta
    return _normalize(emb, graph) if normalize else emb
