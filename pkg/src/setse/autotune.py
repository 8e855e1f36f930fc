"""Automatic choice of drag and time step.

Short probe runs scan drag over whole decades between ``drag_min`` and
``drag_max``. If no probe lowers the static force below its starting value
the time step is shrunk and the scan repeated. Otherwise the best decade is
refined by halving a bracket on the log-drag exponent, and the best setting
is run for ``final_iterations``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    ABORTED,
    CONVERGED,
    DIVERGED,
    Embeddings,
    build_embeddings,
    check_component_balance,
    default_tolerance,
    integrate,
)
from .graph import PreparedGraph

__all__ = ["AutoTuneParams", "ProbeRecord", "TuneTrace", "UntunableError", "probe", "auto_setse"]


@dataclass(frozen=True)
class AutoTuneParams:
    drag_min: float = 0.01
    drag_max: float = 100.0
    timestep_shrinker: float = 0.5
    hyper_iterations: int = 2000
    final_iterations: int = 20_000
    p_max: int = 30
    phi: float = 0.02
    tolerance: float | None = None
    dt: float = 0.1
    mass: float = 1.0
    check_every: int = 50
    noise_ratio: float = 1.2
    max_timestep_shrinks: int = 8

    def __post_init__(self) -> None:
        if not 0 < self.drag_min < self.drag_max:
            raise ValueError("need 0 < drag_min < drag_max")
        if not 0 < self.timestep_shrinker < 1:
            raise ValueError("timestep_shrinker must lie in (0, 1)")
        if not 0 < self.hyper_iterations < self.final_iterations:
            raise ValueError("need 0 < hyper_iterations < final_iterations")
        if self.p_max < 1:
            raise ValueError("p_max must be at least 1")
        if not (self.dt > 0 and self.mass > 0):
            raise ValueError("dt and mass must be positive")


@dataclass(frozen=True)
class ProbeRecord:
    drag: float
    dt: float
    eta: float
    terminated_early: bool
    diverged: bool = False
    converged: bool = False

    @property
    def usable(self) -> bool:
        return not (self.terminated_early or self.diverged)


@dataclass
class TuneTrace:
    probes: list[ProbeRecord] = field(default_factory=list)
    chosen_drag: float = math.nan
    chosen_dt: float = math.nan
    final_dt: float = math.nan

    @property
    def total_probes(self) -> int:
        return len(self.probes)

    def best(self) -> ProbeRecord | None:
        usable = [p for p in self.probes if p.usable]
        return min(usable, key=lambda p: p.eta) if usable else None


class UntunableError(RuntimeError):
    def __init__(self, message: str, trace: TuneTrace):
        super().__init__(message)
        self.trace = trace


def probe(
    graph: PreparedGraph,
    drag: float,
    dt: float,
    budget: int,
    *,
    mass: float = 1.0,
    tolerance: float | None = None,
    check_every: int = 50,
):
    """Short run; flags early termination when eta exceeds eta0 at a check
    or the run blows up (``diverged`` tells the two apart).

    Returns ``(ProbeRecord, IntegrationResult)``.
    """
    tol = default_tolerance(graph) if tolerance is None else tolerance
    res = integrate(
        graph,
        dt=dt,
        mass=mass,
        drag=drag,
        tolerance=tol,
        max_iterations=budget,
        check_every=check_every,
        abort_ratio=1.0,
        trace_every=100,
    )
    rec = ProbeRecord(
        drag=float(drag),
        dt=float(dt),
        eta=res.eta if res.status != DIVERGED else math.inf,
        terminated_early=res.status in (ABORTED, DIVERGED),
        diverged=res.status == DIVERGED,
        converged=res.status == CONVERGED,
    )
    return rec, res


def _finish(graph, res, tol, trace, mode, start, iterations=None) -> Embeddings:
    emb = build_embeddings(
        graph,
        res.z,
        tolerance=tol,
        iterations=res.iterations if iterations is None else iterations,
        params={"mode": mode, "dt": trace.chosen_dt, "final_dt": trace.final_dt, "mass": None, "drag": trace.chosen_drag},
        eta_trace=res.trace,
        wall_time=time.perf_counter() - start,
        converged=res.status == CONVERGED,
    )
    emb.eta = res.eta
    return emb


def auto_setse(graph: PreparedGraph, params: AutoTuneParams | None = None) -> tuple[Embeddings, TuneTrace]:
    params = params or AutoTuneParams()
    check_component_balance(graph)
    start = time.perf_counter()
    tol = default_tolerance(graph) if params.tolerance is None else params.tolerance
    eta0 = float(np.abs(graph.forces).sum())
    trace = TuneTrace()

    def run_probe(drag, dt):
        rec, res = probe(
            graph, drag, dt, params.hyper_iterations,
            mass=params.mass, tolerance=tol, check_every=params.check_every,
        )
        trace.probes.append(rec)
        return rec, res

    def done(rec, res):
        trace.chosen_drag, trace.chosen_dt, trace.final_dt = rec.drag, rec.dt, res.dt
        emb = _finish(graph, res, tol, trace, "auto", start)
        emb.params["mass"] = params.mass
        return emb, trace

    lo, hi = math.log10(params.drag_min), math.log10(params.drag_max)
    exponents = list(np.arange(lo, hi + 1e-9, 1.0))
    if exponents[-1] < hi - 1e-9:
        exponents.append(hi)

    if eta0 <= tol:
        rec, res = run_probe(10 ** exponents[0], params.dt)
        return done(rec, res)

    # Decade scan, shrinking dt until some probe improves on eta0.
    dt = params.dt
    scanned: dict[float, ProbeRecord] = {}
    shrinks = 0
    while True:
        scanned = {}
        for s in exponents:
            if len(trace.probes) >= params.p_max:
                break
            rec, res = run_probe(10**s, dt)
            if rec.converged:
                return done(rec, res)
            scanned[s] = rec
        improving = {s: r for s, r in scanned.items() if r.usable and r.eta < eta0}
        if improving:
            break
        if len(trace.probes) >= params.p_max or shrinks >= params.max_timestep_shrinks:
            raise UntunableError(
                f"untunable graph: no drag in [{params.drag_min}, {params.drag_max}] improved on the "
                f"initial static force after {len(trace.probes)} probes (last dt={dt:g})",
                trace,
            )
        dt *= params.timestep_shrinker
        shrinks += 1

    # Bracket refinement around the best exponent.
    best_s = min(improving, key=lambda s: improving[s].eta)
    best_eta = improving[best_s].eta
    step = 0.5
    rounds = 0
    while len(trace.probes) < params.p_max:
        prev = best_eta
        for s in (best_s - step, best_s + step):
            if not lo <= s <= hi or any(abs(s - t) < 1e-12 for t in scanned):
                continue
            if len(trace.probes) >= params.p_max:
                break
            rec, res = run_probe(10**s, dt)
            if rec.converged:
                return done(rec, res)
            scanned[s] = rec
        usable = {s: r for s, r in scanned.items() if r.usable}
        best_s = min(usable, key=lambda s: usable[s].eta)
        best_eta = usable[best_s].eta
        step /= 2
        rounds += 1
        if rounds >= 3 and (prev - best_eta) / best_eta < params.phi:
            break

    best = trace.best()
    assert best is not None
    trace.chosen_drag, trace.chosen_dt = best.drag, best.dt

    # Long run; dt halves whenever eta grows by > noise_ratio between checks.
    run_dt = best.dt
    for _ in range(params.max_timestep_shrinks + 1):
        res = integrate(
            graph,
            dt=run_dt,
            mass=params.mass,
            drag=best.drag,
            tolerance=tol,
            max_iterations=params.final_iterations,
            check_every=params.check_every,
            noise_ratio=params.noise_ratio,
        )
        if res.status != DIVERGED:
            break
        run_dt *= params.timestep_shrinker
    else:
        raise UntunableError(f"final run diverged for drag={best.drag:g} down to dt={run_dt:g}", trace)
    trace.final_dt = res.dt
    emb = _finish(graph, res, tol, trace, "auto", start)
    emb.params["mass"] = params.mass
    return emb, trace
