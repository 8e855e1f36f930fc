import numpy as np
import pytest

from conftest import EXAMPLE_ELEVATION
from setse.autotune import AutoTuneParams, UntunableError, auto_setse, probe
from setse.engine import SolverParams, run_setse, static_force
from setse.graph import PreparedGraph
from setse.synthetic import generate_peel, random_forces, random_prepared_graph


@pytest.fixture
def chain():
    # Long path: no probe converges, so the bracket search runs.
    n = 60
    return PreparedGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)], random_forces(n, 1, seed=1))


def test_probe_flags_tiny_drag():
    g = random_prepared_graph(200, 600, seed=0)
    rec, _ = probe(g, 1e-3, 0.02, 2000)
    assert rec.terminated_early and not rec.diverged and not rec.usable
    rec, _ = probe(g, 1e-3, 0.1, 2000)
    assert rec.terminated_early and rec.diverged and rec.eta == np.inf


def test_probe_zero_force():
    g = PreparedGraph.from_edges(3, [(0, 1), (1, 2)], [0.0, 0.0, 0.0])
    rec, res = probe(g, 0.01, 0.1, 2000)
    assert rec.eta == 0.0 and rec.converged and res.iterations == 0


def test_probe_smooth_regime_improves(example_graph):
    rec, _ = probe(example_graph, 16.0, 0.02, 50)
    assert rec.usable and rec.eta < np.abs(example_graph.forces).sum()


def test_zero_force_returns_after_one_probe():
    g = PreparedGraph.from_edges(3, [(0, 1), (1, 2)], [0.0, 0.0, 0.0])
    emb, trace = auto_setse(g)
    assert trace.total_probes == 1 and emb.converged and emb.iterations == 0


def test_example_matches_fixed_run(example_graph):
    tight = 1e-9
    emb, _ = auto_setse(example_graph, AutoTuneParams(tolerance=tight))
    ref = run_setse(example_graph, SolverParams(dt=0.02, drag=16.0, tolerance=tight))
    za = emb.node_elevation - emb.node_elevation.mean(axis=0)
    zr = ref.node_elevation - ref.node_elevation.mean(axis=0)
    assert np.abs(za - zr).max() <= 1e-4
    np.testing.assert_allclose(za[:, 0], EXAMPLE_ELEVATION, atol=5e-4)


def test_quintet_type_a_converges():
    g = generate_peel("A", seed=0).prepared()
    emb, _ = auto_setse(g)
    assert emb.converged and emb.eta <= emb.tolerance


def test_search_respects_budget_and_picks_best(chain):
    params = AutoTuneParams()
    emb, trace = auto_setse(chain, params)
    assert trace.total_probes <= params.p_max
    best = trace.best()
    assert (trace.chosen_drag, trace.chosen_dt) == (best.drag, best.dt)
    assert all(p.eta >= best.eta for p in trace.probes if p.usable)
    # Refinement probes fall off the decade grid.
    exps = [np.log10(p.drag) for p in trace.probes]
    assert any(abs(x - round(x)) > 1e-9 for x in exps)
    assert emb.params["drag"] == best.drag


def test_small_budget(chain):
    emb, trace = auto_setse(chain, AutoTuneParams(p_max=12))
    assert trace.total_probes <= 12


def test_timestep_shrinks_until_a_probe_improves():
    g = random_prepared_graph(200, 600, seed=0)
    emb, trace = auto_setse(g)
    assert emb.converged
    dts = sorted({p.dt for p in trace.probes}, reverse=True)
    assert dts[0] == 0.1 and len(dts) >= 2
    assert all(b == pytest.approx(a * 0.5) for a, b in zip(dts, dts[1:]))


def test_untunable_graph_carries_trace(example_graph):
    with pytest.raises(UntunableError, match="untunable graph") as info:
        auto_setse(example_graph, AutoTuneParams(dt=10.0, max_timestep_shrinks=0))
    assert info.value.trace.total_probes == 5


def test_deterministic(chain):
    a, ta = auto_setse(chain)
    b, tb = auto_setse(chain)
    assert ta.probes == tb.probes
    assert np.array_equal(a.node_elevation, b.node_elevation)


def test_stored_eta_matches_output():
    g = random_prepared_graph(80, 200, seed=5, n_dims=2)
    emb, _ = auto_setse(g)
    recomputed = np.abs(static_force(emb.node_elevation, g)).sum()
    assert recomputed == pytest.approx(emb.eta, rel=1e-9)


def test_params_validation():
    with pytest.raises(ValueError):
        AutoTuneParams(drag_min=10, drag_max=1)
    with pytest.raises(ValueError):
        AutoTuneParams(timestep_shrinker=1.5)
    with pytest.raises(ValueError):
        AutoTuneParams(hyper_iterations=50_000)
    with pytest.raises(ValueError):
        AutoTuneParams(p_max=0)
