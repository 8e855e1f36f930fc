import numpy as np
import pytest

from oracles import energy, gradient, two_node_root
from conftest import EXAMPLE_ELEVATION
from setse.engine import (
    DivergenceError,
    SolverParams,
    default_tolerance,
    edge_geometry,
    initial_state,
    integrate,
    net_force,
    run_setse,
    static_force,
    step,
    strain,
    vertical_tension,
)
from setse.graph import GraphError, PreparedGraph
from setse.synthetic import random_prepared_graph


def test_unstretched_spring():
    g = PreparedGraph.from_edges(2, [(0, 1)], np.zeros((2, 3)))
    dz, H, t = edge_geometry(np.ones((2, 3)), g)
    assert H.tolist() == [1.0] and t.tolist() == [0.0]


def test_example_edge_state():
    g = PreparedGraph.from_edges(2, [(0, 1)], [0.0, 0.0])
    dz, H, t = edge_geometry(np.array([[0.1265], [0.0]]), g)
    assert H[0] == pytest.approx(1.00797, abs=1e-5)
    assert t[0] == pytest.approx(7.97, abs=0.01)
    assert (t * dz[:, 0] / H)[0] == pytest.approx(1.0, abs=2e-3)


def test_pythagorean_triple():
    g = PreparedGraph.from_edges(2, [(0, 1)], np.zeros((2, 2)), d=12.0)
    dz, H, t = edge_geometry(np.array([[3.0, 4.0], [0.0, 0.0]]), g)
    assert H[0] == 13.0
    np.testing.assert_allclose(dz[0] / H[0], [3 / 13, 4 / 13])


def test_strain_examples():
    assert strain(1.1, 1.0) == pytest.approx(0.1)
    assert strain(2.0, 2.0) == 0.0
    assert 1000 * 1.0 * strain(1.00797, 1.0) == pytest.approx(7.97)


def test_net_force_at_rest_is_attribute_force(example_graph):
    s = initial_state(example_graph)
    np.testing.assert_array_equal(net_force(s, example_graph, SolverParams()), example_graph.forces)


def test_rounded_equilibrium_has_small_net_force(example_graph):
    z = EXAMPLE_ELEVATION.reshape(-1, 1)
    s = initial_state(example_graph)
    s.z, s.v = z, np.zeros_like(z)
    # Four-decimal rounding leaves about 1.3e-3 on B; the exact solution does far better.
    assert np.abs(net_force(s, example_graph, SolverParams())).max() < 2e-3
    emb = run_setse(example_graph, SolverParams(tolerance=1e-12))
    assert np.abs(static_force(emb.node_elevation, example_graph)).max() < 1e-11


def test_isolated_zero_force_node_stays_put():
    g = PreparedGraph.from_edges(3, [(0, 1)], [1.0, -1.0, 0.0])
    emb = run_setse(g)
    assert emb.converged
    assert emb.node_elevation[2, 0] == 0.0


def test_one_step_from_rest(two_node_graph):
    p = SolverParams(dt=0.1, mass=2.0, drag=3.0)
    s = step(initial_state(two_node_graph, mass=p.mass), two_node_graph, p)
    np.testing.assert_allclose(s.z[:, 0], [0.5 * 0.5 * 0.01, -0.5 * 0.5 * 0.01])
    assert s.t == pytest.approx(0.1) and s.iteration == 1


def test_zero_force_graph_is_fixed_point():
    g = PreparedGraph.from_edges(3, [(0, 1), (1, 2)], [0.0, 0.0, 0.0])
    s = step(initial_state(g), g, SolverParams())
    assert not s.z.any() and not s.v.any() and not s.a.any()
    emb = run_setse(g)
    assert emb.converged and emb.iterations == 0
    assert not emb.node_elevation.any() and not emb.edge_tension.any()


def test_kernel_matches_reference_step(example_graph):
    p = SolverParams(dt=0.02, mass=1.5, drag=4.0)
    s = initial_state(example_graph, mass=p.mass)
    for _ in range(300):
        s = step(s, example_graph, p)
    res = integrate(example_graph, dt=p.dt, mass=p.mass, drag=p.drag, tolerance=-1.0, max_iterations=300)
    assert res.iterations == 300
    np.testing.assert_allclose(res.z, s.z, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(res.v, s.v, rtol=1e-12, atol=1e-15)


def test_two_node_root(two_node_graph):
    emb = run_setse(two_node_graph, SolverParams(tolerance=1e-12))
    z_star = two_node_root()
    np.testing.assert_allclose(emb.node_elevation[:, 0], [z_star, -z_star], atol=1e-9)


def test_stop_rule_and_stored_eta(example_graph):
    emb = run_setse(example_graph)
    assert emb.converged
    assert emb.tolerance == default_tolerance(example_graph) == pytest.approx(2e-3)
    assert emb.eta <= emb.tolerance
    recomputed = np.abs(static_force(emb.node_elevation, example_graph)).sum()
    assert recomputed == pytest.approx(emb.eta, rel=1e-9)


def test_example_elevations(example_graph):
    emb = run_setse(example_graph)
    z = emb.node_elevation[:, 0] - emb.node_elevation[:, 0].mean()
    np.testing.assert_allclose(z, EXAMPLE_ELEVATION, atol=5e-4)


def test_smooth_regime_is_monotone(example_graph):
    emb = run_setse(example_graph, SolverParams(dt=0.02, drag=16.0, tolerance=1e-9), trace_every=1)
    trace = emb.eta_trace
    assert trace.size > 10
    assert np.all(np.diff(trace) <= 1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_static_force_is_negative_energy_gradient(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    m = int(rng.integers(n - 1, n * (n - 1) // 2 + 1))
    g = random_prepared_graph(n, m, seed=seed, n_dims=int(rng.integers(1, 4)))
    z = rng.normal(0, 0.3, g.forces.shape)
    edges = list(zip(g.src.tolist(), g.dst.tolist()))
    h = 1e-6
    num = np.zeros_like(z)
    for idx in np.ndindex(z.shape):
        zp, zm = z.copy(), z.copy()
        zp[idx] += h
        zm[idx] -= h
        num[idx] = (energy(zp, edges, g.forces, 1000.0, 1.0) - energy(zm, edges, g.forces, 1000.0, 1.0)) / (2 * h)
    fs = static_force(z, g)
    assert np.linalg.norm(fs + num) <= 1e-4 * np.linalg.norm(num)
    np.testing.assert_allclose(-fs, gradient(z, edges, g.forces, 1000.0, 1.0), rtol=1e-10, atol=1e-9)


def test_internal_forces_cancel():
    g = random_prepared_graph(30, 80, seed=4, n_dims=3)
    z = np.random.default_rng(0).normal(size=g.forces.shape)
    f = vertical_tension(z, g)
    scale = np.abs(f).sum(axis=0)
    assert np.all(np.abs(f.sum(axis=0)) <= 1e-9 * scale)


def test_parameter_invariance():
    g = random_prepared_graph(25, 60, seed=2)
    a = run_setse(g, SolverParams(dt=0.02, mass=1.0, drag=8.0))
    b = run_setse(g, SolverParams(dt=0.01, mass=3.0, drag=20.0))
    assert a.converged and b.converged
    za = a.node_elevation - a.node_elevation.mean(axis=0)
    zb = b.node_elevation - b.node_elevation.mean(axis=0)
    assert np.abs(za - zb).max() <= 1e-3


def test_tension_strain_correlation():
    emb = run_setse(random_prepared_graph(40, 100, seed=6))
    r = np.corrcoef(emb.edge_tension, emb.edge_strain)[0, 1]
    assert abs(r - 1.0) < 1e-12


def test_sign_symmetry():
    g = random_prepared_graph(20, 45, seed=8, n_dims=2)
    a = run_setse(g)
    b = run_setse(g.with_forces(-g.forces))
    np.testing.assert_allclose(b.node_elevation, -a.node_elevation, atol=1e-12)
    np.testing.assert_allclose(b.edge_tension, a.edge_tension, atol=1e-12)


def test_deterministic():
    g = random_prepared_graph(30, 70, seed=1)
    a, b = run_setse(g), run_setse(g)
    assert np.array_equal(a.node_elevation, b.node_elevation)


def test_divergence_raises_with_iteration(example_graph):
    with pytest.raises(DivergenceError) as info:
        run_setse(example_graph, SolverParams(dt=1.0, drag=0.0))
    assert info.value.iteration > 0


def test_reference_step_divergence(two_node_graph):
    s = initial_state(two_node_graph)
    s.a = np.array([[np.inf], [0.0]])
    with pytest.raises(DivergenceError) as info:
        step(s, two_node_graph, SolverParams())
    assert info.value.iteration == 1


def test_max_iterations_is_not_an_error(example_graph):
    emb = run_setse(example_graph, SolverParams(max_iterations=5))
    assert not emb.converged and emb.iterations == 5


def test_unbalanced_component_rejected():
    g = PreparedGraph.from_edges(4, [(0, 1), (2, 3)], [1.0, 0.0, 0.0, -1.0])
    with pytest.raises(GraphError, match="component"):
        run_setse(g)


def test_normalize_divides_by_d():
    g = PreparedGraph.from_edges(2, [(0, 1)], [1.0, -1.0], d=2.0)
    raw = run_setse(g)
    norm = run_setse(g, normalize=True)
    np.testing.assert_allclose(norm.node_elevation, raw.node_elevation / 2.0)


def test_params_validation():
    for bad in ({"dt": 0}, {"mass": -1}, {"drag": -1}, {"max_iterations": 0}, {"tolerance": -1}):
        with pytest.raises(ValueError):
            SolverParams(**bad)
