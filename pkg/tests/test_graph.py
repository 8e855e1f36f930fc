import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setse.graph import (
    AttributeColumn,
    EdgeTable,
    GraphError,
    NodeAttributeTable,
    PreparedGraph,
    balance_continuous,
    build_prepared_graph,
    component_labels,
    expand_categorical,
    rebalance_components,
)


def test_arrays_are_read_only(example_graph):
    with pytest.raises(ValueError):
        example_graph.forces[0, 0] = 5.0
    with pytest.raises(ValueError):
        example_graph.src[0] = 2


def test_scalar_k_d_broadcast(example_graph):
    assert example_graph.k.tolist() == [1000.0] * 3
    assert example_graph.d.tolist() == [1.0] * 3
    assert example_graph.n_dims == 1
    assert example_graph.degree().tolist() == [1, 3, 1, 1]


@pytest.mark.parametrize(
    "edges, forces, match",
    [
        ([(0, 0)], [0.0, 0.0], "self-loop"),
        ([(0, 1), (1, 0)], [1.0, -1.0], "duplicate edge"),
        ([(0, 5)], [1.0, -1.0], "outside"),
        ([(0, 1)], [1.0, 0.0], "sum to"),
        ([(0, 1)], [1.0, np.nan], "finite"),
    ],
)
def test_rejects_invalid_graphs(edges, forces, match):
    with pytest.raises(GraphError, match=match):
        PreparedGraph.from_edges(2, edges, forces)


def test_rejects_bad_spring_constants():
    with pytest.raises(GraphError, match="stiffness"):
        PreparedGraph.from_edges(2, [(0, 1)], [1.0, -1.0], k=0.0)
    with pytest.raises(GraphError, match="distance"):
        PreparedGraph.from_edges(2, [(0, 1)], [1.0, -1.0], d=-1.0)


def test_isolated_node_needs_zero_force():
    PreparedGraph.from_edges(3, [(0, 1)], [1.0, -1.0, 0.0])
    with pytest.raises(GraphError, match="isolated"):
        PreparedGraph.from_edges(3, [(0, 1)], [1.0, -0.5, -0.5])


def test_literal_example_forces_are_unbalanced():
    with pytest.raises(GraphError, match="sum to"):
        PreparedGraph.from_edges(4, [(0, 1), (1, 2), (1, 3)], [1.0, 0.0, -1.0, -1.0])


def test_balance_continuous_missing_gets_zero():
    out = balance_continuous([1.0, np.nan, 3.0])
    assert out.tolist() == [-1.0, 0.0, 1.0]
    with pytest.raises(GraphError, match="empty attribute"):
        balance_continuous([np.nan, np.nan])


def test_binary_categorical_values():
    (level, vec), _ = expand_categorical(["a"] * 20 + ["b"] * 20)
    assert level == "a"
    assert set(vec[:20]) == {0.5} and set(vec[20:]) == {-0.5}
    (_, vec), _ = expand_categorical(["a"] * 30 + ["b"] * 10)
    assert vec[0] == pytest.approx(0.25) and vec[-1] == pytest.approx(-0.75)


def test_degenerate_categorical():
    with pytest.raises(GraphError, match="degenerate"):
        expand_categorical(["x", "x", None])


def test_categorical_missing_label_is_zero():
    dims = expand_categorical(["x", None, "y", "y"])
    assert [name for name, _ in dims] == ["x", "y"]
    for _, vec in dims:
        assert vec[1] == 0.0
        assert abs(vec.sum()) < 1e-12


def _tables():
    nodes = NodeAttributeTable.from_dict(
        ["A", "B", "C", "D"],
        {"income": [4.0, 2.0, 1.0, 1.0], "colour": ["red", "red", "blue", "green"], "sex": ["f", "m", "f", "m"]},
    )
    edges = EdgeTable(("A", "B", "B"), ("B", "C", "D"), {"w": np.array([1.0, 2.0, 3.0])})
    return edges, nodes


def test_build_prepared_graph_dimensions():
    edges, nodes = _tables()
    g = build_prepared_graph(edges, nodes, ["income", "colour", "sex"], k="w")
    assert g.dimension_names == ("income", "colour=blue", "colour=green", "colour=red", "sex=f")
    assert g.k.tolist() == [1.0, 2.0, 3.0]
    np.testing.assert_allclose(g.forces.sum(axis=0), 0.0, atol=1e-12)
    g2 = build_prepared_graph(edges, nodes, "sex", expand_binary=True)
    assert g2.dimension_names == ("sex=f", "sex=m")


def test_build_prepared_graph_errors():
    edges, nodes = _tables()
    with pytest.raises(GraphError, match="unknown"):
        build_prepared_graph(edges, nodes, "height")
    with pytest.raises(GraphError, match="not found"):
        build_prepared_graph(edges, nodes, "income", k="missing")
    bad = EdgeTable(("A",), ("Z",), {})
    with pytest.raises(GraphError, match="unknown node 'Z'"):
        build_prepared_graph(bad, nodes, "income")


def test_rebalance_components():
    g = PreparedGraph.from_edges(4, [(0, 1), (2, 3)], [1.0, 0.0, 0.0, -1.0])
    assert component_labels(g)[0] == 2
    r = rebalance_components(g)
    assert r.forces[:, 0].tolist() == [0.5, -0.5, 0.5, -0.5]


def test_attribute_column_kinds():
    col = AttributeColumn("x", "continuous", np.array([1.0, np.nan]))
    assert col.missing.tolist() == [False, True]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.one_of(st.none(), st.floats(-1e6, 1e6)), min_size=1, max_size=30))
def test_balance_continuous_sums_to_zero(values):
    vals = np.array([np.nan if v is None else v for v in values])
    if np.all(np.isnan(vals)):
        with pytest.raises(GraphError):
            balance_continuous(vals)
        return
    out = balance_continuous(vals)
    assert abs(out.sum()) <= 1e-9 * max(1.0, np.abs(vals[~np.isnan(vals)]).sum())
    assert np.all(out[np.isnan(vals)] == 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", None]), min_size=2, max_size=40))
def test_categorical_dimensions_balanced(labels):
    present = {x for x in labels if x is not None}
    if len(present) < 2:
        with pytest.raises(GraphError):
            expand_categorical(labels)
        return
    dims = expand_categorical(labels)
    assert len(dims) == len(present)
    for _, vec in dims:
        assert abs(vec.sum()) < 1e-12
