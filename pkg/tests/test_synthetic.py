import numpy as np
import pytest

from setse.evaluation import assortativity
from setse.graph import GraphError
from setse.synthetic import (
    PEEL_BLOCKS,
    QUINTET_TYPES,
    SUBCLASSES,
    attach_pendant_chains,
    attach_quintet_forces,
    generate_peel,
    generate_random_graph,
)


def _block_counts(inst):
    index = {s: i for i, s in enumerate(SUBCLASSES)}
    counts = np.zeros((4, 4), dtype=int)
    for i, j in inst.edges:
        a, b = sorted((index[inst.subclasses[i]], index[inst.subclasses[j]]))
        counts[a, b] += 1
    return counts


@pytest.mark.parametrize("type_", QUINTET_TYPES)
def test_quintet_structure(type_):
    for seed in range(3):
        inst = generate_peel(type_, seed)
        assert len(inst.node_ids) == 40 and len(inst.edges) == 160
        assert _block_counts(inst).tolist() == [list(r) for r in PEEL_BLOCKS[type_]]
        pairs = {tuple(sorted(e)) for e in inst.edges.tolist()}
        assert len(pairs) == 160 and all(i != j for i, j in pairs)
        cls = np.array(inst.classes)
        same = cls[inst.edges[:, 0]] == cls[inst.edges[:, 1]]
        within_a = np.sum(same & (cls[inst.edges[:, 0]] == "a"))
        assert (within_a, np.sum(same) - within_a, np.sum(~same)) == (40, 40, 80)
        assert abs(assortativity(inst.edges, inst.classes)) < 1e-12


def test_type_e_blocks():
    counts = _block_counts(generate_peel("E", 4))
    assert counts[0, 0] == 38 and counts[1, 1] == 0


def test_seeds_differ_and_repeat():
    a, b, c = generate_peel("B", 1), generate_peel("B", 2), generate_peel("B", 1)
    assert not np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.edges, c.edges)
    assert np.array_equal(_block_counts(a), _block_counts(b))


def test_quintet_connected_and_prepared():
    inst = generate_peel("C", 0)
    g = inst.prepared()
    assert g.dimension_names == ("class=a",)
    assert set(g.forces[:, 0]) == {0.5, -0.5}
    from setse.graph import component_labels

    assert component_labels(g)[0] == 1


def test_unknown_type():
    with pytest.raises(ValueError, match="unknown quintet type"):
        generate_peel("F")


def test_quintet_forces():
    f = attach_quintet_forces(["a"] * 20 + ["b"] * 20)
    assert f.sum() == 0.0 and f[0, 0] == 0.5 and f[-1, 0] == -0.5
    f = attach_quintet_forces(["a"] * 30 + ["b"] * 10)
    assert f[0, 0] == pytest.approx(0.25) and f[-1, 0] == pytest.approx(-0.75)


def test_random_graph_examples():
    assert generate_random_graph(2, m=1).tolist() in ([[0, 1]], [[1, 0]])
    tree = generate_random_graph(10, tree=True, seed=3)
    assert len(tree) == 9
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    adj = coo_matrix((np.ones(9), (tree[:, 0], tree[:, 1])), shape=(10, 10))
    assert connected_components(adj, directed=False)[0] == 1
    a = generate_random_graph(1000, p=0.01, seed=7)
    b = generate_random_graph(1000, p=0.01, seed=7)
    assert np.array_equal(a, b)
    adj = coo_matrix((np.ones(len(a)), (a[:, 0], a[:, 1])), shape=(1000, 1000))
    assert connected_components(adj, directed=False)[0] == 1


def test_random_graph_simple_with_exact_m():
    e = generate_random_graph(50, m=300, seed=1)
    keys = {tuple(sorted(x)) for x in e.tolist()}
    assert len(e) == 300 and len(keys) == 300 and all(i != j for i, j in keys)


def test_random_graph_errors():
    with pytest.raises(GraphError, match="cannot connect"):
        generate_random_graph(10, m=5)
    with pytest.raises(GraphError):
        generate_random_graph(4, m=7)


def test_pendant_chains():
    n, e = attach_pendant_chains(10, generate_random_graph(10, m=15, seed=0), 4, max_length=3, seed=0)
    assert n > 10 and len(e) == 15 + (n - 10)
