import numpy as np
import pytest

from diffged.editpath import edit_cost
from diffged.graphs import GraphPair, LabeledGraph
from diffged.oracle import OracleSizeError, exact_ged_astar, exact_ged_bruteforce, ground_truth_matrix

from helpers import brute_ged, figure1_pair, path, small_corpus, triangle


def test_identical_graphs():
    g = LabeledGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)], [0, 1, 0, 1])
    res = exact_ged_bruteforce(GraphPair(g, g), mapping_cap=10)
    assert res.ged == 0
    assert (0, 1, 2, 3) in res.optimal_mappings


def test_figure1_ged_four():
    assert exact_ged_bruteforce(figure1_pair()).ged == 4
    assert exact_ged_astar(figure1_pair()).ged == 4


def test_k3_vs_p3_unlabeled():
    # frozen from enumeration: deleting one triangle edge
    p = GraphPair(triangle(), path(3))
    res = exact_ged_bruteforce(p, mapping_cap=100)
    assert res.ged == 1
    assert res.ged == brute_ged(p)
    # every automorphism of P3 composed with each choice of the removed edge
    assert len(res.optimal_mappings) == 6


def test_mappings_lexicographic_and_capped():
    p = GraphPair(triangle(), triangle())
    res = exact_ged_bruteforce(p, mapping_cap=4)
    assert res.optimal_mappings == [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0)]


def test_every_listed_mapping_is_optimal():
    for p in small_corpus(count=10):
        res = exact_ged_bruteforce(p, mapping_cap=20)
        assert all(edit_cost(p, f) == res.ged for f in res.optimal_mappings)
        res = exact_ged_astar(p, mapping_cap=20)
        assert res.optimal
        assert all(edit_cost(p, f) == res.ged for f in res.optimal_mappings)


def test_size_guard():
    g = LabeledGraph.from_edges(9, [])
    with pytest.raises(OracleSizeError, match="exact_ged_astar"):
        exact_ged_bruteforce(GraphPair(g, g))


def test_astar_agrees_with_bruteforce_on_six_node_synthetics():
    from diffged.synthetic import build_corpus, random_graphs

    gs = random_graphs(15, 11, 6, 6, 2)
    for p in build_corpus(gs, 3, 12, num_labels=2, small_max_delta=3):
        assert exact_ged_astar(p).ged == exact_ged_bruteforce(p).ged == p.gt_ged


def test_disjoint_labels_lower_bound():
    n = 4
    g = LabeledGraph.from_edges(n, [(0, 1), (2, 3)], [0] * n)
    h = LabeledGraph.from_edges(n, [(0, 1), (1, 2)], [1] * n)
    res = exact_ged_astar(GraphPair(g, h))
    assert res.ged >= n
    assert res.ged == brute_ged(GraphPair(g, h))


def test_empty_vs_k3():
    p = GraphPair(LabeledGraph.from_edges(0, []), triangle())
    assert exact_ged_astar(p).ged == 6
    assert exact_ged_bruteforce(p).ged == 6


def test_symmetry_on_equal_sizes():
    rng = np.random.default_rng(0)
    for _ in range(15):
        n = 5
        e1 = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.5]
        e2 = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.5]
        a = LabeledGraph.from_edges(n, e1, rng.integers(2, size=n))
        b = LabeledGraph.from_edges(n, e2, rng.integers(2, size=n))
        assert exact_ged_astar(GraphPair(a, b)).ged == exact_ged_astar(GraphPair(b, a)).ged


def test_budget_exhaustion_flags_non_optimal():
    rng = np.random.default_rng(1)
    n = 8
    e1 = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.5]
    e2 = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.5]
    p = GraphPair(LabeledGraph.from_edges(n, e1), LabeledGraph.from_edges(n, e2))
    res = exact_ged_astar(p, node_budget=3)
    assert not res.optimal
    assert res.ged == edit_cost(p, res.optimal_mappings[0])
    assert res.ged >= exact_ged_astar(p).ged


def test_ground_truth_matrix_identity():
    g = path(3)
    h = path(4)
    m = ground_truth_matrix(GraphPair(g, h, (0, 1, 2)))
    np.testing.assert_array_equal(m, np.eye(3, 4))


def test_ground_truth_matrix_permutation():
    m = ground_truth_matrix(GraphPair(triangle(), triangle(), (2, 0, 1)))
    assert [tuple(x) for x in np.argwhere(m)] == [(0, 2), (1, 0), (2, 1)]


def test_ground_truth_matrix_sums():
    for p in small_corpus(count=10):
        m = ground_truth_matrix(p)
        np.testing.assert_array_equal(m.sum(axis=1), 1)
        assert m.sum(axis=0).max() <= 1


def test_ground_truth_matrix_requires_mapping():
    with pytest.raises(ValueError):
        ground_truth_matrix(GraphPair(triangle(), triangle()))
