import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from invariants import check_overlap_rows
from oracles import best_two_partition

from scentree import (ClusteringSpec, ScenarioSet, build_cluster_graph, build_exact_tree,
                      cluster_all_steps, cluster_prefixes, kmeans_pp_seed, lloyd_iterate,
                      sample_node)
from scentree.approx import StageClustering, cluster_points
from scentree.scenarios import StageNode


def rng(seed=0):
    return np.random.default_rng(seed)


def test_seed_single_distinct_point():
    c = kmeans_pp_seed([5.0, 5.0, 5.0], 3, rng())
    assert c.ravel().tolist() == [5.0]


def test_seed_two_points_takes_both():
    for s in range(10):
        c = kmeans_pp_seed([0.0, 10.0], 2, rng(s))
        assert sorted(c.ravel().tolist()) == [0.0, 10.0]


def test_seed_all_points_gives_zero_potential():
    pts = [0.0, 1.0, 2.0, 3.0]
    c = kmeans_pp_seed(pts, 4, rng(1))
    assert sorted(c.ravel().tolist()) == pts
    res = lloyd_iterate(pts, c)
    assert res.potential == 0.0


def test_seed_rejects_empty():
    with pytest.raises(ValueError):
        kmeans_pp_seed(np.empty((0, 1)), 2, rng())


def test_seed_is_deterministic():
    pts = rng(3).normal(size=(40, 2))
    np.testing.assert_array_equal(kmeans_pp_seed(pts, 5, rng(7)), kmeans_pp_seed(pts, 5, rng(7)))


def test_lloyd_four_points_matches_best_partition():
    pts = [0.0, 1.0, 2.0, 3.0]
    res = lloyd_iterate(pts, [0.0, 3.0])
    phi, groups = best_two_partition(pts)
    assert groups == [[0.0, 1.0], [2.0, 3.0]]
    assert res.potential == pytest.approx(phi, abs=1e-12) and phi == pytest.approx(1.0)
    np.testing.assert_allclose(np.sort(res.centers.ravel()), [0.5, 2.5])
    assert res.assignments.tolist() == [0, 0, 1, 1]


def test_lloyd_identical_points():
    res = lloyd_iterate([2.0] * 5, [0.0, 7.0], max_iters=1)
    assert res.potential == 0.0


def test_lloyd_reseeds_empty_cluster():
    # the second center starts far from every point and empties out
    pts = [0.0, 0.1, 5.0, 5.1]
    res = lloyd_iterate(pts, [[0.05], [100.0]])
    assert len(np.unique(res.assignments)) == 2
    assert res.potential == pytest.approx(2 * 0.05 ** 2 + 2 * 0.05 ** 2, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 40), st.integers(1, 3), st.integers(1, 6))
def test_lloyd_potential_never_increases(seed, n_pts, dim, k):
    r = rng(seed)
    pts = r.normal(size=(n_pts, dim)) * r.uniform(0.1, 5)
    w = r.uniform(0.1, 2.0, n_pts)
    init = kmeans_pp_seed(pts, k, r, weights=w)
    res = lloyd_iterate(pts, init, weights=w)
    h = np.asarray(res.history)
    assert np.all(np.diff(h) <= 1e-12 * max(1.0, h[0]))


def test_potential_is_sum_of_squared_distances():
    pts = rng(2).uniform(size=(30, 3))
    res = cluster_points(pts, 4, seed=1)
    d = pts - res.centers[res.assignments]
    assert res.potential == pytest.approx(float(np.sum(d * d)), rel=1e-9)


def test_step_zero_example():
    sc = ScenarioSet.uniform([[0.0], [0.0], [1.0]])
    cl = cluster_prefixes(sc, 0, ClusteringSpec((2,)))
    assert cl.assignments.tolist() == [0, 0, 1]
    assert cl.potential == 0.0


def test_single_cluster(walk_50):
    cl = cluster_prefixes(walk_50, 3, ClusteringSpec.constant(1, 10))
    assert set(cl.assignments.tolist()) == {0}


def test_labels_follow_center_order(walk_50):
    cl = cluster_prefixes(walk_50, 2, ClusteringSpec.constant(6, 10))
    c = cl.centers
    assert np.all(np.lexsort(c.T[::-1]) == np.arange(len(c)))


def test_clustering_deterministic(walk_200):
    spec = ClusteringSpec.constant(10, 10, seed=11)
    a, b = cluster_all_steps(walk_200, spec), cluster_all_steps(walk_200, spec)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.assignments, y.assignments)
        np.testing.assert_array_equal(x.centers, y.centers)
        assert x.potential == y.potential


def graphs_equal_up_to_relabel(a, b, tol=1e-12):
    for k in range(a.horizon):
        # map node id in a to node id in b through any shared member
        ma, mb = a.membership[k], b.membership[k]
        perm = {}
        for s in range(len(ma)):
            if perm.setdefault(int(ma[s]), int(mb[s])) != int(mb[s]):
                return False
        if len(set(perm.values())) != len(perm) or len(perm) != len(b.nodes[k]):
            return False
        for i, j in perm.items():
            if abs(a.nodes[k][i].probability - b.nodes[k][j].probability) > tol:
                return False
        if k + 1 < a.horizon:
            nxt = {int(i): int(j) for i, j in zip(a.membership[k + 1], b.membership[k + 1])}
            Ta, Tb = a.transitions[k].toarray(), b.transitions[k].toarray()
            for i, j in perm.items():
                for c, d in nxt.items():
                    if abs(Ta[i, c] - Tb[j, d]) > tol:
                        return False
    return True


def test_saturation_reproduces_exact_tree(walk_50):
    distinct = build_exact_tree(walk_50).node_counts()
    spec = ClusteringSpec(tuple(distinct), seed=0)
    cls = cluster_all_steps(walk_50, spec)
    assert all(c.potential == 0.0 for c in cls)
    g = build_cluster_graph(walk_50, cls)
    assert graphs_equal_up_to_relabel(g, build_exact_tree(walk_50))


def test_overlap_transition_example():
    sc = ScenarioSet.uniform([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 2.0]])
    cl0 = StageClustering(0, np.array([0, 0, 1, 1]), np.array([[0.0], [1.0]]), 0.0)
    cl1 = StageClustering(1, np.array([0, 1, 1, 2]), np.zeros((3, 2)), 0.0)
    g = build_cluster_graph(sc, [cl0, cl1])
    T = g.transitions[0].toarray()
    # i = {s1, s2}, j = {s2, s3}: p({s2}) / p({s1, s2})
    assert T[0, 1] == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-12)


def test_overlap_rows_match_brute_force(walk_200):
    cls = cluster_all_steps(walk_200, ClusteringSpec.constant(7, 10, seed=2))
    check_overlap_rows(walk_200, build_cluster_graph(walk_200, cls))


def test_single_cluster_transitions_are_one(walk_50):
    g = build_cluster_graph(walk_50, cluster_all_steps(walk_50, ClusteringSpec.constant(1, 10)))
    for t in g.transitions:
        assert t.toarray().tolist() == [[1.0]]


def test_cluster_graph_rejects_length_mismatch(walk_50):
    cls = cluster_all_steps(walk_50, ClusteringSpec.constant(2, 10))
    with pytest.raises(ValueError):
        build_cluster_graph(walk_50, cls[:5])


def _node(n):
    return StageNode(0, np.arange(n), np.full(n, 0.5 / n), (0.0,))


def test_sample_small_node_unchanged():
    node = _node(3)
    assert sample_node(node, 10, rng()) is node


def test_sample_large_node_rescales():
    node = _node(100)
    out = sample_node(node, 10, rng(4))
    assert len(out) == 10 and len(set(out.member_ids.tolist())) == 10
    np.testing.assert_allclose(out.weights, 0.05, atol=1e-15)
    assert abs(out.probability - node.probability) <= 1e-12


def test_sample_deterministic_and_validates():
    node = _node(50)
    a, b = sample_node(node, 7, rng(9)), sample_node(node, 7, rng(9))
    np.testing.assert_array_equal(a.member_ids, b.member_ids)
    with pytest.raises(ValueError):
        sample_node(node, 0, rng())


def test_spec_validation():
    with pytest.raises(ValueError):
        ClusteringSpec((0, 2))
    with pytest.raises(ValueError):
        ClusteringSpec((2,), max_lloyd_iters=0)
