"""Structural checks shared by the unit and acceptance suites."""

import numpy as np

from scentree import ScenarioSet, build_exact_tree


def check_tree_invariants(sc: ScenarioSet, g=None, tol=1e-12):
    """Partition, nesting, probability conservation and row-stochastic transitions."""
    g = g or build_exact_tree(sc)
    S = len(sc)
    for k in range(sc.horizon):
        members = np.concatenate([n.member_ids for n in g.nodes[k]])
        assert sorted(members.tolist()) == list(range(S))
        assert abs(g.node_probabilities(k).sum() - 1.0) <= tol
        for n in g.nodes[k]:
            pre = sc.canonical()[n.member_ids, :k + 1]
            assert (pre == pre[0]).all()
            assert abs(n.probability - sc.probabilities[n.member_ids].sum()) <= tol
        if k + 1 < sc.horizon:
            T = g.transitions[k].toarray()
            assert np.abs(T.sum(axis=1) - 1.0).max() <= tol
            for j, child in enumerate(g.nodes[k + 1]):
                parents = {int(g.membership[k][s]) for s in child.member_ids}
                assert len(parents) == 1
                (i,) = parents
                assert set(child.member_ids) <= set(g.nodes[k][i].member_ids)
                expect = child.probability / g.nodes[k][i].probability
                assert abs(T[i, j] - expect) <= tol


def check_overlap_rows(sc: ScenarioSet, g, tol=1e-12):
    """Each transition entry equals p(parent and child) / p(parent) over member sets."""
    p = sc.probabilities
    for k in range(sc.horizon):
        assert abs(g.node_probabilities(k).sum() - 1.0) <= tol
    for k, T in enumerate(g.transitions):
        T = T.toarray()
        assert np.abs(T.sum(axis=1) - 1.0).max() <= tol
        for i, par in enumerate(g.nodes[k]):
            pi = p[par.member_ids].sum()
            for j, ch in enumerate(g.nodes[k + 1]):
                both = np.intersect1d(par.member_ids, ch.member_ids)
                assert abs(T[i, j] - p[both].sum() / pi) <= tol


def check_markov_invariants(sc, m, tol=1e-12):
    for k in range(sc.horizon):
        assert np.all(np.diff(m.centers[k]) > 0)
        assert abs(m.marginals[k].sum() - 1.0) <= tol
    for k, T in enumerate(m.transitions):
        live = m.reachable(k)
        assert np.abs(T[live].sum(axis=1) - 1.0).max(initial=0.0) <= tol
        assert np.all(T[~live] == 0.0)
        # pushing the step-k marginal through T_k gives the step-(k+1) marginal
        assert np.abs(m.marginals[k] @ T - m.marginals[k + 1]).max() <= tol
