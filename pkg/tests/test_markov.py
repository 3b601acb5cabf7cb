import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from invariants import check_markov_invariants

from scentree import MarkovModel, ScenarioSet, estimate_transition, quantize_disturbance


def test_constant_step_has_one_center():
    sc = ScenarioSet.uniform([[0.5, 0.0], [0.5, 1.0]])
    centers, idx = quantize_disturbance(sc, 10)
    assert centers[0].tolist() == [0.5]
    assert idx[:, 0].tolist() == [0, 0]


def test_endpoints_map_to_end_centers():
    sc = ScenarioSet.uniform([[0.0], [1.0]])
    centers, idx = quantize_disturbance(sc, 10)
    assert len(centers[0]) == 10
    assert idx[:, 0].tolist() == [0, 9]


def test_nearest_center_arithmetic():
    sc = ScenarioSet.uniform([[0.0], [0.26], [1.0]])
    centers, idx = quantize_disturbance(sc, 5)
    np.testing.assert_allclose(centers[0], [0, 0.25, 0.5, 0.75, 1.0])
    # 1-based bins 1, 2, 5
    assert (idx[:, 0] + 1).tolist() == [1, 2, 5]


def test_ties_go_to_lower_center():
    sc = ScenarioSet.uniform([[0.0], [0.5], [1.0]])
    centers, idx = quantize_disturbance(sc, 2)
    assert idx[:, 0].tolist() == [0, 0, 1]


def test_three_sequence_transitions(three_seq):
    m = estimate_transition(three_seq, bins_per_step=2)
    T = m.transitions[0]
    assert T[0].tolist() == [0.5, 0.5]
    assert T[1].tolist() == [0.0, 1.0]


def test_chain_forgets_history(three_seq):
    # s1 and s2 share w_0 and therefore one Markov state at step 0
    m = estimate_transition(three_seq, bins_per_step=2)
    a, b = m.assign(0, [0.0, 0.0])
    assert a == b


def test_single_sequence_rows_are_unit():
    m = estimate_transition(ScenarioSet.uniform([[0.1, 0.4, 0.2, 0.9]]))
    for k, T in enumerate(m.transitions):
        live = m.reachable(k)
        assert np.all(np.sort(T[live], axis=1)[:, -1] == 1.0)
        assert np.all(T[live].sum(axis=1) == 1.0)


def test_identical_steps_single_entry():
    sc = ScenarioSet.uniform([[0.3, 0.7, 0.1], [0.3, 0.7, 0.9]])
    m = estimate_transition(sc)
    assert m.transitions[0].tolist() == [[1.0]]


def test_unreachable_rows_are_zero():
    sc = ScenarioSet.uniform([[0.0, 0.0], [1.0, 1.0]])
    m = estimate_transition(sc, bins_per_step=5)
    assert m.reachable(0).tolist() == [True, False, False, False, True]
    assert np.all(m.transitions[0][1:4] == 0.0)


def test_quantile_option():
    vals = np.linspace(0, 1, 101)[:, None]
    centers, idx = quantize_disturbance(ScenarioSet.uniform(vals), 4, method="quantile")
    assert np.all(np.diff(centers[0]) > 0) and len(centers[0]) == 4
    with pytest.raises(ValueError):
        quantize_disturbance(ScenarioSet.uniform(vals), 4, method="kmeans")


def test_dict_roundtrip(walk_50):
    m = estimate_transition(walk_50)
    back = MarkovModel.from_dict(m.to_dict())
    for a, b in zip(m.transitions, back.transitions):
        np.testing.assert_array_equal(a, b)
    for a, b in zip(m.centers, back.centers):
        np.testing.assert_array_equal(a, b)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 40), st.integers(1, 6), st.integers(1, 12))
def test_markov_invariants(seed, S, N, bins):
    r = np.random.default_rng(seed)
    vals = np.round(r.uniform(0, 1, size=(S, N)), 2)
    p = r.uniform(0.1, 1.0, S)
    sc = ScenarioSet(vals, p / p.sum())
    check_markov_invariants(sc, estimate_transition(sc, bins_per_step=bins))
