from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcswitch.capacity import check_capacity, maximize_linear_utility
from dcswitch.core import SwitchConfig, ValidationError
from dcswitch.experiments import FIG3_WEIGHTS
from dcswitch.mdp import (
    FEASIBILITY_TOL,
    MdpInstance,
    ScaleCapError,
    _lp_structure,
    build_rcs_table,
    check_capacity_mdp,
    decode,
    encode,
    find_occupancy,
    reward,
    solve_num_lp,
    transition,
)
from oracles import brute_perfect_sequences

EYE3 = np.eye(3, dtype=int)


def test_encode_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.integers(0, 2, size=(3, 3))
        assert np.array_equal(decode(encode(m), 3), m)


def test_transition_examples():
    cfg = SwitchConfig(3, 2)
    ones = np.ones((3, 3), dtype=int)
    assert np.array_equal(transition(ones, EYE3, 1, cfg), 1 - EYE3)
    assert np.array_equal(transition(1 - EYE3, EYE3, 2, cfg), ones)
    assert not transition(np.zeros((3, 3), dtype=int), EYE3, 1, cfg).any()


def test_transition_requires_perfect_matching():
    with pytest.raises(ValidationError):
        transition(np.ones((2, 2), dtype=int), np.array([[1, 0], [0, 0]]), 1, SwitchConfig(2, 2))


def test_reward_examples():
    ones = np.ones((3, 3), dtype=int)
    assert np.array_equal(reward(ones, EYE3), EYE3)
    assert not reward(np.zeros((3, 3), dtype=int), EYE3).any()
    assert not reward(1 - EYE3, EYE3).any()


@pytest.mark.parametrize("n,t", [(1, 1), (2, 1), (2, 3), (3, 2)])
def test_instance_sizes_unpruned(n, t):
    inst = MdpInstance.build(SwitchConfig(n, t), prune=False)
    assert len(inst.actions) == factorial(n)
    assert all(len(layer) == 2 ** (n * n) for layer in inst.states)


def test_pruned_reachable_counts_n3():
    inst = MdpInstance.build(SwitchConfig(3, 5))
    assert [len(layer) for layer in inst.states] == [1, 6, 21, 40, 49]


def test_pruned_states_closed_under_transition():
    inst = MdpInstance.build(SwitchConfig(3, 4))
    T = inst.config.t
    for t in range(1, T + 1):
        nxt = set(inst.states[t % T])
        for s in inst.states[t - 1]:
            for a in range(len(inst.actions)):
                assert inst.next_state(s, a, t) in nxt


def test_unpruned_closed_under_transition():
    inst = MdpInstance.build(SwitchConfig(2, 2), prune=False)
    space = set(range(16))
    for t in (1, 2):
        for s in inst.states[t - 1]:
            for a in range(len(inst.actions)):
                assert inst.next_state(s, a, t) in space


@pytest.mark.parametrize("n,t", [(4, 1), (2, 6)])
def test_scale_cap(n, t):
    with pytest.raises(ScaleCapError):
        MdpInstance.build(SwitchConfig(n, t))


@pytest.mark.parametrize("t", [1, 2, 3, 4, 5])
def test_num_lp_matches_combinatorial_reference(t):
    cfg = SwitchConfig(3, t)
    value, occ, r = solve_num_lp(FIG3_WEIGHTS, cfg)
    _, comb = maximize_linear_utility(FIG3_WEIGHTS, cfg)
    assert value == pytest.approx(comb, abs=1e-6)
    if t >= 3:
        assert value == pytest.approx(4.63 / t, abs=1e-6)
    assert np.allclose(occ.slot_totals(), 1.0, atol=FEASIBILITY_TOL)
    assert np.allclose(occ.rates(), r, atol=1e-9)


def test_num_lp_zero_weights():
    value, _, _ = solve_num_lp(np.zeros((2, 2)), SwitchConfig(2, 2))
    assert value == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 3), t=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_num_lp_random_against_enumeration(n, t, seed):
    w = np.random.default_rng(seed).integers(0, 10, size=(n, n)).astype(float)
    cfg = SwitchConfig(n, t)
    value, _, _ = solve_num_lp(w, cfg)
    assert value == pytest.approx(brute_perfect_sequences(w, t), abs=1e-7)
    assert value == pytest.approx(maximize_linear_utility(w, cfg)[1], abs=1e-7)


def test_pruning_does_not_change_value():
    w = np.array([[3.0, 1.0], [2.0, 5.0]])
    for t in (1, 2, 3):
        cfg = SwitchConfig(2, t)
        assert solve_num_lp(w, cfg, prune=True)[0] == pytest.approx(solve_num_lp(w, cfg, prune=False)[0], abs=1e-9)


def test_occupancy_satisfies_flow_balance():
    cfg = SwitchConfig(3, 3)
    _, occ, _ = solve_num_lp(FIG3_WEIGHTS, cfg)
    A_eq, b_eq, _, _ = _lp_structure(occ.instance)
    x = np.concatenate([xt.ravel() for xt in occ.x])
    assert np.allclose(A_eq @ x, b_eq, atol=1e-9)
    assert x.min() >= -1e-12


def test_occupancy_lookup():
    cfg = SwitchConfig(2, 1)
    _, occ, _ = solve_num_lp(np.array([[1.0, 0.0], [0.0, 1.0]]), cfg)
    full = occ.instance.full_state
    assert occ.get(1, full, 0) == pytest.approx(1.0)  # identity is action 0


@pytest.mark.parametrize(
    "r, t",
    [
        (np.full((2, 2), 0.5), 2),
        (np.full((2, 2), 0.5), 1),
        (np.zeros((2, 2)), 3),
    ],
)
def test_capacity_mdp_examples_agree(r, t):
    cfg = SwitchConfig(2, t)
    assert check_capacity_mdp(r, cfg) == check_capacity(r, cfg).feasible
    if t == 2 or not r.any():
        assert check_capacity_mdp(r, cfg)


def test_capacity_mdp_rejects_entry_cap():
    r = np.array([[0.6, 0.0], [0.0, 0.0]])
    assert not check_capacity_mdp(r, SwitchConfig(2, 2))


@settings(max_examples=30, deadline=None)
@given(t=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_capacity_oracles_agree_property(t, seed):
    rng = np.random.default_rng(seed)
    r = rng.integers(0, 8, size=(2, 2)) / 10
    cfg = SwitchConfig(2, t)
    assert check_capacity_mdp(r, cfg) == check_capacity(r, cfg).feasible


def test_find_occupancy_dominates_target():
    r = np.array([[0.2, 0.4, 0.4], [0.3, 0.5, 0.2], [0.5, 0.1, 0.4]])
    occ = find_occupancy(r, SwitchConfig(3, 2))
    assert occ is not None
    assert np.all(occ.rates() >= r - 1e-9)


def test_rcs_table_distributions():
    _, occ, _ = solve_num_lp(FIG3_WEIGHTS, SwitchConfig(3, 2))
    table = build_rcs_table(occ)
    for t in (1, 2):
        for s, (idx, probs) in table.dist[t - 1].items():
            if len(idx):
                assert probs.sum() == pytest.approx(1.0, abs=1e-12)
                assert probs.min() > 0


def test_rcs_table_uniform_two_actions():
    inst = MdpInstance.build(SwitchConfig(2, 1))
    from dcswitch.mdp import OccupancyMeasure

    occ = OccupancyMeasure(inst, [np.array([[0.5, 0.5]])])
    idx, probs = build_rcs_table(occ).law(1, inst.full_state)
    assert list(idx) == [0, 1] and np.allclose(probs, 0.5)


def test_rcs_table_deterministic_and_zero_mass():
    inst = MdpInstance.build(SwitchConfig(2, 2))
    from dcswitch.mdp import OccupancyMeasure

    x1 = np.array([[1.0, 0.0]])
    x2 = np.zeros((len(inst.states[1]), 2))
    k = inst.states[1].index(inst.next_state(inst.full_state, 0, 1))
    x2[k, 1] = 1.0
    table = build_rcs_table(OccupancyMeasure(inst, [x1, x2]))
    assert list(table.law(1, inst.full_state)[0]) == [0]
    empty = [s for s in inst.states[1] if s != inst.states[1][k]]
    assert all(len(table.law(2, s)[0]) == 0 for s in empty)
