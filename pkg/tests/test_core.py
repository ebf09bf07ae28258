import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcswitch.core import (
    FrameSchedule,
    SwitchConfig,
    ValidationError,
    advance_slot,
    full_backlog,
    is_matching,
    is_t_disjoint,
    permutation_matching,
    to_fraction,
)
from fractions import Fraction

# Disjoint pair from the greedy counterexample (optimal frame of weight 17).
B1 = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]])
B2 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]])


def test_switch_config_rejects_nonpositive():
    with pytest.raises(ValidationError):
        SwitchConfig(0, 2)
    with pytest.raises(ValidationError):
        SwitchConfig(2, 0)


def test_slot_indexing():
    cfg = SwitchConfig(3, 4)
    assert [cfg.frame_of(s) for s in (1, 4, 5, 8, 9)] == [0, 0, 1, 1, 2]
    assert [cfg.slot_in_frame(s) for s in (1, 4, 5)] == [1, 4, 1]


@pytest.mark.parametrize(
    "m, expected",
    [
        (np.eye(3, dtype=int), True),
        (np.zeros((3, 3), dtype=int), True),
        (np.array([[1, 1, 0], [0, 0, 0], [0, 0, 0]]), False),
        (np.array([[1, 0], [1, 0]]), False),
    ],
)
def test_is_matching(m, expected):
    assert is_matching(m) is expected


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[0, 2], [0, 0]]), np.array([[0.5, 0], [0, 0]])])
def test_is_matching_validation(bad):
    with pytest.raises(ValidationError):
        is_matching(bad)


def test_is_t_disjoint_examples():
    cfg = SwitchConfig(3, 2)
    eye, zero = np.eye(3, dtype=int), np.zeros((3, 3), dtype=int)
    assert is_t_disjoint(FrameSchedule((eye, zero)), cfg)
    assert not is_t_disjoint(FrameSchedule((eye, eye)), cfg)
    assert is_t_disjoint(FrameSchedule((B1, B2)), cfg)
    with pytest.raises(ValidationError):
        is_t_disjoint(FrameSchedule((eye,)), cfg)


def test_advance_slot_delivers_and_clears():
    cfg = SwitchConfig(3, 2)
    nxt, rec = advance_slot(full_backlog(3), np.eye(3, dtype=int), 1, cfg)
    assert np.array_equal(rec.deliveries, np.eye(3))
    assert np.array_equal(nxt, 1 - np.eye(3))


def test_advance_slot_empty_voq_delivers_nothing():
    cfg = SwitchConfig(3, 2)
    backlog = full_backlog(3)
    backlog[0, 0] = 0
    _, rec = advance_slot(backlog, np.eye(3, dtype=int), 1, cfg)
    assert rec.deliveries[0, 0] == 0
    assert rec.deliveries.sum() == 2


def test_advance_slot_rejects_non_matching():
    with pytest.raises(ValidationError):
        advance_slot(full_backlog(2), np.ones((2, 2), dtype=int), 1, SwitchConfig(2, 2))


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 4),
    t=st.integers(1, 4),
    seed=st.integers(0, 2**32 - 1),
    slot_frame=st.integers(0, 5),
)
def test_frame_end_refills(n, t, seed, slot_frame):
    rng = np.random.default_rng(seed)
    backlog = rng.integers(0, 2, size=(n, n))
    action = permutation_matching(rng.permutation(n))
    nxt, _ = advance_slot(backlog, action, (slot_frame + 1) * t, SwitchConfig(n, t))
    assert nxt.min() == 1


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 4), t=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_one_delivery_per_voq_per_frame(n, t, seed):
    rng = np.random.default_rng(seed)
    cfg = SwitchConfig(n, t)
    backlog = full_backlog(n)
    total = np.zeros((n, n), dtype=int)
    prev = backlog
    for slot in range(1, t + 1):
        action = permutation_matching(rng.permutation(n))
        backlog, rec = advance_slot(backlog, action, slot, cfg)
        total += rec.deliveries
        if slot < t:
            assert np.all(backlog <= prev)  # only 1 -> 0 inside a frame
        prev = backlog
    assert total.max() <= 1


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), t=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_disjoint_schedule_delivers_its_union(n, t, seed):
    from dcswitch.combinat import decompose_subpermutation

    rng = np.random.default_rng(seed)
    # random selection with line sums <= t, built by greedy insertion
    c = np.zeros((n, n), dtype=int)
    for i, j in rng.permutation([(i, j) for i in range(n) for j in range(n)]):
        if rng.random() < 0.6 and c[i].sum() < t and c[:, j].sum() < t:
            c[i, j] = 1
    sched = FrameSchedule(tuple(decompose_subpermutation(c, t)))
    cfg = SwitchConfig(n, t)
    backlog = full_backlog(n)
    total = np.zeros((n, n), dtype=int)
    for k, m in enumerate(sched, start=1):
        backlog, rec = advance_slot(backlog, m, k, cfg)
        total += rec.deliveries
    assert np.array_equal(total, c)


def test_advance_slot_deterministic():
    cfg = SwitchConfig(3, 3)
    a = advance_slot(full_backlog(3), B1, 2, cfg)
    b = advance_slot(full_backlog(3), B1, 2, cfg)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1].deliveries, b[1].deliveries)


@pytest.mark.parametrize(
    "raw, expected",
    [({"num": 3, "den": 10}, Fraction(3, 10)), ("0.2", Fraction(1, 5)), ("1/3", Fraction(1, 3)), (2, Fraction(2))],
)
def test_to_fraction(raw, expected):
    assert to_fraction(raw) == expected


def test_to_fraction_rejects_garbage():
    with pytest.raises(ValidationError):
        to_fraction({"num": 1})
    with pytest.raises(ValidationError):
        to_fraction("abc")
