"""Scheduling policies.

Frame policies (``kind == "frame"``) commit to a whole FrameSchedule at each
frame boundary; slot policies (``kind == "slot"``) choose one matching per
slot from the current backlog. Policies needing a target rate matrix take it
at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .capacity import circular_shift_schedule
from .combinat import (
    decompose_subpermutation,
    greedy_iterative_mwm,
    max_weight_degree_constrained_subgraph,
    max_weight_matching,
    selection_weight,
    solve_t_disjoint_max_weight,
)
from .core import FrameSchedule, SwitchConfig, ValidationError, as_binary, empty_matching, fraction_matrix, is_matching
from .mdp import RcsTable, encode


@dataclass
class VirtualQueueState:
    """Deficit counters, stored exactly as integers in units of ``1/scale``.

    ``arrival`` is T*R in the same units, so every update is integer
    arithmetic and queue comparisons are exact.
    """

    q: np.ndarray
    arrival: np.ndarray
    scale: int
    frame_index: int = 0

    @classmethod
    def initial(cls, target, config: SwitchConfig) -> "VirtualQueueState":
        fr = fraction_matrix(target)
        if fr.shape != (config.n, config.n):
            raise ValidationError(f"target must be {config.n}x{config.n}")
        if any(x < 0 for x in fr.flat):
            raise ValidationError("target rates must be nonnegative")
        scale = lcm(*(x.denominator for x in fr.flat))
        arrival = np.array([[int(x * config.t * scale) for x in row] for row in fr], dtype=np.int64)
        return cls(np.zeros((config.n, config.n), dtype=np.int64), arrival, scale, 0)

    @property
    def values(self) -> np.ndarray:
        """Queue lengths as Fractions."""
        return np.vectorize(lambda x: Fraction(int(x), self.scale), otypes=[object])(self.q)

    def as_float(self) -> np.ndarray:
        return self.q / self.scale

    def update(self, served) -> "VirtualQueueState":
        """Q(f+1) = max(Q(f) - B(f), 0) + T*R."""
        b = np.asarray(served, dtype=np.int64) * self.scale
        q = np.maximum(self.q - b, 0) + self.arrival
        return VirtualQueueState(q, self.arrival, self.scale, self.frame_index + 1)


def tmwm_plan_frame(state: VirtualQueueState, config: SwitchConfig, verify: bool = False):
    """One frame of T-MWM: optimal T-disjoint matching on the virtual queues.

    Returns (schedule, next state). With ``verify`` the schedule weight is
    checked against the degree-bounded selection optimum.
    """
    schedule = solve_t_disjoint_max_weight(state.q, config.t)
    if verify:
        best = selection_weight(state.q, max_weight_degree_constrained_subgraph(state.q, config.t))
        if schedule.weight(state.q) != best:
            raise AssertionError("T-MWM frame weight differs from the selection optimum")
    return schedule, state.update(schedule.coverage())


def greedy_frame_plan(state: VirtualQueueState, config: SwitchConfig):
    """As ``tmwm_plan_frame`` but with the greedy iterated max-weight matching."""
    schedule = greedy_iterative_mwm(state.q, config.t)
    return schedule, state.update(schedule.coverage())


def mwm_step(backlog, real_queue_weights=None) -> np.ndarray:
    """Per-slot max-weight matching on real VOQ lengths.

    Frame-synchronized VOQs hold at most one packet, so by default the weight
    of a VOQ is its 0/1 backlog.
    """
    backlog = as_binary(backlog, "backlog")
    w = backlog if real_queue_weights is None else np.asarray(real_queue_weights) * backlog
    return max_weight_matching(w)


def cto_plan_frame(backlog, config: SwitchConfig) -> FrameSchedule:
    """Clearance-time schedule: minimum edge colouring of the backlog, truncated to T slots.

    Colour classes are played in colour order; if the clearance time (the
    backlog's maximum line sum) exceeds T, the later classes are dropped.
    """
    backlog = as_binary(backlog, "backlog")
    delta = int(max(backlog.sum(axis=0).max(), backlog.sum(axis=1).max()))
    if delta == 0:
        return FrameSchedule(tuple(empty_matching(config.n) for _ in range(config.t)))
    classes = decompose_subpermutation(backlog, delta)
    classes = classes[: config.t] + [empty_matching(config.n)] * max(0, config.t - delta)
    return FrameSchedule(tuple(classes))


def rcs_policy_step(table: RcsTable, backlog, slot_in_frame: int, rng: np.random.Generator) -> np.ndarray:
    """Sample an action from the cyclo-stationary law for the observed backlog."""
    s = encode(backlog)
    try:
        idx, probs = table.law(slot_in_frame, s)
    except (KeyError, IndexError) as exc:
        raise KeyError(f"RCS table has no entry for slot {slot_in_frame}, state {s:#x}") from exc
    n = table.config.n
    if len(idx) == 0:
        return empty_matching(n)
    if len(idx) == 1:
        a = idx[0]
    else:
        a = idx[rng.choice(len(idx), p=probs)]
    m = np.zeros((n, n), dtype=np.int8)
    m[np.arange(n), list(table.actions[a])] = 1
    return m


class Policy:
    """Base class. Subclasses set ``name`` and ``kind`` and implement one hook."""

    name = "policy"
    kind = "frame"

    def __init__(self, config: SwitchConfig):
        self.config = config

    def plan_frame(self, frame_index: int, backlog, rng) -> FrameSchedule:
        raise NotImplementedError

    def step(self, slot: int, backlog, rng) -> np.ndarray:
        raise NotImplementedError


class TMWMPolicy(Policy):
    name = "tmwm"

    def __init__(self, config, target, verify: bool = False):
        super().__init__(config)
        self.state = VirtualQueueState.initial(target, config)
        self.verify = verify

    def plan_frame(self, frame_index, backlog, rng):
        schedule, self.state = tmwm_plan_frame(self.state, self.config, self.verify)
        return schedule


class GreedyFramePolicy(Policy):
    name = "greedy"

    def __init__(self, config, target):
        super().__init__(config)
        self.state = VirtualQueueState.initial(target, config)

    def plan_frame(self, frame_index, backlog, rng):
        schedule, self.state = greedy_frame_plan(self.state, self.config)
        return schedule


class CTOPolicy(Policy):
    name = "cto"

    def plan_frame(self, frame_index, backlog, rng):
        return cto_plan_frame(backlog, self.config)


class CircularShiftPolicy(Policy):
    name = "circular"

    def __init__(self, config):
        super().__init__(config)
        self.schedule = circular_shift_schedule(config)

    def plan_frame(self, frame_index, backlog, rng):
        return self.schedule


class MWMPolicy(Policy):
    name = "mwm"
    kind = "slot"

    def step(self, slot, backlog, rng):
        return mwm_step(backlog)


class RCSPolicy(Policy):
    name = "rcs"
    kind = "slot"

    def __init__(self, config, table: RcsTable):
        super().__init__(config)
        if table.config != config:
            raise ValidationError("RCS table was built for a different switch")
        self.table = table

    def step(self, slot, backlog, rng):
        return rcs_policy_step(self.table, backlog, self.config.slot_in_frame(slot), rng)


POLICY_NAMES = ("tmwm", "mwm", "cto", "greedy", "circular", "rcs")


def make_policy(name: str, config: SwitchConfig, target=None, rcs_table: RcsTable | None = None) -> Policy:
    """Build a policy by name; ``rcs`` without a table solves the occupancy LP for ``target``."""
    if name == "tmwm":
        return TMWMPolicy(config, _need(target, name))
    if name == "greedy":
        return GreedyFramePolicy(config, _need(target, name))
    if name == "mwm":
        return MWMPolicy(config)
    if name == "cto":
        return CTOPolicy(config)
    if name == "circular":
        return CircularShiftPolicy(config)
    if name == "rcs":
        if rcs_table is None:
            from .mdp import build_rcs_table, find_occupancy

            occ = find_occupancy(np.asarray(fraction_matrix(_need(target, name)), dtype=float), config)
            if occ is None:
                raise ValidationError("target is outside the capacity region; no RCS policy exists")
            rcs_table = build_rcs_table(occ)
        return RCSPolicy(config, rcs_table)
    raise ValidationError(f"unknown policy {name!r}; expected one of {', '.join(POLICY_NAMES)}")


def _need(target, name):
    if target is None:
        raise ValidationError(f"policy {name!r} needs a target rate matrix")
    return target


def check_action(m) -> np.ndarray:
    if not is_matching(m):
        raise AssertionError("policy emitted a non-matching")
    return m
