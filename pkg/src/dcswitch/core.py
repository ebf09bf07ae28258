"""Switch model: configuration, matchings, frame schedules and slot dynamics.

Matrices are plain numpy arrays indexed ``[input, output]`` with 0-based
indices. Slots are 1-indexed globally: frame ``f`` covers slots
``f*T + 1 .. (f+1)*T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class ValidationError(ValueError):
    """Input does not satisfy a structural precondition."""


class InfeasibleError(ValueError):
    """A combinatorial request cannot be met (e.g. degree above colour budget)."""


@dataclass(frozen=True)
class SwitchConfig:
    n: int
    t: int

    def __post_init__(self):
        for name in ("n", "t"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")

    def frame_of(self, slot: int) -> int:
        return (slot - 1) // self.t

    def slot_in_frame(self, slot: int) -> int:
        """1-based position of a global slot inside its frame."""
        return (slot - 1) % self.t + 1


def _as_square(m, name="matrix") -> np.ndarray:
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    return arr


def as_binary(m, name="matrix") -> np.ndarray:
    arr = _as_square(m, name)
    if arr.size:
        if arr.dtype.kind in "biu":
            ok = arr.min() >= 0 and arr.max() <= 1
        else:
            ok = ((arr == 0) | (arr == 1)).all()
        if not ok:
            raise ValidationError(f"{name} must be 0/1")
    return arr.astype(np.int8, copy=False)


def is_matching(m) -> bool:
    """True iff every row and column of the 0/1 matrix has at most one 1."""
    arr = as_binary(m, "matching")
    return not arr.size or bool(arr.sum(axis=0).max() <= 1 and arr.sum(axis=1).max() <= 1)


def empty_matching(n: int) -> np.ndarray:
    return np.zeros((n, n), dtype=np.int8)


def permutation_matching(perm: Sequence[int]) -> np.ndarray:
    """Perfect matching sending input ``i`` to output ``perm[i]`` (0-based)."""
    n = len(perm)
    m = np.zeros((n, n), dtype=np.int8)
    m[np.arange(n), list(perm)] = 1
    return m


@dataclass(frozen=True, eq=False)
class FrameSchedule:
    """T matchings, one per slot of a frame."""

    matchings: tuple

    def __post_init__(self):
        object.__setattr__(self, "matchings", tuple(as_binary(m, "matching") for m in self.matchings))

    @classmethod
    def from_list(cls, matchings: Iterable) -> "FrameSchedule":
        return cls(tuple(matchings))

    @property
    def t(self) -> int:
        return len(self.matchings)

    @property
    def n(self) -> int:
        return self.matchings[0].shape[0]

    def coverage(self) -> np.ndarray:
        """Entrywise sum of the matchings (the B matrix when disjoint)."""
        return np.sum(self.matchings, axis=0, dtype=np.int64)

    def weight(self, w) -> float:
        """Total weight of covered positions, counting each position once."""
        covered = self.coverage() > 0
        w = np.asarray(w)
        return sum(w[i, j] for i, j in zip(*np.nonzero(covered)))

    def __eq__(self, other):
        if not isinstance(other, FrameSchedule) or other.t != self.t:
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.matchings, other.matchings))

    def __iter__(self):
        return iter(self.matchings)


def is_t_disjoint(schedule: FrameSchedule, config: SwitchConfig | None = None) -> bool:
    """True iff no position is selected by more than one matching of the frame."""
    if config is not None and schedule.t != config.t:
        raise ValidationError(f"schedule has {schedule.t} matchings, expected T={config.t}")
    if not all(is_matching(m) for m in schedule.matchings):
        raise ValidationError("every slot action must be a matching")
    return bool(schedule.coverage().max() <= 1)


def full_backlog(n: int) -> np.ndarray:
    return np.ones((n, n), dtype=np.int8)


@dataclass(frozen=True, eq=False)
class DeliveryRecord:
    slot: int
    deliveries: np.ndarray


def advance_slot(backlog, action, slot: int, config: SwitchConfig) -> tuple[np.ndarray, DeliveryRecord]:
    """Play ``action`` at global ``slot``; return the next backlog and the deliveries.

    A delivery happens where the action selects a non-empty VOQ. At the last
    slot of a frame leftovers expire and every VOQ receives a fresh packet, so
    the returned backlog is all ones.
    """
    backlog = as_binary(backlog, "backlog")
    action = as_binary(action, "action")
    if backlog.shape != (config.n, config.n) or action.shape != backlog.shape:
        raise ValidationError("backlog/action shape does not match switch size")
    if not is_matching(action):
        raise ValidationError("action is not a matching")
    return step_unchecked(backlog, action, slot, config)


def step_unchecked(backlog: np.ndarray, action: np.ndarray, slot: int, config: SwitchConfig):
    """``advance_slot`` for int8 inputs already known to be valid."""
    delivered = backlog & action
    if slot % config.t == 0:
        nxt = full_backlog(config.n)
    else:
        nxt = backlog - delivered
    return nxt, DeliveryRecord(slot, delivered)


def to_fraction(value) -> Fraction:
    """Exact rational from int, Fraction, decimal string or ``{"num", "den"}``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, dict):
        try:
            return Fraction(int(value["num"]), int(value["den"]))
        except (KeyError, TypeError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad rational {value!r}") from exc
    if isinstance(value, (bool, np.bool_)):
        raise ValidationError(f"bad rational {value!r}")
    if isinstance(value, (int, np.integer, str)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad rational {value!r}") from exc
    if isinstance(value, (float, np.floating)):
        # Floats are snapped to the nearest small-denominator rational.
        return Fraction(float(value)).limit_denominator(10**6)
    raise ValidationError(f"bad rational {value!r}")


def fraction_matrix(m) -> np.ndarray:
    """Square object array of Fractions."""
    rows = [list(r) for r in m]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValidationError("rate matrix must be square")
    out = np.empty((n, n), dtype=object)
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            out[i, j] = to_fraction(v)
    return out


def check_rate_matrix(r, config: SwitchConfig | None = None) -> np.ndarray:
    arr = _as_square(r, "rate matrix")
    if config is not None and arr.shape[0] != config.n:
        raise ValidationError(f"rate matrix is {arr.shape[0]}x{arr.shape[0]}, expected N={config.n}")
    if np.any(arr < 0):
        raise ValidationError("rate matrix entries must be nonnegative")
    return arr
