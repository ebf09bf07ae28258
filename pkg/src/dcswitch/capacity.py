"""Capacity region of the frame-synchronized switch and utility maximisation over it.

A rate matrix R is achievable with frame length T iff all column sums and
row sums are at most 1 and every entry is at most 1/T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .combinat import max_weight_degree_constrained_subgraph
from .core import FrameSchedule, SwitchConfig, ValidationError, check_rate_matrix, permutation_matching

FLOAT_TOL = 1e-12


@dataclass(frozen=True)
class CapacityVerdict:
    feasible: bool
    # (kind, index, slack); kind in {"row", "column", "entry-cap"}, slack < 0 when violated
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.feasible


def _is_exact(arr: np.ndarray) -> bool:
    return all(isinstance(x, (int, Fraction, np.integer)) and not isinstance(x, bool) for x in arr.flat)


def check_capacity(r, config: SwitchConfig) -> CapacityVerdict:
    """Test membership of ``r`` in the capacity region for ``config``.

    Exact for integer/Fraction entries; float entries get an absolute
    tolerance of 1e-12. Indices in violations are 0-based.
    """
    obj = np.asarray(r, dtype=object)
    exact = _is_exact(obj)
    arr = check_rate_matrix(obj if exact else obj.astype(float), config)
    tol = 0 if exact else FLOAT_TOL
    one = 1
    cap = Fraction(1, config.t) if exact else 1.0 / config.t
    violations = []
    n = config.n
    for j in range(n):
        slack = one - sum(arr[:, j])
        if slack < -tol:
            violations.append(("column", j, slack))
    for i in range(n):
        slack = one - sum(arr[i, :])
        if slack < -tol:
            violations.append(("row", i, slack))
    for i in range(n):
        for j in range(n):
            slack = cap - arr[i, j]
            if slack < -tol:
                violations.append(("entry-cap", (i, j), slack))
    return CapacityVerdict(not violations, violations)


def maximize_linear_utility(w, config: SwitchConfig) -> tuple[np.ndarray, float]:
    """Maximise sum(w * R) over the capacity region.

    Vertices of the region have entries in {0, 1/T} forming a subgraph of
    degree at most T, so the optimum is an optimal degree-bounded selection
    scaled by 1/T.
    """
    w = np.asarray(w)
    if w.shape != (config.n, config.n):
        raise ValidationError(f"weights must be {config.n}x{config.n}")
    c = max_weight_degree_constrained_subgraph(w, config.t)
    r = c.astype(float) / config.t
    value = float(sum(w[i, j] for i, j in zip(*np.nonzero(c)))) / config.t
    return r, value


@dataclass
class UtilitySpec:
    """Network utility: ``linear`` with weight matrix ``w`` or a ``concave`` callable.

    For the concave kind, ``value(R)`` returns the total utility and
    ``gradient(R)`` an N x N array of partial derivatives.
    """

    kind: str
    w: np.ndarray | None = None
    value: Callable | None = None
    gradient: Callable | None = None

    @classmethod
    def linear(cls, w) -> "UtilitySpec":
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            raise ValidationError("linear utility weights must be nonnegative")
        return cls("linear", w=w)

    @classmethod
    def separable(cls, f: Callable, df: Callable) -> "UtilitySpec":
        """Same scalar utility ``f`` (derivative ``df``) applied to every VOQ."""
        return cls(
            "concave",
            value=lambda R: float(np.sum(f(np.asarray(R, dtype=float)))),
            gradient=lambda R: np.asarray(df(np.asarray(R, dtype=float)), dtype=float),
        )

    def evaluate(self, R) -> float:
        if self.kind == "linear":
            return float(np.sum(self.w * R))
        return self.value(R)

    def grad(self, R) -> np.ndarray:
        if self.kind == "linear":
            return self.w
        return self.gradient(R)


class ConvergenceError(RuntimeError):
    def __init__(self, message, best, gap):
        super().__init__(message)
        self.best = best
        self.gap = gap


def maximize_concave_utility(
    u: UtilitySpec, config: SwitchConfig, tolerance: float = 1e-6, max_iter: int = 10_000
) -> np.ndarray:
    """Conditional-gradient (Frank-Wolfe) maximisation over the capacity region.

    Each linear subproblem is ``maximize_linear_utility`` with the current
    gradient (negative components clipped to zero, which cannot change the
    maximiser for increasing utilities). Step size 2/(k+2). Stops when the
    duality gap drops to ``tolerance``.
    """
    n = config.n
    if u.kind not in ("linear", "concave"):
        raise ValidationError(f"unknown utility kind {u.kind!r}")
    g0 = np.asarray(u.grad(np.zeros((n, n))), dtype=float)
    if g0.shape != (n, n) or not np.all(np.isfinite(g0)):
        raise ValidationError("utility must be differentiable with a finite gradient at 0")
    R = np.zeros((n, n))
    gap = np.inf
    for k in range(max_iter):
        g = np.clip(np.asarray(u.grad(R), dtype=float), 0.0, None)
        S, _ = maximize_linear_utility(g, config)
        gap = float(np.sum(g * (S - R)))
        if gap <= tolerance:
            return R
        step = 2.0 / (k + 2)
        R = R + step * (S - R)
    raise ConvergenceError(f"no convergence in {max_iter} iterations (gap {gap:.3g})", R, gap)


def circular_shift_schedule(config: SwitchConfig) -> FrameSchedule:
    """Frame delivering every packet when T >= N.

    Slot k (1-based, k <= N) plays the identity permutation right-shifted
    k-1 times; remaining slots are idle.
    """
    n, t = config.n, config.t
    if t < n:
        raise ValidationError(f"circular shift needs T >= N (T={t}, N={n})")
    base = list(range(n))
    out = []
    for k in range(t):
        if k < n:
            perm = base[n - k :] + base[: n - k]
            out.append(permutation_matching(perm))
        else:
            out.append(np.zeros((n, n), dtype=np.int8))
    return FrameSchedule(tuple(out))
