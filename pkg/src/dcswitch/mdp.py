"""Exact MDP view of the switch for small instances.

States are N x N 0/1 backlog matrices, actions are perfect matchings. The
per-slot occupancy measure x_t(s, a) of a cyclo-stationary policy obeys
linear flow-balance constraints, so utility maximisation and capacity
membership become LPs. Sizes grow as 2^(N^2) * N!, hence the hard cap.

Internally a state is an int bitmask with bit ``i*N + j`` set when VOQ(i, j)
holds a packet.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .core import SwitchConfig, ValidationError, as_binary

MAX_N = 3
MAX_T = 5
FEASIBILITY_TOL = 1e-9


class ScaleCapError(ValueError):
    """Instance too large for exhaustive state enumeration."""


def _check_scale(config: SwitchConfig) -> None:
    if config.n > MAX_N or config.t > MAX_T:
        raise ScaleCapError(f"MDP oracle limited to N <= {MAX_N}, T <= {MAX_T} (got N={config.n}, T={config.t})")


def encode(m) -> int:
    arr = as_binary(m, "state")
    bits = 0
    for k, x in enumerate(arr.flat):
        if x:
            bits |= 1 << k
    return bits


def decode(bits: int, n: int) -> np.ndarray:
    return np.array([(bits >> k) & 1 for k in range(n * n)], dtype=np.int8).reshape(n, n)


def perm_mask(perm, n: int) -> int:
    return sum(1 << (i * n + j) for i, j in enumerate(perm))


def transition(s, a, t: int, config: SwitchConfig) -> np.ndarray:
    """Next backlog after playing perfect matching ``a`` in state ``s`` at in-frame slot ``t``."""
    s = as_binary(s, "state")
    a = as_binary(a, "action")
    if not (np.all(a.sum(axis=0) == 1) and np.all(a.sum(axis=1) == 1)):
        raise ValidationError("MDP actions are perfect matchings")
    if t % config.t == 0:
        return np.ones_like(s)
    return (s & (1 - a)).astype(np.int8)


def reward(s, a) -> np.ndarray:
    """Per-VOQ reward: 1 where a present packet is selected."""
    return (as_binary(s, "state") & as_binary(a, "action")).astype(np.int8)


@dataclass
class MdpInstance:
    """State and action enumeration for one (N, T).

    ``states[t]`` lists the states considered at in-frame slot t+1. With
    pruning these are the states reachable from the full backlog at frame
    start; without it every slot carries all 2^(N^2) states.
    """

    config: SwitchConfig
    actions: list
    action_masks: list
    states: list
    pruned: bool

    @classmethod
    def build(cls, config: SwitchConfig, prune: bool = True) -> "MdpInstance":
        _check_scale(config)
        n, T = config.n, config.t
        actions = list(permutations(range(n)))
        masks = [perm_mask(p, n) for p in actions]
        full = (1 << (n * n)) - 1
        if prune:
            layer = [full]
            states = [layer]
            for _ in range(T - 1):
                nxt = sorted({s & ~m for s in layer for m in masks})
                states.append(nxt)
                layer = nxt
        else:
            states = [list(range(full + 1)) for _ in range(T)]
        return cls(config, actions, masks, states, prune)

    @property
    def full_state(self) -> int:
        return (1 << (self.config.n ** 2)) - 1

    def next_state(self, s: int, a_idx: int, t: int) -> int:
        """Bitmask transition at in-frame slot t (1-based)."""
        if t % self.config.t == 0:
            return self.full_state
        return s & ~self.action_masks[a_idx]

    def num_variables(self) -> int:
        return sum(len(layer) for layer in self.states) * len(self.actions)


@dataclass
class OccupancyMeasure:
    """x_t(s, a): ``x[t][k, a]`` is the mass on state ``instance.states[t][k]`` and action a."""

    instance: MdpInstance
    x: list

    def get(self, t: int, s: int, a_idx: int) -> float:
        """Lookup by 1-based in-frame slot and bitmask state."""
        layer = self.instance.states[t - 1]
        k = layer.index(s)
        return float(self.x[t - 1][k, a_idx])

    def slot_totals(self) -> list[float]:
        return [float(xt.sum()) for xt in self.x]

    def rates(self) -> np.ndarray:
        """Per-slot average reward of every VOQ."""
        inst = self.instance
        n, T = inst.config.n, inst.config.t
        total = np.zeros(n * n)
        for t in range(T):
            for k, s in enumerate(inst.states[t]):
                for a, m in enumerate(inst.action_masks):
                    mass = self.x[t][k, a]
                    if mass:
                        total += mass * decode(s & m, n).ravel()
        return total.reshape(n, n) / T


def _lp_structure(inst: MdpInstance):
    """Equality constraints of the occupancy polytope plus the reward map.

    Returns (A_eq, b_eq, reward matrix G with rates = G @ x, offsets) where
    offsets[t] is the first variable index of slot t.
    """
    n, T = inst.config.n, inst.config.t
    na = len(inst.actions)
    offsets = [0]
    for layer in inst.states:
        offsets.append(offsets[-1] + len(layer) * na)
    nvar = offsets[-1]
    index = [{s: k for k, s in enumerate(layer)} for layer in inst.states]

    rows, cols, vals = [], [], []
    b = []
    r = 0
    for t in range(T):
        # inflow into slot t+1 (wrapping to slot 1 after slot T)
        nt = (t + 1) % T
        inflow: dict[int, list[int]] = {}
        for k, s in enumerate(inst.states[t]):
            for a in range(na):
                s2 = inst.next_state(s, a, t + 1)
                if s2 not in index[nt]:
                    raise AssertionError("state enumeration not closed under transitions")
                inflow.setdefault(s2, []).append(offsets[t] + k * na + a)
        for k2, s2 in enumerate(inst.states[nt]):
            for a in range(na):
                rows.append(r)
                cols.append(offsets[nt] + k2 * na + a)
                vals.append(1.0)
            for v in inflow.get(s2, []):
                rows.append(r)
                cols.append(v)
                vals.append(-1.0)
            b.append(0.0)
            r += 1
    for t in range(T):
        for v in range(offsets[t], offsets[t + 1]):
            rows.append(r)
            cols.append(v)
            vals.append(1.0)
        b.append(1.0)
        r += 1
    A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(r, nvar))

    g_rows, g_cols = [], []
    for t in range(T):
        for k, s in enumerate(inst.states[t]):
            for a, m in enumerate(inst.action_masks):
                hit = s & m
                for q in range(n * n):
                    if (hit >> q) & 1:
                        g_rows.append(q)
                        g_cols.append(offsets[t] + k * na + a)
    G = sp.csr_matrix((np.full(len(g_rows), 1.0 / T), (g_rows, g_cols)), shape=(n * n, nvar))
    return A_eq, np.array(b), G, offsets


def _split(inst: MdpInstance, xvec: np.ndarray, offsets) -> OccupancyMeasure:
    na = len(inst.actions)
    xs = []
    for t, layer in enumerate(inst.states):
        chunk = np.clip(xvec[offsets[t] : offsets[t + 1]], 0.0, None)
        xs.append(chunk.reshape(len(layer), na))
    return OccupancyMeasure(inst, xs)


def solve_num_lp(w, config: SwitchConfig, prune: bool = True):
    """Maximise sum(w * R) over cyclo-stationary occupancy measures.

    Returns (optimal value, occupancy measure, rate matrix). The rate
    coupling is tight at the optimum for nonnegative weights, so R is
    substituted by the achieved per-slot reward.
    """
    inst = MdpInstance.build(config, prune)
    w = np.asarray(w, dtype=float)
    if w.shape != (config.n, config.n):
        raise ValidationError(f"weights must be {config.n}x{config.n}")
    A_eq, b_eq, G, offsets = _lp_structure(inst)
    c = -(G.T @ w.ravel())
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"occupancy LP failed: {res.message}")
    occ = _split(inst, res.x, offsets)
    R = (G @ res.x).reshape(config.n, config.n)
    return float(-res.fun), occ, R


def find_occupancy(r, config: SwitchConfig, prune: bool = True) -> OccupancyMeasure | None:
    """An occupancy measure whose rewards dominate ``r``, or None if none exists.

    Solved as: minimise total shortfall sum(max(r - rewards, 0)); the target
    is feasible iff that minimum is (numerically) zero.
    """
    inst = MdpInstance.build(config, prune)
    r = np.asarray(r, dtype=float)
    if r.shape != (config.n, config.n):
        raise ValidationError(f"rate matrix must be {config.n}x{config.n}")
    A_eq, b_eq, G, offsets = _lp_structure(inst)
    nq = config.n ** 2
    nvar = A_eq.shape[1]
    # variables: x (nvar) then shortfall (nq); G x + shortfall >= r
    A_eq_full = sp.hstack([A_eq, sp.csr_matrix((A_eq.shape[0], nq))]).tocsr()
    A_ub = sp.hstack([-G, -sp.identity(nq)]).tocsr()
    b_ub = -r.ravel()
    c = np.concatenate([np.zeros(nvar), np.ones(nq)])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq_full, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"occupancy LP failed: {res.message}")
    if res.fun > FEASIBILITY_TOL:
        return None
    return _split(inst, res.x[:nvar], offsets)


def check_capacity_mdp(r, config: SwitchConfig, prune: bool = True) -> bool:
    """Capacity membership via the occupancy-measure LP."""
    return find_occupancy(r, config, prune) is not None


@dataclass
class RcsTable:
    """Per-slot conditional action laws of a randomized cyclo-stationary policy.

    ``dist[t][s]`` is ``(action indices, probabilities)`` for in-frame slot t+1;
    an empty pair marks a known state that the policy never visits.
    """

    config: SwitchConfig
    actions: list
    dist: list

    def law(self, t: int, s: int):
        return self.dist[t - 1][s]


def build_rcs_table(occ: OccupancyMeasure) -> RcsTable:
    """Normalise x_t(s, .) per state; zero-mass states keep an empty law."""
    inst = occ.instance
    dist = []
    for t, layer in enumerate(inst.states):
        xt = occ.x[t]
        slot = {}
        for k, s in enumerate(layer):
            row = xt[k]
            total = row.sum()
            if total <= 0:
                slot[s] = (np.zeros(0, dtype=int), np.zeros(0))
                continue
            idx = np.nonzero(row > 0)[0]
            slot[s] = (idx, row[idx] / total)
        dist.append(slot)
    return RcsTable(inst.config, inst.actions, dist)
