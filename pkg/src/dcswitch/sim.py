"""Slot-driven simulation, throughput metrics and experiment configuration."""

from __future__ import annotations

import csv
import hashlib
import json
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .capacity import maximize_linear_utility
from .core import SwitchConfig, ValidationError, fraction_matrix, full_backlog, is_matching, is_t_disjoint, step_unchecked
from .schedulers import POLICY_NAMES, Policy, make_policy

DEFAULT_HORIZON = 10_000
DEFAULT_CHECKPOINT = 100


def throughput_gap(emp, target) -> float:
    """Sum over VOQs of the shortfall max(target - emp, 0)."""
    emp = np.asarray(emp, dtype=float)
    target = np.asarray(target, dtype=float)
    if emp.shape != target.shape:
        raise ValidationError(f"shape mismatch {emp.shape} vs {target.shape}")
    return float(np.sum(np.maximum(target - emp, 0.0)))


def policy_rng(seed: int, policy_name: str) -> np.random.Generator:
    """Independent PCG64 stream per (seed, policy name).

    The stream key is the CRC32 of the policy name, so adding policies to a
    config never perturbs the streams of the others.
    """
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(policy_name.encode())])
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class ExperimentConfig:
    n: int
    t: int
    target: np.ndarray  # object array of Fractions
    policies: tuple = ("tmwm",)
    horizon_slots: int = DEFAULT_HORIZON
    weights: np.ndarray | None = None
    seed: int = 0
    checkpoint_interval: int = DEFAULT_CHECKPOINT
    output: str | None = None

    def __post_init__(self):
        self.switch = SwitchConfig(self.n, self.t)
        if self.horizon_slots < 1 or self.horizon_slots % self.t:
            raise ValidationError(f"horizon_slots must be a positive multiple of T={self.t}")
        if self.checkpoint_interval < 1:
            raise ValidationError("checkpoint_interval must be positive")
        if self.target.shape != (self.n, self.n):
            raise ValidationError(f"target must be {self.n}x{self.n}")
        for p in self.policies:
            if p not in POLICY_NAMES:
                raise ValidationError(f"policies: unknown policy {p!r}")

    @property
    def target_float(self) -> np.ndarray:
        return self.target.astype(float)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "horizon_slots": self.horizon_slots,
            "policies": list(self.policies),
            "target": [[{"num": x.numerator, "den": x.denominator} for x in row] for row in self.target],
            "weights": None if self.weights is None else np.asarray(self.weights, dtype=float).tolist(),
            "seed": self.seed,
            "checkpoint_interval": self.checkpoint_interval,
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()


def num_target(weights, config: SwitchConfig) -> np.ndarray:
    """Rate matrix maximising sum(w * R) over the capacity region, as exact Fractions."""
    r, _ = maximize_linear_utility(weights, config)
    c = np.rint(r * config.t).astype(int)
    return np.array([[Fraction(int(x), config.t) for x in row] for row in c], dtype=object)


def parse_experiment_config(doc: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a decoded JSON document.

    Rates are rationals: ``{"num": int, "den": int}``, ints, or strings such
    as ``"3/10"``. Without ``target``, ``weights`` are used to derive one by
    linear utility maximisation.
    """
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")

    def get(name, default=..., kind=int):
        if name not in doc:
            if default is ...:
                raise ValidationError(f"{name}: missing required field")
            return default
        value = doc[name]
        if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
            raise ValidationError(f"{name}: expected an integer, got {value!r}")
        return value

    n = get("n")
    t = get("t")
    try:
        switch = SwitchConfig(n, t)
    except ValidationError as exc:
        raise ValidationError(f"n/t: {exc}") from exc
    weights = None
    if doc.get("weights") is not None:
        try:
            weights = np.asarray(doc["weights"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"weights: {exc}") from exc
        if weights.shape != (n, n) or np.any(weights < 0):
            raise ValidationError(f"weights: expected a nonnegative {n}x{n} matrix")
    if doc.get("target") is not None:
        raw = doc["target"]
        if any(isinstance(x, float) for row in raw for x in row):
            raise ValidationError("target: rates must be exact rationals ({num, den}, int or string), not floats")
        try:
            target = fraction_matrix(raw)
        except (ValidationError, TypeError) as exc:
            raise ValidationError(f"target: {exc}") from exc
        if target.shape != (n, n):
            raise ValidationError(f"target: expected a {n}x{n} matrix")
        if any(x < 0 for x in target.flat):
            raise ValidationError("target: rates must be nonnegative")
    elif weights is not None:
        target = num_target(weights, switch)
    else:
        raise ValidationError("target: missing (give target or weights)")
    policies = doc.get("policies", ["tmwm"])
    if isinstance(policies, str):
        policies = [policies]
    try:
        return ExperimentConfig(
            n=n,
            t=t,
            target=target,
            policies=tuple(policies),
            horizon_slots=get("horizon_slots", DEFAULT_HORIZON),
            weights=weights,
            seed=get("seed", 0),
            checkpoint_interval=get("checkpoint_interval", DEFAULT_CHECKPOINT),
            output=doc.get("output"),
        )
    except ValidationError as exc:
        raise ValidationError(str(exc)) from exc


def load_experiment_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return parse_experiment_config(doc)


@dataclass
class SimTrace:
    config: SwitchConfig
    policy: str
    seed: int
    horizon: int
    cumulative: np.ndarray
    checkpoint_slots: list = field(default_factory=list)
    checkpoint_rates: list = field(default_factory=list)
    checkpoint_gaps: list = field(default_factory=list)

    @property
    def final_rates(self) -> np.ndarray:
        return self.cumulative / self.horizon

    @property
    def final_gap(self) -> float:
        return self.checkpoint_gaps[-1]


def run_simulation(config: ExperimentConfig, policy: Policy, rng: np.random.Generator | None = None) -> SimTrace:
    """Drive the switch for ``config.horizon_slots`` slots under ``policy``.

    Frame policies are consulted at each frame's first slot, slot policies
    every slot. Empirical rates and gaps are recorded every
    ``checkpoint_interval`` slots and at the horizon.
    """
    switch = config.switch
    if policy.config != switch:
        raise ValidationError("policy was built for a different switch")
    if rng is None:
        rng = policy_rng(config.seed, policy.name)
    target = config.target_float
    T = switch.t
    backlog = full_backlog(switch.n)
    cum = np.zeros((switch.n, switch.n), dtype=np.int64)
    trace = SimTrace(switch, policy.name, config.seed, config.horizon_slots, cum)
    schedule = checked = None
    frame_policy = policy.kind == "frame"
    for slot in range(1, config.horizon_slots + 1):
        k = (slot - 1) % T
        if frame_policy:
            if k == 0:
                schedule = policy.plan_frame((slot - 1) // T, backlog, rng)
                if schedule.t != T or schedule.n != switch.n:
                    raise ValidationError(f"{policy.name} produced a schedule of the wrong shape")
                if schedule is not checked and not is_t_disjoint(schedule):
                    raise ValidationError(f"{policy.name} produced overlapping matchings")
                checked = schedule
            action = schedule.matchings[k]
        else:
            action = policy.step(slot, backlog, rng)
            if action.shape != backlog.shape or not is_matching(action):
                raise ValidationError(f"{policy.name} produced an invalid matching at slot {slot}")
        backlog, record = step_unchecked(backlog, action.astype(np.int8, copy=False), slot, switch)
        cum += record.deliveries
        if slot % config.checkpoint_interval == 0 or slot == config.horizon_slots:
            rates = cum / slot
            trace.checkpoint_slots.append(slot)
            trace.checkpoint_rates.append(rates)
            trace.checkpoint_gaps.append(throughput_gap(rates, target))
    return trace


def simulate_all(config: ExperimentConfig, rcs_table=None) -> list[SimTrace]:
    traces = []
    for name in config.policies:
        policy = make_policy(name, config.switch, config.target, rcs_table=rcs_table)
        traces.append(run_simulation(config, policy))
    return traces


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def fmt(x) -> str:
    """Stable float rendering for CSV output."""
    return repr(float(x))


def write_traces(traces: list[SimTrace], out_dir) -> list[Path]:
    """``gaps.csv`` (slot, gap_<policy>...) and ``rates.csv`` (policy, i, j, rate)."""
    out_dir = Path(out_dir)
    slots = traces[0].checkpoint_slots
    gap_rows = [[s] + [fmt(tr.checkpoint_gaps[k]) for tr in traces] for k, s in enumerate(slots)]
    write_csv(out_dir / "gaps.csv", ["slot"] + [f"gap_{tr.policy}" for tr in traces], gap_rows)
    rate_rows = []
    for tr in traces:
        for (i, j), v in np.ndenumerate(tr.final_rates):
            rate_rows.append([tr.policy, i + 1, j + 1, int(tr.cumulative[i, j]), fmt(v)])
    write_csv(out_dir / "rates.csv", ["policy", "input", "output", "delivered", "rate"], rate_rows)
    return [out_dir / "gaps.csv", out_dir / "rates.csv"]
