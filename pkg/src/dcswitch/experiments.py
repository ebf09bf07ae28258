"""Reproduction runs for the utility-equivalence, convergence and baseline-comparison experiments.

Each run writes one CSV plus ``<name>_manifest.json`` (seed, versions,
parameter hash, wall-clock) into the output directory.

CSV columns:
  fig3a: T, utility_combinatorial, utility_mdp, upper_bound
  fig3b: slot, gap_rcs, gap_tmwm
  fig4:  T, gap_tmwm, gap_mwm, gap_cto      (N = 8)
  fig5:  N, gap_tmwm, gap_mwm, gap_cto      (T = 4)
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .capacity import maximize_linear_utility
from .core import SwitchConfig, ValidationError
from .mdp import MAX_N, MAX_T, build_rcs_table, find_occupancy, solve_num_lp
from .schedulers import make_policy
from .sim import ExperimentConfig, fmt, num_target, run_simulation, write_csv

# 3x3 linear-utility weights used for the utility-equivalence check.
FIG3_WEIGHTS = np.array([[0.70, 0.84, 0.54], [0.51, 0.92, 0.44], [0.10, 0.30, 0.28]])

# Feasible 3x3 target for T = 2 (every row and column sums to exactly 1).
FIG3_TARGET = np.array(
    [[Fraction(x, 10) for x in row] for row in ([2, 4, 4], [3, 5, 2], [5, 1, 4])], dtype=object
)

# Queue weights on which greedy iterated matching loses (15 vs optimum 17 at T = 2).
GREEDY_COUNTEREXAMPLE_Q = np.array([[4, 4, 0], [4, 1, 4], [2, 1, 0]])

EXPERIMENTS = ("fig3a", "fig3b", "fig4", "fig5")
BASELINE_POLICIES = ("tmwm", "mwm", "cto")


def fig3a(max_t: int = 5) -> list[list]:
    rows = []
    n = FIG3_WEIGHTS.shape[0]
    for t in range(1, max_t + 1):
        cfg = SwitchConfig(n, t)
        _, comb = maximize_linear_utility(FIG3_WEIGHTS, cfg)
        mdp_value = solve_num_lp(FIG3_WEIGHTS, cfg)[0] if n <= MAX_N and t <= MAX_T else None
        rows.append([t, comb, mdp_value, float(FIG3_WEIGHTS.sum()) / t])
    return rows


def fig3b(horizon: int = 100_000, seed: int = 0, checkpoint: int = 100):
    cfg = ExperimentConfig(3, 2, FIG3_TARGET, ("rcs", "tmwm"), horizon, seed=seed, checkpoint_interval=checkpoint)
    occ = find_occupancy(cfg.target_float, cfg.switch)
    if occ is None:
        raise RuntimeError("target unexpectedly outside the MDP capacity region")
    table = build_rcs_table(occ)
    traces = [
        run_simulation(cfg, make_policy("rcs", cfg.switch, cfg.target, rcs_table=table)),
        run_simulation(cfg, make_policy("tmwm", cfg.switch, cfg.target)),
    ]
    rows = [[s, traces[0].checkpoint_gaps[k], traces[1].checkpoint_gaps[k]] for k, s in enumerate(traces[0].checkpoint_slots)]
    return rows


def random_weights(n: int, t: int, seed: int) -> np.ndarray:
    """Uniform(0, 1) weights from a stream keyed by (seed, N, T)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, n, t])))
    return rng.uniform(0.0, 1.0, size=(n, n))


def baseline_gaps(n: int, t: int, horizon: int = 10_000, seed: int = 0, policies=BASELINE_POLICIES) -> list[float]:
    """Final gap of each policy against the utility-optimal target for random weights."""
    switch = SwitchConfig(n, t)
    target = num_target(random_weights(n, t, seed), switch)
    horizon = horizon - horizon % t or t
    cfg = ExperimentConfig(n, t, target, tuple(policies), horizon, seed=seed, checkpoint_interval=horizon)
    return [run_simulation(cfg, make_policy(p, switch, target)).final_gap for p in policies]


def _baseline_job(args):
    return baseline_gaps(*args)


def _sweep(pairs, horizon, seed, workers):
    jobs = [(n, t, horizon, seed) for n, t in pairs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_baseline_job, jobs))
    return [_baseline_job(j) for j in jobs]


def fig4(horizon: int = 10_000, seed: int = 0, workers: int = 1, n: int = 8, t_values=range(1, 11)):
    t_values = list(t_values)
    gaps = _sweep([(n, t) for t in t_values], horizon, seed, workers)
    return [[t] + g for t, g in zip(t_values, gaps)]


def fig5(horizon: int = 10_000, seed: int = 0, workers: int = 1, t: int = 4, n_values=range(1, 11)):
    n_values = list(n_values)
    gaps = _sweep([(n, t) for n in n_values], horizon, seed, workers)
    return [[n] + g for n, g in zip(n_values, gaps)]


def _cell(x):
    return "" if x is None else (fmt(x) if isinstance(x, float) else x)


def reproduce(name: str, out_dir, horizon: int | None = None, seed: int = 0, workers: int = 1) -> dict:
    """Run one experiment and write its CSV and manifest; returns the manifest."""
    if name not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {name!r}; expected one of {', '.join(EXPERIMENTS)}")
    out_dir = Path(out_dir)
    params = {"experiment": name, "seed": seed}
    start = time.perf_counter()
    if name == "fig3a":
        header = ["T", "utility_combinatorial", "utility_mdp", "upper_bound"]
        rows = fig3a()
    elif name == "fig3b":
        params["horizon"] = horizon or 100_000
        header = ["slot", "gap_rcs", "gap_tmwm"]
        rows = fig3b(params["horizon"], seed)
    else:
        params["horizon"] = horizon or 10_000
        runner = fig4 if name == "fig4" else fig5
        header = ["T" if name == "fig4" else "N"] + [f"gap_{p}" for p in BASELINE_POLICIES]
        rows = runner(params["horizon"], seed, workers)
    elapsed = time.perf_counter() - start
    csv_path = out_dir / f"{name}.csv"
    write_csv(csv_path, header, [[_cell(x) for x in row] for row in rows])
    manifest = {
        **params,
        "config_hash": hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest(),
        "files": [csv_path.name],
        "versions": {
            "dcswitch": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "rng": "numpy PCG64 seeded by SeedSequence",
        "wall_clock_seconds": round(elapsed, 3),
    }
    (out_dir / f"{name}_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
