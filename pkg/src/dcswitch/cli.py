"""Command-line entry point.

Exit codes: 0 success, 1 validation/usage error, 2 negative verdict
(infeasible rate matrix, failed selftest check).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import check_capacity, maximize_linear_utility
from .combinat import build_appendix_b_matrix, greedy_iterative_mwm, integer_determinant, solve_t_disjoint_max_weight
from .core import SwitchConfig, ValidationError, fraction_matrix
from .experiments import EXPERIMENTS, GREEDY_COUNTEREXAMPLE_Q, reproduce
from .mdp import ScaleCapError, solve_num_lp
from .sim import load_experiment_config, run_simulation, write_traces
from .schedulers import make_policy

OUTPUT_ENV = "DCSWITCH_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _load_matrix(path, name):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{name}: cannot read {path} ({exc})") from exc
    if isinstance(doc, dict):
        doc = doc.get(name, doc.get("matrix"))
    if not isinstance(doc, list) or not all(isinstance(r, list) for r in doc):
        raise ValidationError(f"{name}: expected a JSON matrix (list of rows)")
    return doc


def _check_size(arr, n, name):
    if arr.shape != (n, n):
        raise ValidationError(f"{name}: matrix is {arr.shape[0]}x{arr.shape[1] if arr.ndim > 1 else '?'}, expected {n}x{n}")


def _output_dir(arg, fallback):
    return Path(arg or os.environ.get(OUTPUT_ENV) or fallback)


def cmd_capacity_check(args):
    raw = _load_matrix(args.rate_file, "rates")
    if any(isinstance(x, float) for row in raw for x in row):
        r = np.asarray(raw, dtype=float)
    else:
        r = fraction_matrix(raw)
    _check_size(r, args.n, "rates")
    verdict = check_capacity(r, SwitchConfig(args.n, args.t))
    if verdict.feasible:
        print("feasible")
        return 0
    print("infeasible")
    for kind, index, slack in verdict.violations:
        where = f"{index[0] + 1},{index[1] + 1}" if isinstance(index, tuple) else str(index + 1)
        print(f"  {kind} {where}: slack {float(slack):.6g}")
    return 2


def cmd_num(args):
    w = np.asarray(_load_matrix(args.weights, "weights"), dtype=float)
    _check_size(w, args.n, "weights")
    config = SwitchConfig(args.n, args.t)
    if args.method == "mdp":
        value, _, r = solve_num_lp(w, config)
    else:
        r, value = maximize_linear_utility(w, config)
    print(json.dumps({"method": args.method, "value": value, "rates": np.round(r, 12).tolist()}))
    return 0


def cmd_mdp_solve(args):
    w = np.asarray(_load_matrix(args.weights, "weights"), dtype=float)
    _check_size(w, args.n, "weights")
    value, occ, r = solve_num_lp(w, SwitchConfig(args.n, args.t))
    print(
        json.dumps(
            {
                "value": value,
                "rates": np.round(r, 12).tolist(),
                "states_per_slot": [len(layer) for layer in occ.instance.states],
                "actions": len(occ.instance.actions),
                "variables": occ.instance.num_variables(),
            }
        )
    )
    return 0


def cmd_simulate(args):
    config = load_experiment_config(args.config)
    out = _output_dir(args.out, config.output or "results/simulate")
    traces = []
    runtimes = {}
    for name in config.policies:
        start = time.perf_counter()
        traces.append(run_simulation(config, make_policy(name, config.switch, config.target)))
        runtimes[name] = round(time.perf_counter() - start, 3)
    files = write_traces(traces, out)
    manifest = {
        "seed": config.seed,
        "config_hash": config.digest(),
        "config": config.to_json(),
        "files": [f.name for f in files],
        "version": __version__,
        "wall_clock_seconds": runtimes,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    for tr in traces:
        print(f"{tr.policy}: final gap {tr.final_gap:.6f}")
    return 0


def cmd_reproduce(args):
    out = _output_dir(args.out, "results")
    manifest = reproduce(args.name, out, horizon=args.horizon, seed=args.seed, workers=args.workers)
    print(f"{args.name}: wrote {', '.join(manifest['files'])} to {out} ({manifest['wall_clock_seconds']} s)")
    return 0


def selftest_checks() -> list[tuple[str, bool, str]]:
    q = GREEDY_COUNTEREXAMPLE_Q
    optimal = solve_t_disjoint_max_weight(q, 2).weight(q)
    greedy = greedy_iterative_mwm(q, 2).weight(q)
    c = build_appendix_b_matrix(2, 3)
    rows = [x - 1 for x in (1, 3, 6, 12, 14, 15, 16)]
    cols = [x - 1 for x in (1, 2, 3, 7, 8, 10, 12)]
    det = integer_determinant(c[np.ix_(rows, cols)])
    return [
        ("optimal T-disjoint matching weight", optimal == 17, f"{optimal} (expected 17)"),
        ("greedy iterated matching weight", greedy == 15, f"{greedy} (expected 15)"),
        ("slot-indexed constraint submatrix determinant", det == -2, f"{det} (expected -2)"),
    ]


def cmd_selftest(args):
    ok = True
    for label, passed, detail in selftest_checks():
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dcswitch", description="Delay-constrained input-queued switch toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the policies of a JSON experiment config")
    s.add_argument("config")
    s.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV}, config 'output', results/simulate)")
    s.set_defaults(func=cmd_simulate)

    cap = sub.add_parser("capacity", help="capacity region tools")
    capsub = cap.add_subparsers(dest="capacity_command", required=True, parser_class=_Parser)
    chk = capsub.add_parser("check", help="test a rate matrix against the capacity region")
    chk.add_argument("rate_file")
    chk.add_argument("--n", type=int, required=True)
    chk.add_argument("--t", type=int, required=True)
    chk.set_defaults(func=cmd_capacity_check)

    num = sub.add_parser("num", help="maximise a linear network utility")
    num.add_argument("--weights", required=True)
    num.add_argument("--n", type=int, required=True)
    num.add_argument("--t", type=int, required=True)
    num.add_argument("--method", choices=("combinatorial", "mdp"), default="combinatorial")
    num.set_defaults(func=cmd_num)

    mdp = sub.add_parser("mdp", help="exact MDP oracle (small N, T)")
    mdpsub = mdp.add_subparsers(dest="mdp_command", required=True, parser_class=_Parser)
    solve = mdpsub.add_parser("solve", help="solve the occupancy-measure LP for linear utility")
    solve.add_argument("--n", type=int, required=True)
    solve.add_argument("--t", type=int, required=True)
    solve.add_argument("--weights", required=True)
    solve.set_defaults(func=cmd_mdp_solve)

    rep = sub.add_parser("reproduce", help="regenerate an experiment's CSV")
    rep.add_argument("name", choices=EXPERIMENTS)
    rep.add_argument("--out")
    rep.add_argument("--horizon", type=int)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--workers", type=int, default=1)
    rep.set_defaults(func=cmd_reproduce)

    st = sub.add_parser("selftest", help="check the greedy counterexample and non-unimodularity witness")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ScaleCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
