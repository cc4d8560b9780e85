"""Command-line entry point: ``mtdgame <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .baselines import solve_ps, solve_rs
from .exceptions import MTDError, ValidationError
from .experiments import SweepSpec, oracle_check, run_sweep
from .game_core import DefenseStrategy
from .scenario import load_scenario
from .simulator import replicate
from .value_iteration import value_iteration

logger = logging.getLogger("mtdgame")


def _write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}", what) from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}", what) from None


def cmd_solve(args):
    sc = load_scenario(args.scenario)
    report = value_iteration(sc, max_iter=args.max_iter, strict=not args.relaxed)
    _write_json(report.to_dict(), args.out)
    print(f"g_est={report.g_est:.6g} bracket=[{report.g_lo:.6g}, {report.g_hi:.6g}] iterations={report.iterations}")


def cmd_baseline(args):
    sc = load_scenario(args.scenario)
    res = solve_rs(sc) if args.policy == "rs" else solve_ps(sc)
    _write_json(res.to_dict(), args.out)
    print(f"{args.policy}: objective={res.objective:.6g} tau*={res.tau_star:g}")


def cmd_simulate(args):
    sc = load_scenario(args.scenario)
    strategy = DefenseStrategy.from_dict(_read_json(args.strategy, "strategy"))
    strategy.validate(tau_bounds=(sc.tau_min, sc.tau_max))
    results = replicate(strategy, sc, args.horizon, args.trials, args.seed)
    with open(args.out, "w", newline="") as fh:
        writer = None
        for t, r in enumerate(results):
            row = {"trial": t, **r.to_row()}
            if writer is None:
                writer = csv.DictWriter(fh, fieldnames=list(row), lineterminator="\n")
                writer.writeheader()
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    mean = sum(r.empirical_cost for r in results) / len(results)
    print(f"mean empirical cost over {len(results)} trials: {mean:.6g}")


def cmd_sweep(args):
    data = _read_json(args.spec, "spec")
    if args.paper_scale and isinstance(data, dict):
        data["full_scale"] = True
    spec = SweepSpec.from_dict(data)
    if args.timing:
        spec.record_timing = True
    rows = run_sweep(spec, args.out, workers=args.workers)
    bad = sum(1 for r in rows if r.get("note", "").startswith("error"))
    print(f"wrote {len(rows)} rows to {args.out} ({bad} failed)")


def cmd_oracle_check(args):
    rep = oracle_check(args.count, args.n, args.seed, resolution=args.resolution, mode=args.mode)
    print(f"instances={rep.count} max_deviation={rep.max_deviation:.3e} "
          f"max_excess_over_bound={rep.max_excess:.3e} failures={rep.failures}")
    if not rep.ok:
        raise MTDError(f"{rep.failures} instances disagree with the oracle")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtdgame", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="value iteration on a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--relaxed", action="store_true", help="warn instead of failing when alpha > 1/(n*rho)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("baseline", help="RS or PS heuristic")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", choices=["rs", "ps"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("simulate", help="Monte Carlo playout of a strategy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--paper-scale", action="store_true", help="10x10 trials, full axes, sampled overlaps")
    p.add_argument("--timing", action="store_true", help="fill wall_time_ms (output no longer reproducible)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="Min-Max solver vs brute-force oracle")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--mode", choices=["auto", "grid", "structured"], default="auto")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (MTDError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
