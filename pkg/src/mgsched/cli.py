"""Command-line driver: ``mgsched {solve,sweep,compare,validate,export-mps}``.

Exit codes: 0 success, 2 validation error, 3 infeasible, 4 solver limit.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .errors import DegenerateInstanceError, MgschedError, ScenarioError
from .milp import SolveOptions
from .reports import DEFAULT_SWEEP_VALUES, SWEEP_AXES, cmd_compare, cmd_export_mps, cmd_solve, cmd_sweep
from .reports import cmd_validate
from .scenario import load_scenario, reference_scenario
from .solve import EXIT_LIMIT, EXIT_OK, EXIT_VALIDATION, METHODS


def _load(args):
    sc = reference_scenario() if args.scenario in (None, "reference") else load_scenario(args.scenario)
    if args.alpha is not None:
        if not 0 < args.alpha <= 1:
            raise ScenarioError("--alpha", f"confidence level must lie in (0, 1], got {args.alpha}")
        sc = sc.with_alpha(args.alpha)
    return sc


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _options(args) -> SolveOptions:
    return SolveOptions(node_limit=args.node_limit, time_limit=args.time_limit)


def _run_solve(args) -> int:
    out = cmd_solve(_load(args), args.method, args.out, seed=args.seed, options=_options(args))
    if out.message:
        print(out.message, file=sys.stderr)
    if out.schedule is not None:
        print(f"{out.method}: {out.status}, cost {out.cost:.4f} $, {out.wall_time:.2f} s")
    for f in out.files:
        print(f"wrote {f}")
    return out.exit_code


def _run_sweep(args) -> int:
    values = args.values if args.values is not None else DEFAULT_SWEEP_VALUES[args.axis]
    rep = cmd_sweep(_load(args), args.axis, values, args.out, jobs=args.jobs,
                    transform=args.method.split("-", 1)[1], options=_options(args))
    for r in rep.rows:
        flag = "  FLAGGED" if r.flagged else ""
        print(f"{args.axis}={r.axis_value:g}: {r.status}, cost {r.cost:.4f} $, reserve {r.total_reserve:.2f} kW, "
              f"{r.time_s:.2f} s{flag}")
    print(f"wrote {args.out}/sweep_{args.axis}.csv")
    return EXIT_OK


def _run_compare(args) -> int:
    seeds = list(range(args.seed, args.seed + args.runs))
    rep = cmd_compare(_load(args), seeds, args.out, jobs=args.jobs)
    print(f"{'alpha':>6} {'method':>13} {'mean $':>10} {'std $':>9} {'mean s':>8} {'feasible':>9}")
    for r in rep.rows:
        print(f"{r.alpha:6.2f} {r.method:>13} {r.mean_cost:10.3f} {r.std_cost:9.3f} {r.mean_time:8.3f} "
              f"{r.n_feasible:>4}/{r.n_runs}")
    for a, ok in rep.dst_not_worse.items():
        if not ok:
            print(f"warning: at alpha={a:.2f} the DST cost exceeds the HIA mean cost", file=sys.stderr)
    print(f"wrote {args.out}/compare.csv")
    return EXIT_OK


def _run_validate(args) -> int:
    rep = cmd_validate(_load(args), args.schedule, args.samples, args.seed, args.out)
    s = rep.summary()
    print(f"min adequacy {s['min_adequacy']:.4f} (alpha {s['alpha']}), periods below alpha: "
          f"{s['periods_below_alpha'] or 'none'}")
    print(f"wrote {args.out}/adequacy.csv and {args.out}/validation.json")
    return EXIT_OK


def _run_export(args) -> int:
    transform = args.method.split("-", 1)[1]
    for f in cmd_export_mps(_load(args), args.out, transform):
        print(f"wrote {f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgsched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, methods=METHODS, default="dst-quantile"):
        p.add_argument("--scenario", default=None,
                       help="scenario JSON file (default: the bundled reference system)")
        p.add_argument("--alpha", type=float, default=None, help="override the confidence level")
        p.add_argument("--method", choices=methods, default=default)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--node-limit", type=int, default=200_000)
        p.add_argument("--time-limit", type=float, default=None, help="branch-and-bound wall clock cap (s)")
        return p

    dst = ("dst-quantile", "dst-bigm")
    p = common(sub.add_parser("solve", help="solve one scenario and write the schedule"))
    p.set_defaults(func=_run_solve)

    p = common(sub.add_parser("sweep", help="solve across values of one parameter"), dst)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", type=_floats, default=None,
                   help="comma-separated axis values (sigma_l as a fraction of the mean, ESS axes as scales)")
    p.set_defaults(func=_run_sweep)

    p = common(sub.add_parser("compare", help="DST against the PSO baseline at alpha 0.90/0.95/1.00"))
    p.add_argument("--runs", type=int, default=20, help="number of seeds, starting at --seed")
    p.set_defaults(func=_run_compare)

    p = common(sub.add_parser("validate", help="Monte Carlo adequacy of a stored schedule"))
    p.add_argument("--schedule", required=True, help="schedule CSV written by 'solve'")
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=_run_validate)

    p = common(sub.add_parser("export-mps", help="write the transformed MILP as MPS"), dst)
    p.set_defaults(func=_run_export)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "runs", 1) < 1:
        parser.error("--runs must be at least 1")
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except DegenerateInstanceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (MgschedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
