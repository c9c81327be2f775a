"""Command-line entry point: ``ordexp <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import bounds, harness
from .evaluator import kappa_from_catalog, normalized_apply, segmented_apply
from .matrix_core import matrix_to_json, spectral_norm
from .operators import BUILTIN_SYSTEMS, build_system, load_system_json
from .oracle import DEFAULT_TOL, StepSizeUnderflow, ordered_exp
from .schedule import lts_schedule, merge_adjacent


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _emit(args, payload, default_format="json") -> None:
    fmt = args.format or default_format
    if fmt == "json":
        text = json.dumps(payload if not hasattr(payload, "to_json") else payload.to_json(),
                          indent=2, default=_json_default) + "\n"
    elif hasattr(payload, "to_csv"):
        text = payload.to_csv()
    elif isinstance(payload, list) and payload:
        text = _rows_to_csv(payload)
    else:
        raise SystemExit(f"--format csv is not available for {args.command}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _system(args, interval):
    if getattr(args, "system_file", None):
        with open(args.system_file, encoding="utf-8") as fh:
            return load_system_json(json.load(fh), interval)
    return build_system(args.system, interval=interval, seed=args.seed, dim=args.dim, m=args.terms)


def cmd_schedule(args) -> int:
    s = lts_schedule(args.m, args.k)
    if args.merge:
        payload = {"m": s.m, "k": s.k, "merged": True,
                   "factors": [{"j": f.term_index, "v": f.offset, "q": f.weight} for f in merge_adjacent(s)]}
    else:
        payload = s.to_json()
    if (args.format or "json") == "csv":
        _emit(args, payload["factors"])
    else:
        _emit(args, payload)
    return 0


def cmd_qk(args) -> int:
    rows = bounds.qk_table(args.max_k)
    _emit(args, rows)
    return 0 if all(r["lower"] <= r["Q_k"] <= r["upper"] for r in rows) else 1


def cmd_plan(args) -> int:
    P = math.inf if args.p is None else args.p
    plan = bounds.make_plan(args.m, args.Lambda, args.dt, args.epsilon, P)
    _emit(args, plan)
    return 0


def cmd_decompose(args) -> int:
    ts = _system(args, (args.mu, args.mu + args.dt))
    s = lts_schedule(ts.m, args.k)
    out = {"system": ts.name, "k": args.k, "r": args.r, "mu": args.mu, "dt": args.dt}
    if args.kappa:
        shifted, K = normalized_apply(s, ts, kappa_from_catalog(args.kappa), args.mu, args.dt, args.r)
        product = K * segmented_apply(s, ts, args.mu, args.dt, args.r)
        out["K"] = K
    else:
        product = segmented_apply(s, ts, args.mu, args.dt, args.r)
    out["product"] = matrix_to_json(product)
    if not args.no_oracle:
        ref = ordered_exp(ts, args.mu, args.dt, args.oracle_tol)
        out["error"] = spectral_norm(product - ref.U)
        out["oracle_est_error"] = ref.est_error
    _emit(args, out)
    return 0


def cmd_order_study(args) -> int:
    grid = harness.log_grid(args.dt_min_exp, args.dt_max_exp, args.points)
    kw = {}
    if args.system in ("random-hermitian", "random-antihermitian"):
        kw = {"seed": args.seed, "dim": args.dim, "m": args.terms}
    report = harness.order_study(args.system, args.k, args.mu, grid, args.oracle_tol,
                                 workers=args.workers, **kw)
    _emit(args, report, "csv")
    if args.expect_slope is not None:
        return 0 if abs(report.fitted_slope - args.expect_slope) <= args.slope_tol else 1
    return 0


def cmd_bound_sweep(args) -> int:
    grid = harness.log_grid(math.log10(args.dt_min), math.log10(args.dt_max), args.points)
    seeds = range(args.seed, args.seed + args.seeds)
    kw = {"dim": args.dim, "m": args.terms} if args.system.startswith("random") else {}
    sweep = harness.bound_sweep(args.system, args.k, args.mu, grid, seeds, args.oracle_tol,
                                allow_noncontractive=args.allow_noncontractive, kappa=args.kappa, **kw)
    _emit(args, sweep, "csv")
    return 1 if sweep.violations else 0


def cmd_appendix_b(args) -> int:
    report = harness.appendix_b_demo(args.delta, args.dt)
    _emit(args, report)
    return 0 if report.matches else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--oracle-tol", type=float, default=DEFAULT_TOL)
    common.add_argument("-v", "--verbose", action="store_true")

    system = argparse.ArgumentParser(add_help=False)
    system.add_argument("--system", default="fig1b", choices=BUILTIN_SYSTEMS)
    system.add_argument("--system-file", help="JSON system description (overrides --system)")
    system.add_argument("--dim", type=int, default=4, help="dimension of random systems")
    system.add_argument("--terms", type=int, default=2, help="number of terms of random systems")

    parser = argparse.ArgumentParser(prog="ordexp", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", parents=[common], help="emit a k-th order schedule as JSON")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--merge", action="store_true", help="fuse adjacent identical factors")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("qk", parents=[common], help="table of Q_k and its bracket")
    p.add_argument("--max-k", type=int, default=10)
    p.set_defaults(func=cmd_qk)

    p = sub.add_parser("plan", parents=[common], help="choose k, r and N for a target error")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--lambda", dest="Lambda", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--p", type=int, help="smoothness cap on the order (default: unbounded)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("decompose", parents=[common, system], help="evaluate a product formula")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--kappa", help="normalisation shift: zero, unit, linear or const:<c>")
    p.add_argument("--no-oracle", action="store_true")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("order-study", parents=[common, system], help="empirical convergence order")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--dt-min-exp", type=float, default=-2.5)
    p.add_argument("--dt-max-exp", type=float, default=-0.5)
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--expect-slope", type=float)
    p.add_argument("--slope-tol", type=float, default=0.3)
    p.set_defaults(func=cmd_order_study)

    p = sub.add_parser("bound-sweep", parents=[common, system], help="measured error vs single-step bound")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--dt-min", type=float, default=1e-3)
    p.add_argument("--dt-max", type=float, default=0.3)
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds from --seed")
    p.add_argument("--allow-noncontractive", action="store_true")
    p.add_argument("--kappa")
    p.set_defaults(func=cmd_bound_sweep)

    p = sub.add_parser("appendix-b", parents=[common], help="sign-flip norm blow-up example")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--dt", type=float, default=2.0)
    p.set_defaults(func=cmd_appendix_b)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, StepSizeUnderflow) as exc:
        print(f"ordexp {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
