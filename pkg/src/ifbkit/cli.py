"""Command-line front end: ``ifbkit {gen,solve,bench,rates,check}``.

Exit status: 0 success, 1 failed checks, 2 usage, 3 parse error,
4 numeric failure, 5 I/O error.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import fileio
from ._exceptions import ConfigError, InsufficientDataError, LibSVMParseError, NumericFailure
from .analysis import estimate_fstar, fit_rate
from .benchmark import format_pivot, format_table, rows_to_csv, run_bench
from .config import RunConfig, build_problem, load_config
from .diagnostics import run_checks
from .problems import gen_lasso_instance, gen_logistic_instance, gen_qp_instance
from .schedules import parse_schedule
from .solver import solve

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4, 5

FIVE_ALGOS = "fista,fista_cd:4,pow:8:4,pow:0.5:0.5,exp:0.5"

class UsageError(Exception):
    pass


def _seeds(text):
    """``"1-10"`` or ``"1,2,5"`` (or a mix) to a list of ints."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        if sep and lo:
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _problem_flags(p):
    g = p.add_argument_group("problem")
    g.add_argument("--config", help="INI file with a [run] section")
    g.add_argument("--problem", choices=["lasso", "logistic", "qp", "libsvm", "file"])
    g.add_argument("--dataset", help="LIBSVM file or saved .npz instance")
    g.add_argument("--m", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--s", type=int)
    g.add_argument("--n-samples", type=int)
    g.add_argument("--dim", type=int)
    g.add_argument("--density", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--lipschitz-rule", choices=["conservative", "standard"])


def _solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--algo", choices=["ifb", "adapm", "restart", "fb"])
    g.add_argument("--mu", type=float)
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--termination", choices=["auto", "subgradient", "residual"])
    g.add_argument("--modification", choices=["none", "gradient", "function", "both"])
    g.add_argument("--restart", choices=["none", "fixed", "adaptive", "both"])
    g.add_argument("--restart-period", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="ifbkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic instance")
    p.add_argument("--kind", choices=["lasso", "qp", "logistic"], default="lasso")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--s", type=int, default=10)
    p.add_argument("--n-samples", type=int, default=500)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--delta", type=float)
    p.add_argument("--lipschitz-rule", choices=["conservative", "standard"], default="conservative")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--libsvm", action="store_true",
                   help="write a logistic instance as LIBSVM text instead of .npz")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("solve", help="run one solver and store its trace")
    _problem_flags(p)
    _solver_flags(p)
    p.add_argument("--schedule")
    p.add_argument("--seed", type=int)
    p.add_argument("--x0", help="'zeros' or a .npy file")
    p.add_argument("-o", "--output", help="trace path (.csv or .jsonl)")
    p.add_argument("--format", choices=["csv", "jsonl"])
    p.add_argument("--with-gap", action="store_true",
                   help="compute a reference optimum and fill the gap column")

    p = sub.add_parser("bench", help="schedules x seeds summary table")
    _problem_flags(p)
    _solver_flags(p)
    p.add_argument("--schedules", default=FIVE_ALGOS, help="comma-separated schedule specs")
    p.add_argument("--seeds", default="1-10", help='e.g. "1-10" or "1,3,5"')
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", help="also write the summary as CSV here")
    p.add_argument("--pivot", action="store_true", help="print schedules x seeds counts")

    p = sub.add_parser("rates", help="fit convergence rates to stored traces")
    p.add_argument("traces", nargs="+")
    p.add_argument("--f-star", type=float, help="reference optimum (default: gap column)")
    p.add_argument("--f-star-error", type=float, default=0.0)
    p.add_argument("--instance", help="saved instance used to compute the reference optimum")
    p.add_argument("--model", choices=["power", "linear"], default="power")
    p.add_argument("--tail-fraction", type=float, default=0.4)
    p.add_argument("--floor-multiplier", type=float, default=10.0)

    p = sub.add_parser("check", help="run the schedule and prox property checks")
    p.add_argument("--k-max", type=int, default=10**5)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _config_from(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    values = {k: getattr(args, k, None) for k in (
        "problem", "dataset", "m", "n", "s", "n_samples", "dim", "density", "delta",
        "lipschitz_rule", "algo", "mu", "tol", "max_iter", "termination", "modification",
        "restart", "restart_period", "schedule", "seed", "x0", "output", "format")}
    return cfg.with_overrides(**values)


def _x0(cfg, dimension):
    if cfg.x0 in ("", "zeros"):
        return None
    x0 = np.load(cfg.x0)
    if x0.shape != (dimension,):
        raise UsageError(f"--x0 has shape {x0.shape}, expected ({dimension},)")
    return x0


def cmd_gen(args):
    if args.kind == "lasso":
        problem, _ = gen_lasso_instance(args.m, args.n, args.s, args.seed,
                                        delta=1.0 if args.delta is None else args.delta)
    elif args.kind == "qp":
        problem = gen_qp_instance(args.m, args.seed)
    else:
        problem = gen_logistic_instance(args.n_samples, args.dim, args.seed,
                                        delta=1e-2 if args.delta is None else args.delta,
                                        density=args.density,
                                        lipschitz_rule=args.lipschitz_rule)
    if args.libsvm:
        if args.kind != "logistic":
            raise UsageError("--libsvm needs --kind logistic")
        fileio.write_libsvm(args.output, problem.data["features"], problem.data["labels"])
    else:
        fileio.save_instance(problem, args.output)
    print(f"wrote {problem.kind} instance (dimension {problem.dimension}) to {args.output}")
    return EXIT_OK


def cmd_solve(args):
    cfg = _config_from(args)
    problem = build_problem(cfg)
    schedule = parse_schedule("none" if cfg.algo == "fb" else cfg.schedule)
    opts = cfg.solver_options()
    trace = solve(problem, schedule, opts, cfg.algo, _x0(cfg, problem.dimension))
    summary = (f"{trace.algorithm} {trace.schedule}: {trace.status} "
               f"after {trace.iterations} iterations")
    if trace.records:
        last = trace.records[-1]
        summary += f", F = {last.objective:.12g}, measure = {last.residual:.3e}"
    print(summary)
    if cfg.output:
        f_star, meta = None, {"config": cfg.to_text()}
        if args.with_gap:
            ref = estimate_fstar(problem, opts)
            f_star = ref.value
            meta.update(f_star_error=ref.error_bound, f_star_converged=ref.converged)
        fileio.write_trace(trace, cfg.output, cfg.format, f_star=f_star, meta=meta)
        print(f"trace written to {cfg.output}")
    if trace.status == "numeric_failure":
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_bench(args):
    cfg = _config_from(args)
    schedules = [s for s in args.schedules.split(",") if s.strip()]
    seeds = _seeds(args.seeds)
    if not schedules or not seeds:
        raise UsageError("need at least one schedule and one seed")
    rows = run_bench(cfg, schedules, seeds, jobs=max(1, args.jobs))
    sys.stdout.write(format_pivot(rows) if args.pivot else format_table(rows))
    if args.csv:
        Path(args.csv).write_text(rows_to_csv(rows), encoding="utf-8")
    return EXIT_NUMERIC if any(r.status == "numeric_failure" for r in rows) else EXIT_OK


def cmd_rates(args):
    ref = None
    if args.instance:
        ref = estimate_fstar(fileio.load_instance(args.instance))
    print(f"{'trace':<32} {'model':<7} {'estimate':>10} {'r2':>8}  window")
    for path in args.traces:
        trace, gaps = fileio.read_trace(path)
        meta = trace.meta
        if args.f_star is not None:
            f_star, err = args.f_star, args.f_star_error
        elif ref is not None:
            f_star, err = ref.value, ref.error_bound
        elif meta.get("f_star") is not None:
            f_star, err = meta["f_star"], meta.get("f_star_error", 0.0)
        else:
            raise UsageError(f"{path}: no reference optimum; pass --f-star or --instance")
        fit = fit_rate(trace, f_star, args.model, args.tail_fraction, err,
                       args.floor_multiplier)
        print(f"{Path(path).name:<32} {fit.model:<7} {fit.exponent_or_factor:>10.4f} "
              f"{fit.r_squared:>8.5f}  {fit.window[0]}-{fit.window[1]}")
    return EXIT_OK


def cmd_check(args):
    results = run_checks(k_max=args.k_max, samples=args.samples, seed=args.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench, "rates": cmd_rates,
            "check": cmd_check}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ifbkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LibSVMParseError, ConfigError) as exc:
        print(f"ifbkit: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NumericFailure, InsufficientDataError) as exc:
        print(f"ifbkit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"ifbkit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # bad schedule strings and out-of-range option values
        print(f"ifbkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
