"""Schedules x seeds sweeps with summary tables.

Each cell builds its own problem from the config and seed, so cells are
independent and can run in worker processes. Results are collected in the
parent and sorted, which makes the tables identical for any ``jobs``.
Wall-clock time is deliberately left out of the tables.
"""

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import build_problem
from .schedules import parse_schedule
from .solver import solve

__all__ = ["BenchRow", "format_pivot", "format_table", "run_bench", "rows_to_csv"]


@dataclass(frozen=True)
class BenchRow:
    schedule: str
    algo: str
    seed: int
    iterations: int
    status: str
    final_objective: float
    final_residual: float


def _cell(args):
    cfg, schedule, seed = args
    problem = build_problem(cfg, seed)
    trace = solve(problem, parse_schedule(schedule), cfg.solver_options(), cfg.algo)
    last = trace.records[-1]
    return BenchRow(schedule, cfg.algo, int(seed), trace.iterations, trace.status,
                    last.objective, last.residual)


def run_bench(cfg, schedules, seeds, jobs=1):
    """Run every ``(schedule, seed)`` pair for the problem family in ``cfg``.

    Rows come back ordered by schedule (in the order given) and then seed.
    """
    schedules = [parse_schedule(s).spec for s in schedules]
    cells = [(cfg, s, int(seed)) for s in schedules for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_cell, cells))
    else:
        rows = [_cell(c) for c in cells]
    return rows


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schedule", "algo", "seed", "iterations", "status", "final_objective",
                "final_residual"])
    for r in rows:
        w.writerow([r.schedule, r.algo, r.seed, r.iterations, r.status,
                    format(r.final_objective, ".17g"), format(r.final_residual, ".17g")])
    return buf.getvalue()


def format_table(rows):
    """Aligned text, one line per cell."""
    head = ("schedule", "algo", "seed", "iters", "status", "objective", "residual")
    body = [(r.schedule, r.algo, str(r.seed), str(r.iterations), r.status,
             f"{r.final_objective:.10g}", f"{r.final_residual:.3e}") for r in rows]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = ["  ".join(x.ljust(w) for x, w in zip(line, widths)).rstrip()
             for line in [head, *body]]
    return "\n".join(lines) + "\n"


def format_pivot(rows):
    """Iteration counts with schedules as rows and seeds as columns, plus the median."""
    schedules = list(dict.fromkeys(r.schedule for r in rows))
    seeds = sorted({r.seed for r in rows})
    counts = {(r.schedule, r.seed): r.iterations for r in rows}
    head = ["schedule", *[f"s{s}" for s in seeds], "median"]
    body = []
    for name in schedules:
        vals = [counts.get((name, s)) for s in seeds]
        med = np.median([v for v in vals if v is not None])
        body.append([name, *["-" if v is None else str(v) for v in vals], f"{med:g}"])
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    return "\n".join("  ".join(x.rjust(w) for x, w in zip(line, widths))
                     for line in [head, *body]) + "\n"
