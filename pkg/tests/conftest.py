"""Shared fixtures.

Every solver run in the suite has the descent monitor switched on; the
traces are collected here and the session fails if any run exceeded the
relative slack.
"""

import numpy as np
import pytest

from ifbkit import solver
from ifbkit.analysis import estimate_fstar
from ifbkit.problems import gen_lasso_instance
from ifbkit.schedules import parse_schedule

solver.MONITORS_DEFAULT = True

MONITORED = []

#: ``(number, passed, line)`` from the acceptance module, printed at the end.
ACCEPTANCE = []


def _collect(trace):
    if trace.descent_max_violation is not None:
        MONITORED.append((trace.algorithm, trace.schedule, trace.iterations,
                          trace.descent_max_violation, trace.descent_violations))


solver.trace_observers.append(_collect)


def monitor_summary():
    runs = len(MONITORED)
    iters = sum(m[2] for m in MONITORED)
    worst = max((m[3] for m in MONITORED), default=0.0)
    bad = [m for m in MONITORED if m[4] > 0]
    return runs, iters, worst, bad


def pytest_collection_modifyitems(items):
    # acceptance last, so the monitor criterion sees every other run
    items.sort(key=lambda item: item.module.__name__.endswith("test_acceptance"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
    runs, iters, worst, bad = monitor_summary()
    terminalreporter.write_line(
        f"descent monitor: {runs} solver runs, {iters} iterations, worst relative "
        f"violation {worst:.3e}, runs over slack {len(bad)}"
    )


def pytest_sessionfinish(session, exitstatus):
    _, _, _, bad = monitor_summary()
    if bad and session.exitstatus == 0:
        session.exitstatus = 1


DESK = dict(m=100, n=256, s=10)
DESK_SEEDS = range(1, 11)
DESK_TOL = 1e-6
DESK_SCHEDULES = ("pow:2:4", "pow:4:4", "pow:6:4", "pow:8:4",
                  "fista_cd:4", "fista_cd:6", "fista_cd:8", "fista_cd:10",
                  "fista", "exp:0.5", "pow:0.5:0.5")


class DeskRuns:
    """Traces of every desk schedule on every seed, with reference optima."""

    def __init__(self):
        import time

        opts = solver.SolverOptions(tol=DESK_TOL, max_iter=100000)
        self.opts = opts
        self.traces = {}
        self.fstar = {}
        self.seconds = {}
        for seed in DESK_SEEDS:
            problem, _ = gen_lasso_instance(DESK["m"], DESK["n"], DESK["s"], seed)
            for spec in DESK_SCHEDULES:
                t0 = time.perf_counter()
                self.traces[spec, seed] = solver.run_ifb(problem, parse_schedule(spec), opts)
                self.seconds[spec, seed] = time.perf_counter() - t0
            self.fstar[seed] = estimate_fstar(problem, opts)

    def iters(self, spec, seed):
        return self.traces[spec, seed].iterations


@pytest.fixture(scope="session")
def desk_runs():
    return DeskRuns()


@pytest.fixture
def gen():
    return np.random.default_rng(12345)
