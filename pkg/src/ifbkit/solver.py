"""Inertial forward-backward iterations with trace recording.

All engines share one loop::

    x_k     = T_lam(y_k)
    y_{k+1} = x_k + gamma_k (x_k - x_{k-1})

and differ only in how ``gamma_k`` is chosen. ``run_ifb`` takes it from
the schedule, ``run_ifb_adapm`` zeroes it for one step when a
gradient/function test fires but keeps the schedule's counter running, and
``run_fista_restart`` zeroes it and also resets the counter.

Cost per iteration: one gradient and one prox at ``y_k``, one objective
evaluation at ``x_k`` (cached for the function test and the monitor), plus
the termination measure at ``x_k`` (one more gradient, or one more
forward-backward step for the residual measure).
"""

import time
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .prox import BoxIndicator, L1Norm, ZeroFunction, min_norm_subgradient, scaled_residual
from .schedules import FistaClassic, NoInertia

__all__ = [
    "DESCENT_SLACK",
    "IterateRecord",
    "LyapunovResult",
    "SolverOptions",
    "Trace",
    "lyapunov_series",
    "monitor_descent",
    "run_fb",
    "run_fista_restart",
    "run_ifb",
    "run_ifb_adapm",
    "solve",
]

DESCENT_SLACK = 1e-8

#: Default for ``SolverOptions.monitors`` when left as ``None``.
MONITORS_DEFAULT = False

#: Callables invoked with every finished :class:`Trace`.
trace_observers = []

_CHUNK = 4096


@dataclass(frozen=True)
class SolverOptions:
    """Run configuration.

    Parameters
    ----------
    mu : float
        Step fraction in (0, 1); the step length is ``mu / L_f``.
    tol : float
        Stop once the termination measure drops below this value.
    max_iter : int
    termination : {"subgradient", "residual", None}
        ``None`` picks the min-norm subgradient when the nonsmooth part
        supports it and the scaled residual ``||x - T(x)|| / lam`` otherwise.
    modification : {"none", "gradient", "function", "both"}
        Momentum test used by the adaptive engines.
    restart : {"none", "fixed", "adaptive", "both"}
    restart_period : int
        Period of the fixed restart.
    monitors : bool or None
        Evaluate the descent inequality every iteration. ``None`` defers to
        the module-level ``MONITORS_DEFAULT``.
    """

    mu: float = 0.98
    tol: float = 1e-8
    max_iter: int = 10000
    termination: Optional[str] = None
    modification: str = "none"
    restart: str = "none"
    restart_period: int = 100
    monitors: Optional[bool] = None

    def __post_init__(self):
        if not 0 < self.mu < 1:
            raise ValueError(f"mu must lie strictly between 0 and 1, got {self.mu}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.termination not in (None, "subgradient", "residual"):
            raise ValueError(f"unknown termination measure {self.termination!r}")
        if self.modification not in ("none", "gradient", "function", "both"):
            raise ValueError(f"unknown modification scheme {self.modification!r}")
        if self.restart not in ("none", "fixed", "adaptive", "both"):
            raise ValueError(f"unknown restart scheme {self.restart!r}")
        if self.restart_period < 1:
            raise ValueError("restart_period must be positive")


@dataclass(frozen=True, slots=True)
class IterateRecord:
    """One iteration. ``prox_gap`` is ``||x_k - y_k||``; it is not persisted."""

    k: int
    objective: float
    residual: float
    gamma: float
    step_len: float
    modified: bool
    wall_nanos: int
    prox_gap: float = 0.0

    def key(self):
        """Every field except the wall clock."""
        return (self.k, self.objective, self.residual, self.gamma, self.step_len,
                self.modified, self.prox_gap)


@dataclass
class Trace:
    """Iteration history of one run."""

    records: List[IterateRecord]
    final_x: np.ndarray
    status: str
    algorithm: str = ""
    schedule: str = ""
    lam: float = float("nan")
    mu: float = float("nan")
    tol: float = float("nan")
    termination: str = ""
    initial_objective: float = float("nan")
    descent_max_violation: Optional[float] = None
    descent_violations: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def objectives(self):
        return self.column("objective")

    @property
    def residuals(self):
        return self.column("residual")

    @property
    def step_lens(self):
        return self.column("step_len")

    @property
    def gammas(self):
        return self.column("gamma")

    @property
    def prox_gaps(self):
        return self.column("prox_gap")

    @property
    def modified_count(self):
        return sum(r.modified for r in self.records)

    def same_as(self, other):
        """Bitwise equality of iterates and records, ignoring wall-clock time."""
        return (
            self.status == other.status
            and len(self.records) == len(other.records)
            and all(a.key() == b.key() for a, b in zip(self.records, other.records))
            and self.final_x.tobytes() == other.final_x.tobytes()
        )


def _measure_kind(problem, opts):
    if opts.termination is not None:
        return opts.termination
    if isinstance(problem.nonsmooth, (L1Norm, BoxIndicator, ZeroFunction)):
        return "subgradient"
    return "residual"


def monitor_descent(problem, x_prev, y, x_new, lam, mu, f_prev=None, f_new=None):
    """Violation of the one-step descent inequality, ``max(0, lhs - rhs)``.

    With ``x_new = T_lam(y)`` and ``lam = mu / L_f``::

        F(x_new) + (1-mu)/(2 lam) ||x_new - y||^2 + 1/(2 lam) ||x_new - x_prev||^2
            <= F(x_prev) + 1/(2 lam) ||x_prev - y||^2

    In an inertial run ``||x_prev - y|| = gamma ||x_prev - x_{prev-1}||``.
    Objective values may be passed in to avoid recomputation.
    """
    if f_prev is None:
        f_prev = problem.objective(x_prev)
    if f_new is None:
        f_new = problem.objective(x_new)
    c = 0.5 / lam
    d_new = x_new - y
    d_step = x_new - x_prev
    d_mom = x_prev - y
    lhs = f_new + (1.0 - mu) * c * float(d_new @ d_new) + c * float(d_step @ d_step)
    rhs = f_prev + c * float(d_mom @ d_mom)
    return max(0.0, lhs - rhs)


def _engine(problem, schedule, opts, x0, algorithm, policy):
    lam = opts.mu / problem.lipschitz
    measure = _measure_kind(problem, opts)
    monitors = MONITORS_DEFAULT if opts.monitors is None else opts.monitors
    x_prev = np.zeros(problem.dimension) if x0 is None else np.array(x0, dtype=float)
    if x_prev.shape != (problem.dimension,):
        raise ValueError(f"x0 has shape {x_prev.shape}, expected ({problem.dimension},)")
    y = x_prev.copy()
    f_prev = f_start = problem.objective(x_prev)
    records = []
    status = "max_iter"
    worst = 0.0
    n_bad = 0
    gammas = None
    start = time.perf_counter_ns()
    for k in range(1, opts.max_iter + 1):
        if (k - 1) % _CHUNK == 0:
            gammas = schedule.gamma(np.arange(k, k + _CHUNK))
        grad_y = problem.smooth_gradient(y)
        if not np.all(np.isfinite(grad_y)):
            status = "numeric_failure"
            break
        x = problem.prox(y - lam * grad_y, lam)
        f_x = problem.objective(x)
        if not (np.isfinite(f_x) and np.all(np.isfinite(x))):
            status = "numeric_failure"
            break
        if measure == "subgradient":
            _, res = min_norm_subgradient(problem, x)
        else:
            res = scaled_residual(problem, x, lam)
        if monitors:
            v = monitor_descent(problem, x_prev, y, x, lam, opts.mu, f_prev, f_x)
            rel = v / (1.0 + abs(f_x))
            worst = max(worst, rel)
            n_bad += rel > DESCENT_SLACK
        g, modified = policy(k, float(gammas[(k - 1) % _CHUNK]), x, x_prev, y, f_x, f_prev)
        step = x - x_prev
        records.append(IterateRecord(
            k=k,
            objective=f_x,
            residual=float(res),
            gamma=g,
            step_len=float(np.linalg.norm(step)),
            modified=modified,
            wall_nanos=time.perf_counter_ns() - start,
            prox_gap=float(np.linalg.norm(x - y)),
        ))
        if res < opts.tol:
            status = "converged"
            x_prev = x
            break
        y = x + g * step
        x_prev, f_prev = x, f_x
    trace = Trace(
        records=records,
        final_x=x_prev,
        status=status,
        algorithm=algorithm,
        schedule=schedule.spec,
        lam=lam,
        mu=opts.mu,
        tol=opts.tol,
        termination=measure,
        initial_objective=f_start,
        descent_max_violation=worst if monitors else None,
        descent_violations=n_bad,
    )
    for observer in trace_observers:
        observer(trace)
    return trace


def _fires(scheme, x, x_prev, y, f_x, f_prev):
    # strict inequalities: ties keep the momentum
    grad_test = scheme in ("gradient", "both") and float((y - x) @ (x - x_prev)) > 0.0
    func_test = scheme in ("function", "both") and f_x > f_prev
    return grad_test or func_test


def run_ifb(problem, schedule, opts=SolverOptions(), x0=None):
    """Inertial forward-backward method with weights from ``schedule``.

    Parameters
    ----------
    problem : ProblemInstance
    schedule : Schedule
    opts : SolverOptions
    x0 : ndarray, optional
        Starting point (``y_1 = x_0``); zero by default.

    Returns
    -------
    Trace
        ``status`` is ``"converged"``, ``"max_iter"`` or ``"numeric_failure"``.
    """
    if getattr(schedule, "label", "") == "beta_star" and not problem.strong_convexity:
        raise ValueError("beta_star momentum needs a strongly convex problem")

    def policy(k, g, *_):
        return g, False

    return _engine(problem, schedule, opts, x0, "ifb", policy)


def run_fb(problem, opts=SolverOptions(), x0=None):
    """Forward-backward without inertia (``gamma_k = 0``)."""
    return run_ifb(problem, NoInertia(), opts, x0)


def run_ifb_adapm(problem, schedule, opts, x0=None):
    """IFB with adaptive modification.

    When ``(y_k - x_k)^T (x_k - x_{k-1}) > 0`` (gradient scheme) or
    ``F(x_k) > F(x_{k-1})`` (function scheme) the step uses
    ``gamma_k = 0``; the schedule index keeps advancing either way.
    """
    scheme = opts.modification
    if scheme == "none":
        raise ValueError("run_ifb_adapm needs modification in {gradient, function, both}")

    def policy(k, g, x, x_prev, y, f_x, f_prev):
        if _fires(scheme, x, x_prev, y, f_x, f_prev):
            return 0.0, True
        return g, False

    return _engine(problem, schedule, opts, x0, "adapm", policy)


def run_fista_restart(problem, opts, x0=None):
    """FISTA with fixed and/or adaptive restart.

    A restart drops the momentum for the current step and resets the
    schedule counter, so the following step also has ``gamma = 0``. The
    fixed restart fires once ``restart_period`` steps have passed since the
    last restart; the adaptive one uses the same test as
    :func:`run_ifb_adapm` (``opts.modification``, gradient when ``"none"``).
    """
    if opts.restart == "none":
        raise ValueError("run_fista_restart needs restart in {fixed, adaptive, both}")
    schedule = FistaClassic()
    scheme = "gradient" if opts.modification == "none" else opts.modification
    use_fixed = opts.restart in ("fixed", "both")
    use_adaptive = opts.restart in ("adaptive", "both")
    period = opts.restart_period
    counter = [1]

    def policy(k, _g, x, x_prev, y, f_x, f_prev):
        j = counter[0]
        fire = (use_fixed and j >= period) or (
            use_adaptive and _fires(scheme, x, x_prev, y, f_x, f_prev)
        )
        if fire:
            counter[0] = 1
            return 0.0, True
        counter[0] = j + 1
        return float(schedule.gamma(j)), False

    return _engine(problem, schedule, opts, x0, "restart", policy)


def solve(problem, schedule, opts=SolverOptions(), algo="ifb", x0=None):
    """Dispatch on ``algo`` in ``{"ifb", "adapm", "restart", "fb"}``."""
    if algo == "ifb":
        return run_ifb(problem, schedule, opts, x0)
    if algo == "fb":
        return run_fb(problem, opts, x0)
    if algo == "adapm":
        if opts.modification == "none":
            opts = replace(opts, modification="gradient")
        return run_ifb_adapm(problem, schedule, opts, x0)
    if algo == "restart":
        if opts.restart == "none":
            opts = replace(opts, restart="both")
        return run_fista_restart(problem, opts, x0)
    raise ValueError(f"unknown algorithm {algo!r}")


@dataclass
class LyapunovResult:
    """Energies ``E_k`` and their monotonicity diagnostic.

    ``onset`` is the smallest recorded ``k0`` such that
    ``E_j <= E_i + band_i + band_j`` for every recorded ``j > i >= k0``,
    or ``None`` when the last pair already violates it. Comparing every
    later energy against every earlier one stops a slow climb made of
    small steps, each inside the band, from passing as descent.
    """

    ks: np.ndarray
    energies: np.ndarray
    bands: np.ndarray
    onset: Optional[int]


def lyapunov_series(trace, comparison, f_star, lam=None, f_star_error=0.0):
    """``E_k = s_{k+1}^2 (F(x_k) - F*) + s_k^2 / (2 lam) ||x_k - x_{k-1}||^2``.

    The band attached to ``E_k`` is ``s_{k+1}^2 * f_star_error``, the
    uncertainty the reference value carries into the energy.
    """
    if lam is None:
        lam = trace.lam
    if not trace.records:
        raise ValueError("empty trace")
    obj = trace.objectives
    if f_star > obj.min() + f_star_error:
        raise ValueError(
            f"f_star={f_star!r} exceeds the smallest recorded objective {obj.min()!r}"
        )
    ks = np.array([r.k for r in trace.records])
    s_next_sq = np.exp(2.0 * np.asarray(comparison.log_s(ks + 1)))
    s_sq = np.exp(2.0 * np.asarray(comparison.log_s(ks)))
    energies = s_next_sq * (obj - f_star) + s_sq * trace.step_lens**2 / (2.0 * lam)
    bands = s_next_sq * f_star_error
    # largest lower end among all later energies
    later_lo = np.maximum.accumulate((energies - bands)[::-1])[::-1][1:]
    bad = np.flatnonzero(later_lo > (energies + bands)[:-1])
    if bad.size == 0:
        onset = int(ks[0])
    elif bad[-1] == len(ks) - 2:
        onset = None
    else:
        onset = int(ks[bad[-1] + 1])
    return LyapunovResult(ks, energies, bands, onset)
