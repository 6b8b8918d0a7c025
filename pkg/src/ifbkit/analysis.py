"""Post-hoc convergence diagnostics computed from traces."""

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from ._exceptions import InsufficientDataError
from .prox import BoxIndicator, forward_backward_map
from .rng import make_rng, normal
from .schedules import Power
from .solver import SolverOptions, run_ifb

__all__ = [
    "FStarEstimate",
    "RateFit",
    "energy_descent_horizon",
    "estimate_fstar",
    "fit_rate",
    "fit_rate_series",
    "prox_gap_ratios",
    "trim_to_resolution",
    "probe_error_bound",
]

_EPS = np.finfo(float).eps
MIN_POINTS = 30


class FStarEstimate(NamedTuple):
    """Reference optimal value with an upper bound on its error."""

    value: float
    error_bound: float
    converged: bool
    x: np.ndarray


def prox_gap_ratios(trace, f_star):
    """``(F(x_k) - F*) * lam / ||y_k - x_k||^2`` for records with a nonzero gap."""
    gaps = trace.objectives - f_star
    pg = trace.prox_gaps
    keep = pg > 0
    return trace.column("k")[keep], gaps[keep] * trace.lam / pg[keep] ** 2


def estimate_fstar(problem, opts=None, x0=None, tighten=100.0, tail=0.4):
    """Reference ``F*`` from a tight run of IFB with ``t_k = 2 sqrt(k) - 1``.

    The reference run uses ``tol = opts.tol / tighten`` and ten times the
    iteration budget. The error bound has three parts: the local bound
    ``(tau / lam) ||y - x||^2`` at the last iterate with ``tau`` the largest
    ratio seen in the trace tail (times a safety factor of 10), the drop from
    the final objective to the smallest one, and a rounding floor of
    ``64 eps (1 + |F*|)``. An unconverged reference has its bound widened
    a hundredfold.
    """
    opts = opts or SolverOptions()
    ref_opts = replace(opts, tol=opts.tol / tighten, max_iter=10 * opts.max_iter,
                       modification="none", restart="none")
    trace = run_ifb(problem, Power(0.5, 0.5), ref_opts, x0)
    obj = trace.objectives
    f_min = float(obj.min())
    _, ratios = prox_gap_ratios(trace, f_min)
    start = int(len(ratios) * (1.0 - tail))
    tau = float(ratios[start:].max()) if len(ratios) > start else 0.0
    last_gap = trace.records[-1].prox_gap
    bound = 10.0 * tau / trace.lam * last_gap**2
    bound += float(obj[-1] - f_min) + 64.0 * _EPS * (1.0 + abs(f_min))
    converged = trace.status == "converged"
    if not converged:
        bound *= 100.0
    return FStarEstimate(f_min, bound, converged, trace.final_x)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of ``gap ~ C / k^p`` (power) or ``gap ~ C rho^k`` (linear).

    ``exponent_or_factor`` is ``p`` for the power model and ``rho`` for the
    linear one.
    """

    model: str
    exponent_or_factor: float
    constant: float
    r_squared: float
    window: tuple

    @property
    def convergent(self):
        if self.model == "power":
            return self.exponent_or_factor > 0
        return 0 < self.exponent_or_factor < 1


def fit_rate_series(ks, gaps, model="power", tail_fraction=0.4, floor=0.0):
    """Fit a rate model to the final ``tail_fraction`` of usable ``(k, gap)`` pairs.

    A pair is usable when ``gap > floor`` (and positive). At least
    :data:`MIN_POINTS` usable pairs must fall in the window.
    """
    if model not in ("power", "linear"):
        raise ValueError(f"unknown model {model!r}")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    ks = np.asarray(ks, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    keep = (gaps > max(floor, 0.0)) & np.isfinite(gaps)
    ks, gaps = ks[keep], gaps[keep]
    n_tail = int(np.ceil(tail_fraction * len(ks)))
    if n_tail < MIN_POINTS:
        raise InsufficientDataError(
            f"{n_tail} usable points in the tail window, need {MIN_POINTS}"
        )
    ks, gaps = ks[-n_tail:], gaps[-n_tail:]
    xs = np.log(ks) if model == "power" else ks
    ys = np.log(gaps)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    value = -slope if model == "power" else float(np.exp(slope))
    return RateFit(model, float(value), float(np.exp(intercept)), r2,
                   (int(ks[0]), int(ks[-1])))


def fit_rate(trace, f_star, model="power", tail_fraction=0.4, f_star_error=0.0,
             floor_multiplier=10.0):
    """Fit the objective gap of a trace.

    Gaps below ``floor_multiplier * f_star_error`` are dropped.
    """
    ks = trace.column("k")
    return fit_rate_series(ks, trace.objectives - f_star, model, tail_fraction,
                           floor=floor_multiplier * f_star_error)


def trim_to_resolution(trace, f_star, f_star_error, floor_multiplier=10.0):
    """Drop the trailing records whose gap is within ``floor_multiplier * f_star_error``.

    Past that point the objective gap, and anything weighted by it, is
    dominated by the uncertainty in ``f_star``.
    """
    gaps = trace.objectives - f_star
    above = np.flatnonzero(gaps > floor_multiplier * f_star_error)
    if above.size == 0:
        raise InsufficientDataError("no record rises above the reference-error floor")
    return replace(trace, records=trace.records[: above[-1] + 1])


def probe_error_bound(problem, x_ref, samples=200, radius=1e-2, seed=0):
    """Largest ``||x - x_ref|| / ||T_{1/L}(x) - x||`` over points sampled near ``x_ref``.

    Points are drawn uniformly on the sphere of the given radius around
    ``x_ref`` (and projected into the box for box-constrained problems).
    ``x_ref`` stands in for the projection onto the solution set, so the
    ratio over-estimates the true error-bound constant whenever the
    solution set is not a singleton. Samples whose residual vanishes are
    skipped.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    x_ref = np.asarray(x_ref, dtype=float)
    gen = make_rng(seed)
    lam = 1.0 / problem.lipschitz
    best = None
    for _ in range(samples):
        u = normal(gen, problem.dimension)
        x = x_ref + radius * u / np.linalg.norm(u)
        if isinstance(problem.nonsmooth, BoxIndicator):
            x = np.clip(x, problem.nonsmooth.lo, problem.nonsmooth.hi)
        dist = np.linalg.norm(x - x_ref)
        res = forward_backward_map(problem, x, lam).residual_norm
        if dist == 0.0 or res <= 1e-300:
            continue
        ratio = dist / res
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise InsufficientDataError("every sample was indistinguishable from x_ref")
    return float(best)


def energy_descent_horizon(comparison, mu, tau1, k_max=10**7):
    """First ``k0`` from which the energy is guaranteed to decrease.

    The energy ``E_k`` built on ``comparison`` decreases once
    ``(s_{k+2}^2 - s_{k+1}^2) / s_{k+1}^2 <= (1 - mu) / (4 tau1)``, where
    ``tau1`` bounds ``(F(x_k) - F*) lam / ||y_k - x_k||^2`` along the run
    (see :func:`prox_gap_ratios`). Returns ``None`` when the inequality
    still fails at ``k_max``.
    """
    if not 0 < mu < 1 or not tau1 > 0:
        raise ValueError("need 0 < mu < 1 and tau1 > 0")
    margin = (1.0 - mu) / (4.0 * tau1)
    onset = 1
    for start in range(1, k_max + 1, 1 << 16):
        ks = np.arange(start, min(start + (1 << 16), k_max + 1))
        bad = np.flatnonzero(comparison.growth(ks + 1) > margin)
        if bad.size:
            onset = int(ks[bad[-1]]) + 1
    return None if onset > k_max else onset
