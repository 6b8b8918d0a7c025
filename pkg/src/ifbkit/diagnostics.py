"""Property checks on the proximal machinery and the momentum schedules.

:func:`run_checks` bundles them for the ``check`` command; each returns a
:class:`CheckResult` with a one-line detail string.
"""

import time
from dataclasses import dataclass

import numpy as np

from .problems import gen_lasso_instance, gen_qp_instance
from .prox import forward_backward_map, project_box, soft_threshold
from .schedules import (ComparisonSeq, Exp, FistaCD, FistaClassic, LogPoly, Power,
                        check_assumption_a2, check_nesterov_rule, default_comparisons,
                        dominance_onset)

__all__ = [
    "A2_TARGETS",
    "CheckResult",
    "check_a2_limits",
    "check_comparison_growth",
    "check_dominance",
    "check_fista_identities",
    "check_nesterov",
    "check_nonexpansive",
    "check_residual_monotonicity",
    "run_checks",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


#: (schedule, sigma, expected limit c) for the growth-rate assumption.
A2_TARGETS = (
    (Exp(0.5), 0.5, 0.5),
    (Power(8, 4), 1.0, 8.0),
    (Power(0.5, 0.5), 1.0, 0.5),
    (LogPoly(1.0), 1.0, 1.0),
    (FistaClassic(), 1.0, 1.0),
    (FistaCD(4), 1.0, 1.0),
)


def check_nonexpansive(samples=1000, seed=0, slack=1e-12):
    """``soft_threshold`` and ``project_box`` are 1-Lipschitz on random pairs."""
    gen = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(samples):
        n = int(gen.integers(1, 20))
        u, v = gen.standard_normal((2, n)) * gen.exponential(2.0)
        t = gen.exponential(1.0)
        lo = -gen.exponential(1.0, n)
        hi = lo + gen.exponential(2.0, n)
        d = np.linalg.norm(u - v)
        worst = max(worst,
                    np.linalg.norm(soft_threshold(u, t) - soft_threshold(v, t)) - d,
                    np.linalg.norm(project_box(u, lo, hi) - project_box(v, lo, hi)) - d)
    return CheckResult("prox non-expansiveness", bool(worst <= slack),
                       f"{2 * samples} pairs, max excess {worst:.2e}")


def check_residual_monotonicity(samples=1000, seed=0, slack=1e-10):
    """For ``l1 >= l2 > 0``: ``||T_l1 x - x|| >= ||T_l2 x - x||`` and the ratio to ``l`` reverses.

    Samples alternate between a small LASSO and a small box QP.
    """
    gen = np.random.default_rng(seed)
    problems = [gen_lasso_instance(20, 40, 4, seed)[0], gen_qp_instance(20, seed)]
    worst = -np.inf
    for i in range(samples):
        p = problems[i % 2]
        x = 2.0 * gen.standard_normal(p.dimension)
        l1, l2 = sorted(gen.exponential(2.0 / p.lipschitz, 2), reverse=True)
        r1 = forward_backward_map(p, x, l1).residual_norm
        r2 = forward_backward_map(p, x, l2).residual_norm
        scale = 1.0 + max(r1, r2)
        worst = max(worst, (r2 - r1) / scale,
                    (r1 / l1 - r2 / l2) / (1.0 + max(r1 / l1, r2 / l2)))
    return CheckResult("residual monotonicity in the step length", bool(worst <= slack),
                       f"{samples} samples, max relative excess {worst:.2e}")


def check_a2_limits(k_probe=10**6, rtol=0.01):
    """``k^sigma (t_{k+1}/t_k - 1)`` approaches the expected limit for every default kind."""
    bad, parts = [], []
    for sched, sigma, target in A2_TARGETS:
        est = check_assumption_a2(sched, sigma, k_probe)
        err = abs(est.limit - target) / target
        parts.append(f"{sched.spec}={est.limit:.5g}")
        if not err <= rtol:
            bad.append(sched.spec)
    return CheckResult("growth-rate limits", not bad,
                       ", ".join(parts) + (f"; off target: {bad}" if bad else ""))


def check_fista_identities(k_max=10**4):
    """``t_k^2 = t_{k+1}^2 - t_{k+1}`` to 1e-12 relative, and ``t_k / k`` near 1/2."""
    s = FistaClassic()
    ks = np.arange(1, k_max + 1)
    t = s.t(ks)
    t1 = s.t(ks + 1)
    rel = np.max(np.abs(t**2 - (t1**2 - t1)) / t1**2)
    ratio = float(s.t(k_max)) / k_max
    ok = rel <= 1e-12 and abs(ratio - 0.5) <= 0.005
    return CheckResult("classic recursion", bool(ok),
                       f"max relative defect {rel:.1e}, t_k/k at {k_max} = {ratio:.5f}")


def check_nesterov(k_max=10**5):
    """The classic and Chambolle-Dossal rules satisfy the Nesterov inequality."""
    found = {s.spec: check_nesterov_rule(s, k_max) for s in (FistaClassic(), FistaCD(4))}
    return CheckResult("Nesterov rule", all(v is None for v in found.values()),
                       ", ".join(f"{k}: {'ok' if v is None else f'fails at {v}'}"
                                 for k, v in found.items()))


def check_dominance(k_max=10**5):
    """Each default comparison sequence dominates its schedule from some onset on."""
    parts, ok = [], True
    for case, comp in default_comparisons().items():
        onset = dominance_onset(comp, k_max)
        ok &= onset <= k_max
        parts.append(f"case{case}@{onset}")
    eq = ComparisonSeq(6, FistaCD(1))
    ks = np.arange(1, k_max + 1)
    diff = float(np.max(np.abs(eq.alpha(ks) - eq.schedule.gamma(ks))))
    ok &= diff <= 1e-12
    parts.append(f"a=1 max |alpha-gamma| {diff:.1e}")
    return CheckResult("comparison dominance", bool(ok), ", ".join(parts))


def check_comparison_growth(k=10**5, bound=1e-3):
    """``s`` increases along 10, 10^3, 10^5 and its squared growth is below ``bound`` at ``k``."""
    parts, ok = [], True
    for case, comp in default_comparisons().items():
        ls = comp.log_s(np.array([10, 1000, k]))
        g = float(comp.growth(k))
        this = ls[2] > ls[1] > ls[0] and g < bound
        ok &= bool(this)
        parts.append(f"case{case}={g:.2e}{'' if this else '!'}")
    return CheckResult(f"comparison growth at k={k}", bool(ok), ", ".join(parts))


def run_checks(k_max=10**5, samples=1000, seed=0):
    out = []
    for fn, kw in ((check_nonexpansive, {"samples": samples, "seed": seed}),
                   (check_residual_monotonicity, {"samples": samples, "seed": seed}),
                   (check_a2_limits, {}),
                   (check_fista_identities, {}),
                   (check_nesterov, {"k_max": k_max}),
                   (check_dominance, {"k_max": k_max}),
                   (check_comparison_growth, {"k": k_max})):
        t0 = time.perf_counter()
        res = fn(**kw)
        out.append(CheckResult(res.name, res.passed,
                               f"{res.detail} ({time.perf_counter() - t0:.2f}s)"))
    return out
