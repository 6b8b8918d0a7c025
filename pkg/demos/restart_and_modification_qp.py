"""
Restart, fixed momentum and adaptive modification on a box QP
=============================================================

On a strongly convex quadratic over ``[-1, 1]^m`` the plain forward-backward
method converges linearly, and so do FISTA with restart and the heavy-ball
weight built from the condition number. A sublinear schedule gets a large
boost from zeroing its momentum whenever the step turns against the
gradient, without resetting its counter.
"""

from dataclasses import replace

from ifbkit import (Exp, SolverOptions, estimate_fstar, fit_rate, gen_qp_instance, run_fb,
                    run_fista_restart, run_ifb, run_ifb_adapm)
from ifbkit.schedules import beta_star

problem = gen_qp_instance(200, seed=1)
print(f"L = {problem.lipschitz:.1f}, strong convexity = {problem.strong_convexity:.3f}")

opts = SolverOptions(tol=1e-6, max_iter=100000)
ref = estimate_fstar(problem, opts)

runs = {
    "fb": run_fb(problem, opts),
    "restart": run_fista_restart(problem, replace(opts, restart="both")),
    "beta_star": run_ifb(problem, beta_star(problem), opts),
    "exp:0.5": run_ifb(problem, Exp(0.5), opts),
    "adapm exp:0.5": run_ifb_adapm(problem, Exp(0.5), replace(opts, modification="gradient")),
}

print(f"{'method':<15}{'iterations':>11}{'zeroed':>8}{'rho':>9}")
for name, trace in runs.items():
    try:
        rho = fit_rate(trace, ref.value, "linear", f_star_error=ref.error_bound)
        rho = f"{rho.exponent_or_factor:.4f}"
    except ValueError:
        rho = "-"  # too few points above the reference error
    print(f"{name:<15}{trace.iterations:>11}{trace.modified_count:>8}{rho:>9}")
