"""
Momentum schedules on a LASSO problem
=====================================

Five ways of choosing the inertial weight, run on the same random LASSO
instance. Faster-growing ``t_k`` sequences reach the tolerance in fewer
iterations, and the objective gap decays with a steeper fitted exponent.
"""

import numpy as np

from ifbkit import (SolverOptions, estimate_fstar, fit_rate, gen_lasso_instance, parse_schedule,
                    run_ifb)

# 100 observations of a 10-sparse vector in dimension 256
problem, planted = gen_lasso_instance(100, 256, 10, seed=1)
opts = SolverOptions(tol=1e-6, max_iter=100000)

# a tighter reference run gives F* and how far it can be trusted
ref = estimate_fstar(problem, opts)
print(f"F* = {ref.value:.12f} (+/- {ref.error_bound:.1e})")

specs = ["fista", "fista_cd:4", "pow:8:4", "pow:0.5:0.5", "exp:0.5"]
print(f"{'schedule':<14}{'iterations':>11}{'fitted p':>10}")
for spec in specs:
    trace = run_ifb(problem, parse_schedule(spec), opts)
    fit = fit_rate(trace, ref.value, f_star_error=ref.error_bound)
    print(f"{spec:<14}{trace.iterations:>11}{fit.exponent_or_factor:>10.2f}")

# how much of the planted support the l1 solution picks up
x = run_ifb(problem, parse_schedule("exp:0.5"), opts).final_x
found = set(np.flatnonzero(x))
true = set(np.flatnonzero(planted))
print(f"{len(found)} nonzeros, {len(found & true)} of {len(true)} planted entries among them")
