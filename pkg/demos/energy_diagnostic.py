"""
Watching the weighted energy
============================

For ``t_k = (k + 3) / 4`` the weighted energy

    E_k = s_{k+1}^2 (F(x_k) - F*) + s_k^2 / (2 lam) ||x_k - x_{k-1}||^2

with ``s_k = (k + 3)^5`` is guaranteed to decrease only from a very late
index on. Within a double-precision run it mostly climbs; once the gap gets
close to the accuracy of ``F*`` the uncertainty band swallows the rest.
"""

import numpy as np

from ifbkit import (FistaCD, SolverOptions, estimate_fstar, gen_lasso_instance, lyapunov_series,
                    prox_gap_ratios, run_ifb, trim_to_resolution)
from ifbkit.analysis import energy_descent_horizon
from ifbkit.schedules import comparison_for

problem, _ = gen_lasso_instance(100, 256, 10, seed=1)
opts = SolverOptions(tol=1e-6, max_iter=100000)
ref = estimate_fstar(problem, opts)
trace = run_ifb(problem, FistaCD(4), opts)
comp = comparison_for(FistaCD(4))

# keep the records whose gap is well above the error in F*
usable = trim_to_resolution(trace, ref.value, ref.error_bound)
res = lyapunov_series(usable, comp, ref.value, f_star_error=ref.error_bound)

print(f"{trace.iterations} iterations, {usable.iterations} resolvable")
for k in (10, 100, 1000, res.onset, usable.iterations):
    i = k - 1
    print(f"k={k:>5}  E={res.energies[i]:.3e}  band/E={res.bands[i] / res.energies[i]:.1e}")
print("empirical onset:", res.onset)

# the sufficient condition for descent, with tau1 read off the trace
tau1 = float(np.max(prox_gap_ratios(usable, ref.value)[1]))
print(f"tau1 ~ {tau1:.0f}, descent guaranteed from k =",
      energy_descent_horizon(comp, opts.mu, tau1))
