"""
Energy decrease with Hessian damping
====================================

With ``alpha = 4`` and ``beta = 1`` the energy is nonincreasing after
``t1 = 2 beta (alpha - 2) / (alpha - 3) = 4``.
"""

import numpy as np

from togeslab import DynamicsConfig, IntegratorConfig, builtin_problem, integrate
from togeslab.diagnostics import (
    check_monotone,
    descent_series,
    energy_at,
    energy_series,
    grad_integral,
)

f1 = builtin_problem("f1")
cfg = DynamicsConfig(kind="TOGES_VH", alpha=4.0, beta=1.0, u0=[3.0, 1.0])
grid = np.unique(np.concatenate([np.geomspace(1, 1000, 300), [4.0, 200.0]]))
traj = integrate(cfg, f1, IntegratorConfig(t_end=1000, sample_grid=grid))

rep = energy_series(traj, f1)
print("t1 =", rep.threshold_t1)
print("E(1) = %.4f   E(4) = %.4f   E(1000) = %.3e" % (rep.values[0], energy_at(traj, f1, 4.0), rep.values[-1]))
print("increases after t1:", len(rep.violations))

# f(u) + (alpha - 2) E(t1) / (3 t^3) is nonincreasing as well
e1 = energy_at(traj, f1, 4.0)
print("descent violations:", len(check_monotone(descent_series(traj, f1, e1, 4.0), 4.0, 1e-7)))

# weighted gradient integral against its energy bound
print("int t^4 |grad f(v)|^2 on [4, 200] = %.2f <= %.2f" % (grad_integral(traj, f1, 4.0, 200.0), 2 * e1))
