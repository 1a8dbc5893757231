"""
Inverse-cubic rates of the third-order variant
==============================================

Integrate the third-order variant on the three test functions and fit the
decay of ``f(u(t)) - inf f`` on a log-log scale.
"""

import numpy as np

from togeslab import DynamicsConfig, IntegratorConfig, builtin_problem, integrate
from togeslab.diagnostics import Selector, fit_rate, gap_series

# 300 geometric sample times on [1, 1000]
grid = np.geomspace(1, 1000, 300)
icfg = IntegratorConfig(t_end=1000, sample_grid=grid)

for name in ("f1", "f2", "f3"):
    problem = builtin_problem(name)
    cfg = DynamicsConfig(kind="TOGES_V", alpha=3.0, u0=[3.0, 1.0])
    traj = integrate(cfg, problem, icfg)

    # the gap at u and at the auxiliary point v = u + t u' / 4
    for sel in (Selector.AT_U, Selector.AT_V):
        est = fit_rate(gap_series(traj, problem, sel), (10, 1000))
        print(f"{name} {sel.value:5s} slope {est.slope:7.3f}   sup t^3 gap {est.sup_scaled:.4g}")

# Both slopes sit well below -3; the sup column stays bounded.
