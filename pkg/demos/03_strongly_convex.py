"""
Exponential decay under strong convexity
========================================

The strongly convex system on ``quad_mu(1)`` against its three
exponential bounds, then the gap at ``t = 100`` for several systems on f1.
"""

import numpy as np

from togeslab import DynamicsConfig, IntegratorConfig, builtin_problem, integrate
from togeslab.diagnostics import (
    Selector,
    distance_to_argmin_series,
    gap_series,
    sc_bounds,
    sc_energy_series,
    value_at,
)

quad = builtin_problem("quad_mu(1)")
cfg = DynamicsConfig(kind="SC3", mu=1.0, u0=[3.0, 1.0])
traj = integrate(cfg, quad, IntegratorConfig(t_end=50, sample_grid=np.linspace(1, 50, 491)))

bounds = sc_bounds(traj, quad)
energy = sc_energy_series(traj, quad)
gap = gap_series(traj, quad, Selector.AT_U).gap
dist2 = np.array([d for _, d in distance_to_argmin_series(traj, quad)]) ** 2
print("energy / bound   max %.6f" % np.max(energy / bounds["energy"]))
print("gap / bound      max %.6f" % np.max(gap / bounds["gap_u"]))
print("dist^2 / bound   max %.6f" % np.max(dist2 / bounds["dist_u_sq"]))

# polynomial against exponential decay on f1
f1 = builtin_problem("f1")
icfg = IntegratorConfig(t_end=100, abs_tol=1e-30, sample_grid=np.linspace(1, 100, 400))
for kind, kw in [("TOGES_V", dict(alpha=3.0)), ("TOGES_VH", dict(alpha=3.0, beta=1.0)),
                 ("SC3", dict(mu=1.0)), ("HEAVY_BALL", dict(mu=1.0))]:
    tr = integrate(DynamicsConfig(kind=kind, u0=[3.0, 1.0], **kw), f1, icfg)
    print(f"{kind:10s} gap(100) = {value_at(gap_series(tr, f1, Selector.AT_U), 100.0):.3e}")
