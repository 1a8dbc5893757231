"""
Time rescaling of the second-order flow
=======================================

With ``s = t^(2/3)`` the vanishing-damping flow on ``f`` becomes the
rescaled second-order system on ``(9/4) f``. Both are integrated and
compared on ``s`` in [1, 10].
"""

import numpy as np

from togeslab import DynamicsConfig, IntegratorConfig, builtin_problem, integrate
from togeslab.dynamics import (
    RESCALE_GRADIENT_FACTOR,
    rescale_equivalence,
    rescaled_counterpart,
)
from togeslab.problems import scale_objective

f1 = builtin_problem("f1")
avd = DynamicsConfig(kind="AVD", alpha=3.0, u0=[3.0, 1.0])
twin = rescaled_counterpart(avd)
print("rescaled alpha =", twin.alpha, " initial velocity =", twin.du0)

tight = dict(rel_tol=1e-12, abs_tol=1e-14)
a = integrate(avd, f1, IntegratorConfig(t_end=10.0**1.5, **tight))
b = integrate(twin, scale_objective(f1, RESCALE_GRADIENT_FACTOR),
              IntegratorConfig(t_end=10.0, sample_grid=np.linspace(1, 10, 91), **tight))
print("max |x(s^1.5) - v(s)| = %.2e" % rescale_equivalence(a, b))
