"""Cached reference integrations shared by several test modules."""

from functools import lru_cache

import numpy as np

from togeslab import DynamicsConfig, IntegratorConfig, builtin_problem, integrate

U0 = (3.0, 1.0)
LONG_GRID = np.unique(np.concatenate([np.geomspace(1, 1000, 400), [4.0, 10.0, 100.0, 200.0]]))


@lru_cache(maxsize=None)
def run(kind, problem, t_end=1000.0, alpha=None, beta=0.0, mu=None, lam=None,
        rel_tol=1e-9, abs_tol=1e-12, grid="long"):
    p = builtin_problem(problem)
    cfg = DynamicsConfig(kind=kind, alpha=alpha, beta=beta, mu=mu, lam=lam, u0=U0)
    if grid == "long":
        g = LONG_GRID[LONG_GRID <= t_end]
    else:
        g = np.linspace(1.0, t_end, int(grid))
    icfg = IntegratorConfig(t_end=t_end, rel_tol=rel_tol, abs_tol=abs_tol, sample_grid=g)
    return p, integrate(cfg, p, icfg)
