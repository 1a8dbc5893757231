"""Proximal mappings and Moreau envelopes.

Only closed-form proxes are provided (soft threshold, box clamp). A nonsmooth
objective that needs anything else has to bring its own :class:`ProxOracle`.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, OracleInconsistencyError


@dataclass(frozen=True)
class ProxOracle:
    """Proximal mapping ``prox(lam, x)`` of a convex lsc function.

    ``raw_value`` is the (possibly extended-valued) function itself; it may
    return ``inf`` outside its effective domain.
    """

    prox: Callable[[float, np.ndarray], np.ndarray]
    raw_value: Callable[[np.ndarray], float]


def _check_lambda(lam):
    if not lam > 0:
        raise ConfigurationError(f"Moreau index must be positive, got {lam!r}")


def soft_threshold(lam, x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def abs_sum_oracle():
    """Prox oracle of ``x -> sum |x_i|``."""
    return ProxOracle(
        prox=soft_threshold,
        raw_value=lambda x: float(np.sum(np.abs(x))),
    )


def box_oracle(lo, hi):
    """Prox oracle of the indicator of ``[lo, hi]^n`` (a clamp, independent of lam)."""
    if not lo <= hi:
        raise ConfigurationError(f"empty box [{lo}, {hi}]")

    def prox(lam, x):
        return np.clip(np.asarray(x, dtype=float), lo, hi)

    def raw_value(x):
        x = np.asarray(x, dtype=float)
        return 0.0 if np.all((x >= lo) & (x <= hi)) else np.inf

    return ProxOracle(prox=prox, raw_value=raw_value)


def moreau_value(oracle, lam, x):
    """Moreau envelope ``f(p) + |x - p|^2 / (2 lam)`` with ``p = prox(lam, x)``."""
    _check_lambda(lam)
    x = np.asarray(x, dtype=float)
    p = oracle.prox(lam, x)
    fp = oracle.raw_value(p)
    if not np.isfinite(fp):
        raise OracleInconsistencyError("prox landed outside the effective domain")
    r = x - p
    return float(fp + np.dot(r, r) / (2.0 * lam))


def moreau_grad(oracle, lam, x):
    """Gradient ``(x - prox(lam, x)) / lam`` of the envelope; it is 1/lam-Lipschitz."""
    _check_lambda(lam)
    x = np.asarray(x, dtype=float)
    return (x - oracle.prox(lam, x)) / lam


def regularize(oracle, lam, inf_value, minimizer_projection, dim=None, name=None):
    """Smooth objective ``f_lam`` built from a prox oracle.

    The infimum and argmin are inherited from ``f``. No Hessian oracle is
    attached, so Hessian-damped dynamics cannot run on the result.
    """
    from .problems import ObjectiveSpec

    _check_lambda(lam)
    return ObjectiveSpec(
        name=name or f"moreau(lam={lam})",
        dim=dim,
        value=lambda x: moreau_value(oracle, lam, x),
        grad=lambda x: moreau_grad(oracle, lam, x),
        hvp=None,
        prox=oracle,
        inf_value=inf_value,
        minimizer_projection=minimizer_projection,
    )
