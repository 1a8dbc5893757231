"""Inertial evolution systems as explicit first-order vector fields.

Third-order kinds live on R^{3n} with state ``(u, u', u'')``; second-order
kinds live on R^{2n} with state ``(x, x')``. The fields return the time
derivative of the packed state, the top derivative being solved from the
system's defining equation.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, UnsupportedCapabilityError
from .moreau import moreau_grad


class Kind(str, enum.Enum):
    AVD = "AVD"
    RESCALED = "RESCALED"
    TOGES = "TOGES"
    TOGES_V = "TOGES_V"
    TOGES_VH = "TOGES_VH"
    SC3 = "SC3"
    TOGES_VR = "TOGES_VR"
    HEAVY_BALL = "HEAVY_BALL"

    @property
    def order(self):
        return 2 if self in _SECOND_ORDER else 3


_SECOND_ORDER = {Kind.AVD, Kind.RESCALED, Kind.HEAVY_BALL}
_NEEDS_ALPHA = {Kind.AVD, Kind.RESCALED, Kind.TOGES, Kind.TOGES_V, Kind.TOGES_VH, Kind.TOGES_VR}
_NEEDS_MU = {Kind.SC3, Kind.HEAVY_BALL}


def _vec(x):
    return np.atleast_1d(np.asarray(x, dtype=float)).copy()


@dataclass(frozen=True)
class DynamicsConfig:
    """System kind, its parameters and the Cauchy data at ``t0``."""

    kind: Kind
    u0: np.ndarray
    du0: np.ndarray = None
    ddu0: np.ndarray = None
    alpha: Optional[float] = None
    beta: float = 0.0
    mu: Optional[float] = None
    lam: Optional[float] = None
    t0: float = 1.0

    def __post_init__(self):
        try:
            kind = Kind(self.kind)
        except ValueError as exc:
            raise ConfigurationError(f"unknown dynamics kind {self.kind!r}") from exc
        object.__setattr__(self, "kind", kind)
        u0 = _vec(self.u0)
        n = u0.size
        du0 = np.zeros(n) if self.du0 is None else _vec(self.du0)
        ddu0 = np.zeros(n) if self.ddu0 is None else _vec(self.ddu0)
        if du0.size != n or ddu0.size != n:
            raise ConfigurationError("u0, du0, ddu0 must share one dimension")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "du0", du0)
        object.__setattr__(self, "ddu0", ddu0)

        if not self.t0 > 0:
            raise ConfigurationError("t0 must be positive: the damping is singular at 0")
        if kind in _NEEDS_ALPHA and self.alpha is None:
            raise ConfigurationError(f"{kind.value} needs alpha")
        if kind in _NEEDS_MU and not (self.mu is not None and self.mu > 0):
            raise ConfigurationError(f"{kind.value} needs mu > 0")
        if kind is Kind.TOGES_VR and not (self.lam is not None and self.lam > 0):
            raise ConfigurationError("TOGES_VR needs lam > 0")
        if self.beta < 0:
            raise ConfigurationError("beta must be nonnegative")
        if self.beta != 0 and kind is not Kind.TOGES_VH:
            raise ConfigurationError("beta is only meaningful for TOGES_VH")

    @property
    def dim(self):
        return self.u0.size

    @property
    def order(self):
        return self.kind.order

    def initial_vector(self):
        parts = [self.u0, self.du0] + ([self.ddu0] if self.order == 3 else [])
        return np.concatenate(parts)

    def replace(self, **changes):
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return DynamicsConfig(**data)


@dataclass(frozen=True)
class PhaseState:
    """Time-stamped state. ``ddu`` is empty for second-order kinds.

    ``dddu`` optionally carries the top derivative taken from the field.
    """

    t: float
    u: np.ndarray
    du: np.ndarray
    ddu: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dddu: Optional[np.ndarray] = None

    @classmethod
    def from_vector(cls, t, y, order, dy=None):
        n = y.size // order
        ddu = y[2 * n:] if order == 3 else np.zeros(0)
        top = None
        if dy is not None:
            top = dy[(order - 1) * n:]
        return cls(float(t), y[:n], y[n:2 * n], ddu, top)


def _ensure_capabilities(cfg, problem):
    if cfg.kind is Kind.TOGES_VR:
        problem.require("prox")
    else:
        problem.require("grad")
    if cfg.kind is Kind.TOGES_VH and cfg.beta != 0:
        problem.require("hvp")


def gradient_oracle(cfg, problem):
    """The gradient the dynamic sees: ``grad f``, or ``grad f_lam`` for TOGES_VR."""
    if cfg.kind is Kind.TOGES_VR:
        oracle, lam = problem.prox, cfg.lam
        return lambda x: moreau_grad(oracle, lam, x)
    return problem.grad


def vector_field(cfg, problem):
    """Return ``rhs(t, y)`` for the packed state vector of ``cfg.kind``."""
    _ensure_capabilities(cfg, problem)
    n = cfg.dim
    kind = cfg.kind
    grad = gradient_oracle(cfg, problem)
    hvp = problem.hvp
    alpha, beta, mu = cfg.alpha, cfg.beta, cfg.mu

    if kind is Kind.AVD:
        def rhs(t, y):
            x, dx = y[:n], y[n:]
            return np.concatenate((dx, -(alpha / t) * dx - grad(x)))

    elif kind is Kind.RESCALED:
        a1 = alpha + 1.0

        def rhs(t, y):
            x, dx = y[:n], y[n:]
            return np.concatenate((dx, -(a1 / t) * dx - t * grad(x)))

    elif kind is Kind.HEAVY_BALL:
        gamma = 2.0 * math.sqrt(mu)

        def rhs(t, y):
            x, dx = y[:n], y[n:]
            return np.concatenate((dx, -gamma * dx - grad(x)))

    elif kind is Kind.TOGES:
        c2, c1 = (3.0 * alpha + 5.0) / 2.0, 3.0 * alpha - 1.0

        def rhs(t, y):
            u, du, ddu = y[:n], y[n:2 * n], y[2 * n:]
            d3 = -(c2 / t) * ddu - (c1 / t**2) * du - grad(u + t * du)
            return np.concatenate((du, ddu, d3))

    elif kind in (Kind.TOGES_V, Kind.TOGES_VR, Kind.TOGES_VH):
        c2, c1 = alpha + 7.0, 5.0 * (alpha + 1.0)
        hessian_damped = kind is Kind.TOGES_VH and beta != 0

        def rhs(t, y):
            u, du, ddu = y[:n], y[n:2 * n], y[2 * n:]
            v = u + 0.25 * t * du
            d3 = -(c2 / t) * ddu - (c1 / t**2) * du - grad(v)
            if hessian_damped:
                d3 = d3 - beta * hvp(v, 1.25 * du + 0.25 * t * ddu)
            return np.concatenate((du, ddu, d3))

    elif kind is Kind.SC3:
        s = math.sqrt(mu)

        def rhs(t, y):
            u, du, ddu = y[:n], y[n:2 * n], y[2 * n:]
            d3 = -3.0 * s * ddu - 2.0 * mu * du - s * grad(u + du / s)
            return np.concatenate((du, ddu, d3))

    else:  # pragma: no cover - Kind is exhaustive
        raise ConfigurationError(kind)
    return rhs


def _pack(state, order):
    parts = [state.u, state.du] + ([state.ddu] if order == 3 else [])
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def field_at(cfg, problem, state):
    """Time derivative of ``state``: ``(u', u'', u''')`` or ``(x', x'')``."""
    if state.t < cfg.t0:
        raise ConfigurationError(f"t={state.t} precedes t0={cfg.t0}")
    dy = vector_field(cfg, problem)(state.t, _pack(state, cfg.order))
    n = cfg.dim
    return tuple(dy[i * n:(i + 1) * n] for i in range(cfg.order))


def equation_residual(cfg, problem, state, top):
    """Norm of the defining equation's left-hand side with ``top`` as the top derivative.

    Written out term by term, independently of :func:`vector_field`, so it
    can check the field's algebra.
    """
    _ensure_capabilities(cfg, problem)
    grad = gradient_oracle(cfg, problem)
    t, u, du, ddu = state.t, state.u, state.du, state.ddu
    a, k = cfg.alpha, cfg.kind
    if k is Kind.AVD:
        r = top + a / t * du + grad(u)
    elif k is Kind.RESCALED:
        r = top + (a + 1) / t * du + t * grad(u)
    elif k is Kind.HEAVY_BALL:
        r = top + 2 * math.sqrt(cfg.mu) * du + grad(u)
    elif k is Kind.TOGES:
        r = top + (3 * a + 5) / (2 * t) * ddu + (3 * a - 1) / t**2 * du + grad(u + t * du)
    elif k is Kind.SC3:
        s = math.sqrt(cfg.mu)
        r = top + 3 * s * ddu + 2 * cfg.mu * du + s * grad(u + du / s)
    else:
        v = aux_point_v(state)
        r = top + (a + 7) / t * ddu + 5 * (a + 1) / t**2 * du + grad(v)
        if k is Kind.TOGES_VH and cfg.beta:
            r = r + cfg.beta * problem.hvp(v, 5 / 4 * du + t / 4 * ddu)
    return float(np.linalg.norm(r))


def aux_point_v(state):
    """``u + (t/4) u'``, the point whose values decay like the rescaled system."""
    return np.asarray(state.u) + 0.25 * state.t * np.asarray(state.du)


def aux_point_y(state, mu):
    """``u + u'/sqrt(mu)`` for the strongly convex system."""
    return np.asarray(state.u) + np.asarray(state.du) / math.sqrt(mu)


def residual_reduction(cfg, problem, state):
    """Residual of the second-order equation satisfied by the auxiliary point.

    TOGES_V (and TOGES_VR): ``|v'' + (alpha+1)/t v' + (t/4) grad f(v)|`` with
    ``v' = 5/4 u' + t/4 u''`` and ``v'' = 3/2 u'' + t/4 u'''``.
    SC3: ``|y'' + 2 sqrt(mu) y' + grad f(y)|`` with ``y' = u' + u''/sqrt(mu)``
    and ``y'' = u'' + u'''/sqrt(mu)``.

    ``u'''`` comes from ``state.dddu`` when present, else from the field.
    """
    if cfg.kind not in (Kind.TOGES_V, Kind.TOGES_VR, Kind.SC3):
        raise ConfigurationError(f"no reduction defined for {cfg.kind.value}")
    if state.dddu is not None:
        d3 = np.asarray(state.dddu)
    else:
        d3 = field_at(cfg, problem, state)[2]
    grad = gradient_oracle(cfg, problem)
    t, du, ddu = state.t, np.asarray(state.du), np.asarray(state.ddu)
    if cfg.kind is Kind.SC3:
        s = math.sqrt(cfg.mu)
        y = aux_point_y(state, cfg.mu)
        dy = du + ddu / s
        d2y = ddu + d3 / s
        r = d2y + 2.0 * s * dy + grad(y)
    else:
        v = aux_point_v(state)
        dv = 1.25 * du + 0.25 * t * ddu
        d2v = 1.5 * ddu + 0.25 * t * d3
        r = d2v + (cfg.alpha + 1.0) / t * dv + 0.25 * t * grad(v)
    return float(np.linalg.norm(r))


def rescaled_alpha(alpha_avd):
    """Parameter of the rescaled system matching ``(AVD)_alpha`` under ``t = s^{3/2}``.

    Chosen so that ``(alpha + 1)/s == (3 alpha_avd - 1)/(2 s)``.
    """
    return (3.0 * alpha_avd - 3.0) / 2.0


RESCALE_GRADIENT_FACTOR = 9.0 / 4.0


def rescaled_counterpart(avd_cfg):
    """RESCALED config whose solution is ``s -> x(s^{3/2})`` for the AVD solution ``x``.

    The matching objective is ``(9/4) f`` when AVD runs on ``f``: the time
    change produces the factor ``(9/4) s`` in front of the gradient.
    Initial data are taken at ``s0 = t0^{2/3}``.
    """
    if avd_cfg.kind is not Kind.AVD:
        raise ConfigurationError("rescaled_counterpart expects an AVD config")
    s0 = avd_cfg.t0 ** (2.0 / 3.0)
    return DynamicsConfig(
        kind=Kind.RESCALED,
        alpha=rescaled_alpha(avd_cfg.alpha),
        t0=s0,
        u0=avd_cfg.u0,
        du0=1.5 * math.sqrt(s0) * avd_cfg.du0,
    )


def rescale_equivalence(avd_traj, rescaled_traj):
    """Max over the rescaled sample grid of ``|x(s^{3/2}) - v(s)|``."""
    from .integrator import sample_at

    if avd_traj.cfg.kind is not Kind.AVD or rescaled_traj.cfg.kind is not Kind.RESCALED:
        raise ConfigurationError("expected an AVD and a RESCALED trajectory")
    worst = 0.0
    t_hi = avd_traj.t_span[1]
    for s, v in zip(rescaled_traj.t, rescaled_traj.u):
        t = s**1.5
        if t > t_hi and t - t_hi <= 1e-12 * t_hi:
            t = t_hi
        x = sample_at(avd_traj, t).u
        worst = max(worst, float(np.linalg.norm(x - v)))
    return worst


def require_kind(cfg, *kinds):
    if cfg.kind not in kinds:
        names = ", ".join(k.value for k in kinds)
        raise ConfigurationError(f"expected one of {names}, got {cfg.kind.value}")


def check_capabilities(cfg, problem):
    """Raise :class:`UnsupportedCapabilityError` if ``problem`` cannot drive ``cfg``."""
    _ensure_capabilities(cfg, problem)
    if problem.dim is not None and problem.dim != cfg.dim:
        raise UnsupportedCapabilityError(
            f"problem {problem.name} has dim {problem.dim}, initial data has {cfg.dim}"
        )
