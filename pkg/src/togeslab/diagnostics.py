"""Lyapunov energies, gap series and rate checks along trajectories."""

import enum
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import Kind, aux_point_v, aux_point_y, require_kind
from .errors import (
    ConfigurationError,
    InsufficientDataError,
    OracleInconsistencyError,
    UnsupportedCapabilityError,
)
from .moreau import moreau_value

ROUNDING_FLOOR = 1e-14
NEGATIVE_SLACK = 1e-12
FORM_AGREEMENT = 1e-10


class Selector(str, enum.Enum):
    AT_U = "AT_U"
    AT_V = "AT_V"
    AT_Y = "AT_Y"
    AT_PROX_U = "AT_PROX_U"
    AT_PROX_V = "AT_PROX_V"


@dataclass
class GapSeries:
    t: np.ndarray
    gap: np.ndarray
    selector: Selector
    clamped: int = 0

    @property
    def points(self):
        return list(zip(self.t.tolist(), self.gap.tolist()))


@dataclass
class RateEstimate:
    slope: float
    intercept: float
    window: tuple
    residual: float
    sup_scaled: float
    power: float
    used: int
    excluded: int


@dataclass
class EnergyReport:
    t: np.ndarray
    values: np.ndarray
    threshold_t1: float
    violations: list = field(default_factory=list)


def _moreau_lambda(traj, lam):
    if lam is not None:
        return lam
    if traj.cfg.lam is not None:
        return traj.cfg.lam
    return 1.0


def selector_points(traj, selector, lam=None):
    """Points at which the gap is evaluated, one row per sample."""
    selector = Selector(selector)
    cfg = traj.cfg
    if selector in (Selector.AT_V, Selector.AT_PROX_V, Selector.AT_Y) and cfg.order != 3:
        raise UnsupportedCapabilityError(f"{selector.value} needs a third-order state")
    if selector in (Selector.AT_U, Selector.AT_PROX_U):
        return traj.u
    if selector is Selector.AT_Y:
        if cfg.mu is None:
            raise UnsupportedCapabilityError("AT_Y needs mu")
        return traj.u + traj.du / math.sqrt(cfg.mu)
    return traj.u + 0.25 * traj.t[:, None] * traj.du


def gap_series(traj, problem, selector, lam=None):
    """``f(point(t)) - inf f`` along the samples.

    For the prox selectors the point is ``prox_{lam f}`` of u or v and ``f``
    is the raw (nonsmooth) function. Rounding negatives down to
    ``-1e-12`` are clamped to zero and counted.
    """
    selector = Selector(selector)
    pts = selector_points(traj, selector, lam)
    if selector in (Selector.AT_PROX_U, Selector.AT_PROX_V):
        if problem.prox is None:
            raise UnsupportedCapabilityError(f"{problem.name} has no prox oracle")
        lam = _moreau_lambda(traj, lam)
        P = problem.prox
        vals = np.array([P.raw_value(P.prox(lam, x)) for x in pts])
    else:
        vals = np.array([problem.value(x) for x in pts])
    gap = vals - problem.inf_value
    bad = gap < -NEGATIVE_SLACK
    if np.any(bad):
        raise OracleInconsistencyError(
            f"gap below -{NEGATIVE_SLACK:g}: min {gap.min():.3e}; wrong inf_value?"
        )
    neg = gap < 0
    gap[neg] = 0.0
    return GapSeries(t=traj.t.copy(), gap=gap, selector=selector, clamped=int(neg.sum()))


def moreau_gap_series(traj, problem, lam=None, selector=Selector.AT_U):
    """``f_lam(point(t)) - inf f`` for a prox-bearing problem."""
    lam = _moreau_lambda(traj, lam)
    problem.require("prox")
    pts = selector_points(traj, selector)
    gap = np.array([moreau_value(problem.prox, lam, x) for x in pts]) - problem.inf_value
    neg = gap < 0
    gap[neg] = 0.0
    return GapSeries(traj.t.copy(), gap, Selector(selector), int(neg.sum()))


# -- energies ------------------------------------------------------------------


def delta(t, beta):
    """``t^2 (1 - 2 beta / t)``."""
    return t * t * (1.0 - 2.0 * beta / t)


def threshold_t1(alpha, beta):
    """Time after which the energy is nonincreasing: ``2 beta (alpha-2)/(alpha-3)``.

    For ``alpha == 3`` only the ``beta == 0`` case has a threshold (0);
    otherwise ``inf`` is returned.
    """
    if alpha > 3:
        return 2.0 * beta * (alpha - 2.0) / (alpha - 3.0)
    if beta == 0:
        return 0.0
    return math.inf


def energy_forms(state, problem, cfg, z):
    """Both algebraic forms of the energy: in ``(u, u', u'')`` and in ``(v, v')``."""
    require_kind(cfg, Kind.TOGES_V, Kind.TOGES_VH)
    problem.require("grad")
    # exact rational arithmetic: near the minimizer E is ~10 orders of
    # magnitude below its terms, beyond any floating-point evaluation
    F = Fraction
    a, b, t = F(cfg.alpha), F(cfg.beta), F(state.t)
    u = [F(x) for x in np.asarray(state.u, dtype=float)]
    du = [F(x) for x in np.asarray(state.du, dtype=float)]
    ddu = [F(x) for x in np.asarray(state.ddu, dtype=float)]
    z = [F(x) for x in np.asarray(z, dtype=float)]
    v = [ui + t / 4 * di for ui, di in zip(u, du)]
    v64 = np.array([float(x) for x in v])
    gv = [F(x) for x in np.asarray(problem.grad(v64), dtype=float)]
    gap = F(problem.value(v64)) - F(problem.inf_value)

    w1 = [t * t * (dd + b * g) + (a + 5) * t * d + 4 * a * (ui - zi)
          for ui, d, dd, g, zi in zip(u, du, ddu, gv, z)]
    e1 = 4 * (t**3 - 2 * b * t * t) * gap + sum(w * w for w in w1) / 2

    dv = [d * 5 / 4 + t / 4 * dd for d, dd in zip(du, ddu)]
    w2 = [4 * t * dvi + t * t * b * g + 4 * a * (vi - zi)
          for dvi, g, vi, zi in zip(dv, gv, v, z)]
    e2 = 4 * t * (t * t * (1 - 2 * b / t)) * gap + sum(w * w for w in w2) / 2
    e1, e2 = float(e1), float(e2)
    return e1, e2


def lyapunov_E(state, problem, cfg, z, check=True):
    """Energy of the Hessian-damped (or plain, ``beta = 0``) variant.

    With ``check`` the two algebraic forms must agree to 1e-10 relative.
    """
    e1, e2 = energy_forms(state, problem, cfg, z)
    if check:
        scale = max(abs(e1), abs(e2))
        if scale > 0 and abs(e1 - e2) > FORM_AGREEMENT * scale:
            raise OracleInconsistencyError(
                f"energy forms disagree at t={state.t}: {e1!r} vs {e2!r}"
            )
    return e1


def lyapunov_sc(state, problem, mu):
    """``f(y) - inf f + |sqrt(mu)(y - x*) + y'|^2 / 2`` for the strongly convex system."""
    if not problem.unique_minimizer:
        raise ConfigurationError(f"{problem.name} has no unique minimizer")
    s = math.sqrt(mu)
    y = aux_point_y(state, mu)
    dy = np.asarray(state.du) + np.asarray(state.ddu) / s
    xstar = problem.minimizer_projection(y)
    r = s * (y - xstar) + dy
    return float(problem.value(y) - problem.inf_value + 0.5 * np.dot(r, r))


def energy_series(traj, problem, z=None, tol=1e-7, check=True):
    """Energy at every sample and the increases found after ``t1``.

    ``z`` defaults to the projection of ``u(t0)`` onto the argmin.
    """
    cfg = traj.cfg
    if z is None:
        z = problem.minimizer_projection(traj.u[0])
    vals = np.array([lyapunov_E(s, problem, cfg, z, check=check) for s in traj.states()])
    t1 = threshold_t1(cfg.alpha, cfg.beta)
    viol = check_monotone(list(zip(traj.t, vals)), max(t1, cfg.t0), tol)
    return EnergyReport(traj.t.copy(), vals, t1, viol)


def sc_energy_series(traj, problem):
    require_kind(traj.cfg, Kind.SC3)
    return np.array([lyapunov_sc(s, problem, traj.cfg.mu) for s in traj.states()])


def sc_bounds(traj, problem):
    """Exponential upper bounds for the strongly convex system at every sample.

    Returns a dict with ``energy`` (E(t0) e^{-sqrt(mu)(t-t0)}), ``gap_u``
    ((C sqrt(mu) t + C0) e^{-sqrt(mu) t}) and ``dist_u_sq`` ((2/mu) gap_u).
    """
    require_kind(traj.cfg, Kind.SC3)
    mu = traj.cfg.mu
    s = math.sqrt(mu)
    t = traj.t
    t0 = t[0]
    e0 = lyapunov_sc(traj.state(0), problem, mu)
    f0 = problem.value(traj.u[0]) - problem.inf_value
    C = e0 * math.exp(s * t0)
    C0 = math.exp(s * t0) * f0 - C * s * t0
    gap_u = (C * s * t + C0) * np.exp(-s * t)
    return {
        "energy": e0 * np.exp(-s * (t - t0)),
        "gap_u": gap_u,
        "dist_u_sq": 2.0 / mu * gap_u,
    }


# -- rates and monotonicity ----------------------------------------------------


def fit_rate(series, window, power=3.0, min_points=10):
    """Least-squares line through ``(log t, log gap)`` on ``window``.

    Points with gap at or below the rounding floor are excluded.
    ``sup_scaled`` is ``sup t^power * gap`` over the window.
    """
    lo, hi = window
    t, g = np.asarray(series.t), np.asarray(series.gap)
    if lo < t[0] - 1e-12 or hi > t[-1] + 1e-12:
        raise ConfigurationError(f"window {window} outside series span [{t[0]}, {t[-1]}]")
    inwin = (t >= lo) & (t <= hi)
    usable = inwin & (g > ROUNDING_FLOOR)
    if usable.sum() < min_points:
        raise InsufficientDataError(
            f"{int(usable.sum())} usable points in {window}, need {min_points}"
        )
    x, y = np.log(t[usable]), np.log(g[usable])
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return RateEstimate(
        slope=float(slope),
        intercept=float(intercept),
        window=(float(lo), float(hi)),
        residual=float(np.sqrt(np.mean(res**2))),
        sup_scaled=float(np.max(t[inwin] ** power * g[inwin])),
        power=power,
        used=int(usable.sum()),
        excluded=int(inwin.sum() - usable.sum()),
    )


def scaled_sup(series, window, power=3.0):
    t, g = np.asarray(series.t), np.asarray(series.gap)
    m = (t >= window[0]) & (t <= window[1])
    return float(np.max(t[m] ** power * g[m]))


def value_at(series, t):
    """Series value at a sample time (exact match required)."""
    idx = np.flatnonzero(np.asarray(series.t) == t)
    if idx.size == 0:
        raise ConfigurationError(f"t={t} is not a sample time")
    return float(series.gap[idx[0]])


def vanishing_ratio(series, t_early, t_late, power=3.0):
    """``t_late^p gap(t_late) / (t_early^p gap(t_early))`` -- a little-o proxy."""
    early = t_early**power * value_at(series, t_early)
    late = t_late**power * value_at(series, t_late)
    return late / early if early > 0 else math.inf


def check_monotone(series, from_t, tol):
    """Adjacent pairs (at or after ``from_t``) where the value grows by more than
    ``tol * (1 + |val|)``. Returns ``[(t, increase), ...]``."""
    out = []
    prev = None
    for t, val in series:
        if t < from_t:
            continue
        if prev is not None:
            inc = val - prev
            if inc > tol * (1.0 + abs(prev)):
                out.append((float(t), float(inc)))
        prev = val
    return out


def estimate_series(traj, problem, C=None, window=None):
    """``t^4 gap(u) - C t``; ``C`` defaults to ``4 sup t^3 gap(v)`` over ``window``."""
    gu = gap_series(traj, problem, Selector.AT_U)
    if C is None:
        gv = gap_series(traj, problem, Selector.AT_V)
        C = 4.0 * scaled_sup(gv, window or traj.t_span, 3.0)
    t = traj.t
    return list(zip(t, t**4 * gu.gap - C * t)), C


def descent_series(traj, problem, e_t1, t1):
    """``f(u(t)) + (alpha-2) E(t1) / (3 t^3)`` for ``t >= t1``."""
    a = traj.cfg.alpha
    out = []
    for t, u in zip(traj.t, traj.u):
        if t >= t1:
            out.append((t, problem.value(u) + (a - 2.0) * e_t1 / (3.0 * t**3)))
    return out


def grad_integral(traj, problem, from_t, to_t=None):
    """Trapezoid rule for ``int t^4 |grad f(v(t))|^2`` over the samples in range."""
    to_t = traj.t[-1] if to_t is None else to_t
    m = (traj.t >= from_t) & (traj.t <= to_t)
    t = traj.t[m]
    v = traj.u[m] + 0.25 * t[:, None] * traj.du[m]
    integrand = np.array([tt**4 * float(np.dot(g, g)) for tt, g in zip(t, map(problem.grad, v))])
    if t.size < 2:
        return 0.0
    return float(np.sum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(t)))


def distance_to_argmin_series(traj, problem, selector=Selector.AT_U, lam=None):
    pts = selector_points(traj, selector, lam)
    if Selector(selector) in (Selector.AT_PROX_U, Selector.AT_PROX_V):
        lam = _moreau_lambda(traj, lam)
        pts = np.array([problem.prox.prox(lam, x) for x in pts])
    d = [float(np.linalg.norm(x - problem.minimizer_projection(x))) for x in pts]
    return list(zip(traj.t.tolist(), d))


def first_index_at_or_after(t, t1):
    i = int(np.searchsorted(t, t1))
    if i >= len(t):
        raise ConfigurationError(f"t1={t1} beyond the trajectory")
    return i


def energy_at(traj, problem, t1, z=None):
    """Energy at the first sample ``>= t1`` (use a grid containing ``t1``)."""
    if z is None:
        z = problem.minimizer_projection(traj.u[0])
    i = first_index_at_or_after(traj.t, t1)
    return lyapunov_E(traj.state(i), problem, traj.cfg, z)
