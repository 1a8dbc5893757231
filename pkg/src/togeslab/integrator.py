"""Adaptive Dormand-Prince 5(4) integration with dense output.

Steps whose stages leave the objective's domain are rejected and halved
rather than aborting the run.
"""

import bisect
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import PhaseState, vector_field
from .errors import (
    ConfigurationError,
    DomainError,
    IntegrationError,
    OutOfRangeError,
    TruncatedTrajectoryError,
)

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
)
# continuous extension of order 4
D1, D3, D4, D5, D6, D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)

SAFETY = 0.9
FAC_MIN, FAC_MAX = 0.2, 10.0
PI_BETA = 0.04
EXPO = 0.2 - 0.75 * PI_BETA
MAX_DOMAIN_REJECTS = 40


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    h_init: float = 1e-3
    h_max: Optional[float] = None
    sample_grid: Optional[Sequence[float]] = None
    max_steps: int = 2_000_000
    keep_dense: bool = True

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigurationError("tolerances must be positive")
        if not self.h_init > 0:
            raise ConfigurationError("h_init must be positive")
        if self.sample_grid is not None:
            g = np.asarray(self.sample_grid, dtype=float)
            if np.any(np.diff(g) <= 0):
                raise ConfigurationError("sample_grid must be strictly increasing")

    def resolved_h_max(self):
        return self.h_max if self.h_max is not None else self.t_end / 100.0

    def grid(self, t0):
        if not self.t_end > t0:
            raise ConfigurationError(f"t_end={self.t_end} must exceed t0={t0}")
        if self.sample_grid is None:
            g = np.geomspace(t0, self.t_end, 201)
            g[0], g[-1] = t0, self.t_end
        else:
            g = np.asarray(self.sample_grid, dtype=float)
            if g[0] < t0 or g[-1] > self.t_end:
                raise ConfigurationError("sample_grid must lie within [t0, t_end]")
        if g[0] != t0:
            g = np.concatenate(([t0], g))
        return g

    def scaled(self, factor):
        """Copy with both tolerances multiplied by ``factor``."""
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data["rel_tol"] *= factor
        data["abs_tol"] *= factor
        return IntegratorConfig(**data)


@dataclass
class Trajectory:
    """Recorded solution: samples on a grid plus the per-step dense output.

    ``y`` holds the packed states, ``dy`` the field evaluated at each sample
    (so the top derivative is available without re-deriving it).
    """

    cfg: object
    problem_name: str
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    step_stats: dict
    dense: str = "dopri5"
    step_t: np.ndarray = field(default=None, repr=False)
    step_h: np.ndarray = field(default=None, repr=False)
    step_coef: np.ndarray = field(default=None, repr=False)

    @property
    def order(self):
        return self.cfg.order

    @property
    def n(self):
        return self.y.shape[1] // self.order

    def _block(self, arr, i):
        return arr[:, i * self.n:(i + 1) * self.n]

    @property
    def u(self):
        return self._block(self.y, 0)

    @property
    def du(self):
        return self._block(self.y, 1)

    @property
    def ddu(self):
        if self.order == 2:
            return np.zeros((len(self.t), 0))
        return self._block(self.y, 2)

    @property
    def top(self):
        """Top derivative at each sample (``u'''``, or ``x''`` for second order)."""
        return self._block(self.dy, self.order - 1)

    @property
    def t_span(self):
        return float(self.t[0]), float(self.t[-1])

    def state(self, i):
        return PhaseState.from_vector(self.t[i], self.y[i], self.order, self.dy[i])

    def states(self):
        for i in range(len(self.t)):
            yield self.state(i)

    def __len__(self):
        return len(self.t)


def _error_norm(err, y0, y1, rtol, atol):
    sk = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / sk) ** 2)))


def _interp(coef, theta):
    r1, r2, r3, r4, r5 = coef
    th1 = 1.0 - theta
    return r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)))


def integrate(cfg, problem, icfg):
    """Integrate ``cfg`` on ``problem`` from ``cfg.t0`` to ``icfg.t_end``.

    Raises :class:`TruncatedTrajectoryError` (carrying the partial
    trajectory) when ``max_steps`` runs out, and :class:`IntegrationError`
    after too many consecutive domain rejections.
    """
    rhs = vector_field(cfg, problem)
    order = cfg.order
    n = cfg.dim
    inside = problem.domain_check
    rtol, atol = icfg.rel_tol, icfg.abs_tol
    h_max = icfg.resolved_h_max()
    t_end = float(icfg.t_end)
    grid = icfg.grid(cfg.t0)

    t = float(cfg.t0)
    y = cfg.initial_vector()
    k1 = rhs(t, y)

    ts, ys, dys = [t], [y.copy()], [k1.copy()]
    gi = 1
    step_t, step_h, step_coef = [], [], []
    stats = {"accepted": 0, "rejected": 0, "domain_rejected": 0, "nfev": 1}

    def partial():
        return _build(cfg, problem, ts, ys, dys, stats, step_t, step_h, step_coef, icfg)

    h = min(icfg.h_init, h_max, t_end - t)
    facold = 1e-4
    just_rejected = False
    domain_streak = 0
    while t < t_end:
        if stats["accepted"] + stats["rejected"] >= icfg.max_steps:
            raise TruncatedTrajectoryError(
                f"max_steps={icfg.max_steps} exhausted at t={t:g}", partial()
            )
        last = t + h >= t_end * (1.0 - 1e-14)
        if last:
            h = t_end - t
        t_new = t_end if last else t + h
        try:
            k2 = rhs(t + C2 * h, y + h * A21 * k1)
            k3 = rhs(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
            k4 = rhs(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = rhs(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            ysti = y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)
            k6 = rhs(t_new, ysti)
            y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
            k7 = rhs(t_new, y1)
            stats["nfev"] += 6
            if not inside(y1[:n]):
                raise DomainError("step endpoint left the domain")
        except DomainError as exc:
            stats["rejected"] += 1
            stats["domain_rejected"] += 1
            domain_streak += 1
            if domain_streak >= MAX_DOMAIN_REJECTS:
                raise IntegrationError(
                    f"{MAX_DOMAIN_REJECTS} consecutive domain rejections at t={t:g}: {exc}",
                    partial(),
                ) from exc
            h *= 0.5
            just_rejected = True
            continue

        errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        err = _error_norm(errv, y, y1, rtol, atol)
        fac11 = err**EXPO if err > 0 else 0.0

        if err > 1.0:
            stats["rejected"] += 1
            h = h / min(1.0 / FAC_MIN, fac11 / SAFETY)
            just_rejected = True
            continue

        coef = None
        if icfg.keep_dense or (gi < len(grid) and grid[gi] <= t_new):
            dy = y1 - y
            bspl = h * k1 - dy
            coef = (
                y,
                dy,
                bspl,
                dy - h * k7 - bspl,
                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            )

        # samples falling in (t, t_new]
        new_samples = []
        try:
            j = gi
            while j < len(grid) and grid[j] <= t_new:
                ts_j = float(grid[j])
                if ts_j == t_new:
                    yj, dyj = y1, k7
                else:
                    yj = _interp(coef, (ts_j - t) / h)
                    if not inside(yj[:n]):
                        raise DomainError("interpolated sample left the domain")
                    dyj = rhs(ts_j, yj)
                    stats["nfev"] += 1
                new_samples.append((ts_j, yj.copy(), dyj.copy()))
                j += 1
        except DomainError:
            stats["rejected"] += 1
            stats["domain_rejected"] += 1
            h *= 0.5
            just_rejected = True
            continue

        domain_streak = 0
        stats["accepted"] += 1
        for ts_j, yj, dyj in new_samples:
            ts.append(ts_j)
            ys.append(yj)
            dys.append(dyj)
        gi += len(new_samples)
        if icfg.keep_dense:
            step_t.append(t)
            step_h.append(h)
            step_coef.append(np.stack(coef))

        fac = fac11 / facold**PI_BETA
        fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFETY))
        h_new = h / fac
        if just_rejected:
            h_new = min(h_new, h)
        facold = max(err, 1e-4)
        just_rejected = False
        t, y, k1 = t_new, y1, k7
        h = min(h_new, h_max)

    return partial()


def _build(cfg, problem, ts, ys, dys, stats, step_t, step_h, step_coef, icfg):
    keep = icfg.keep_dense and len(step_t) > 0
    return Trajectory(
        cfg=cfg,
        problem_name=problem.name,
        t=np.array(ts),
        y=np.array(ys),
        dy=np.array(dys),
        step_stats=dict(stats),
        dense="dopri5" if keep else "hermite",
        step_t=np.array(step_t) if keep else None,
        step_h=np.array(step_h) if keep else None,
        step_coef=np.array(step_coef) if keep else None,
    )


def _hermite(traj, t):
    i = max(1, int(np.searchsorted(traj.t, t)))
    t0, t1 = traj.t[i - 1], traj.t[i]
    h = t1 - t0
    s = (t - t0) / h
    y0, y1, f0, f1 = traj.y[i - 1], traj.y[i], traj.dy[i - 1], traj.dy[i]
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def sample_at(traj, t):
    """State at time ``t`` from the dense output; exact at stored samples."""
    lo, hi = traj.t_span
    if not lo <= t <= hi:
        raise OutOfRangeError(f"t={t} outside [{lo}, {hi}]")
    i = bisect.bisect_left(traj.t, t)
    if i < len(traj.t) and traj.t[i] == t:
        return traj.state(i)
    if traj.dense == "dopri5":
        k = max(0, int(np.searchsorted(traj.step_t, t, side="right")) - 1)
        theta = (t - traj.step_t[k]) / traj.step_h[k]
        y = _interp(traj.step_coef[k], theta)
    else:
        y = _hermite(traj, t)
    return PhaseState.from_vector(t, y, traj.order)
