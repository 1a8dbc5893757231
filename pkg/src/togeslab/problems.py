"""Convex test objectives with hand-coded oracles.

Every builtin problem knows its infimum and how to project a point onto its
argmin, so gaps ``f(x) - inf f`` and distances to the solution set can be
evaluated exactly along a trajectory.
"""

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, UnsupportedCapabilityError
from .moreau import ProxOracle, abs_sum_oracle, box_oracle

Vector = np.ndarray


def _always(x):
    return True


@dataclass(frozen=True)
class ObjectiveSpec:
    """A convex objective on R^n described by its oracles.

    ``grad`` and ``hvp`` may be ``None`` for prox-only (nonsmooth) problems.
    ``dim`` is ``None`` when the oracles accept any dimension.
    """

    name: str
    dim: Optional[int]
    value: Callable[[Vector], float]
    grad: Optional[Callable[[Vector], Vector]]
    inf_value: float
    minimizer_projection: Callable[[Vector], Vector]
    hvp: Optional[Callable[[Vector, Vector], Vector]] = None
    prox: Optional[ProxOracle] = None
    strong_convexity_mu: Optional[float] = None
    domain_check: Callable[[Vector], bool] = _always
    unique_minimizer: bool = False
    params: dict = field(default_factory=dict)

    def require(self, capability):
        if getattr(self, capability) is None:
            raise UnsupportedCapabilityError(
                f"problem {self.name!r} has no {capability} oracle"
            )


# -- builtin objectives ------------------------------------------------------


def _f1(dim=2):
    return ObjectiveSpec(
        name="f1",
        dim=dim,
        value=lambda x: 0.5 * float(np.dot(x, x)),
        grad=lambda x: np.array(x, dtype=float),
        hvp=lambda x, d: np.array(d, dtype=float),
        inf_value=0.0,
        minimizer_projection=lambda x: np.zeros_like(x, dtype=float),
        strong_convexity_mu=1.0,
        unique_minimizer=True,
    )


def _f2():
    ones = np.ones(2)

    def grad(x):
        return (x[0] + x[1] - 1.0) * ones

    def hvp(x, d):
        return (d[0] + d[1]) * ones

    def project(x):
        # orthogonal projection onto the line x1 + x2 = 1
        return np.asarray(x, dtype=float) - 0.5 * (x[0] + x[1] - 1.0) * ones

    return ObjectiveSpec(
        name="f2",
        dim=2,
        value=lambda x: 0.5 * (x[0] + x[1] - 1.0) ** 2,
        grad=grad,
        hvp=hvp,
        inf_value=0.0,
        minimizer_projection=project,
    )


F3_MINIMIZER = np.array([1.0, (math.sqrt(5.0) - 1.0) / 2.0])


def _f3_inside(x):
    return bool(x[0] > -1.0 and x[1] > -1.0)


def _f3_guard(x):
    if not _f3_inside(x):
        raise DomainError(f"f3 is undefined at {np.asarray(x).tolist()}")


def _f3_value(x):
    _f3_guard(x)
    # ln((x1+1)(x2+1)) split into two logs to avoid overflow of the product
    return x[0] + x[1] ** 2 - 2.0 * (math.log1p(x[0]) + math.log1p(x[1]))


def _f3():
    def grad(x):
        _f3_guard(x)
        return np.array([1.0 - 2.0 / (x[0] + 1.0), 2.0 * x[1] - 2.0 / (x[1] + 1.0)])

    def hvp(x, d):
        _f3_guard(x)
        return np.array(
            [2.0 / (x[0] + 1.0) ** 2 * d[0], (2.0 + 2.0 / (x[1] + 1.0) ** 2) * d[1]]
        )

    # stationarity: x1 = 1 and x2 (x2 + 1) = 1
    xstar = F3_MINIMIZER.copy()
    return ObjectiveSpec(
        name="f3",
        dim=2,
        value=_f3_value,
        grad=grad,
        hvp=hvp,
        inf_value=_f3_value(xstar),
        minimizer_projection=lambda x: xstar.copy(),
        domain_check=_f3_inside,
        unique_minimizer=True,
    )


def _quad_mu(mu=1.0, dim=2):
    mu = float(mu)
    if not mu > 0:
        raise ConfigurationError(f"quad_mu needs mu > 0, got {mu}")
    return ObjectiveSpec(
        name=f"quad_mu({mu:g})",
        dim=dim,
        value=lambda x: 0.5 * mu * float(np.dot(x, x)),
        grad=lambda x: mu * np.asarray(x, dtype=float),
        hvp=lambda x, d: mu * np.asarray(d, dtype=float),
        inf_value=0.0,
        minimizer_projection=lambda x: np.zeros_like(x, dtype=float),
        strong_convexity_mu=mu,
        unique_minimizer=True,
        params={"mu": mu},
    )


def _abs_sum(dim=2):
    oracle = abs_sum_oracle()
    return ObjectiveSpec(
        name="abs_sum",
        dim=dim,
        value=oracle.raw_value,
        grad=None,
        prox=oracle,
        inf_value=0.0,
        minimizer_projection=lambda x: np.zeros_like(x, dtype=float),
        unique_minimizer=True,
    )


def _box(lo=-1.0, hi=1.0, dim=2):
    lo, hi = float(lo), float(hi)
    oracle = box_oracle(lo, hi)
    return ObjectiveSpec(
        name=f"box({lo:g},{hi:g})",
        dim=dim,
        value=oracle.raw_value,
        grad=None,
        prox=oracle,
        inf_value=0.0,
        minimizer_projection=lambda x: np.clip(np.asarray(x, dtype=float), lo, hi),
        params={"lo": lo, "hi": hi},
    )


def _zero(dim=2):
    return ObjectiveSpec(
        name="zero",
        dim=dim,
        value=lambda x: 0.0,
        grad=lambda x: np.zeros_like(x, dtype=float),
        hvp=lambda x, d: np.zeros_like(d, dtype=float),
        inf_value=0.0,
        minimizer_projection=lambda x: np.array(x, dtype=float),
    )


_BUILDERS = {
    "f1": _f1,
    "f2": _f2,
    "f3": _f3,
    "quad_mu": _quad_mu,
    "abs_sum": _abs_sum,
    "box": _box,
    "zero": _zero,
}

_POSITIONAL = {"quad_mu": ("mu",), "box": ("lo", "hi")}

_CALL_RE = re.compile(r"^\s*([a-z_0-9]+)\s*(?:\((.*)\))?\s*$")


def problem_names():
    return sorted(_BUILDERS)


def builtin_problem(name, **params):
    """Build a named test problem.

    ``name`` may carry positional parameters inline, e.g. ``"quad_mu(0.5)"``
    or ``"box(-1, 2)"``; keyword ``params`` override them.

    >>> builtin_problem("f2").value(np.array([3.0, 1.0]))
    4.5
    """
    m = _CALL_RE.match(name)
    if m is None or m.group(1) not in _BUILDERS:
        raise ConfigurationError(f"unknown problem {name!r}; known: {problem_names()}")
    key, arglist = m.group(1), m.group(2)
    kwargs = {}
    if arglist:
        args = [a.strip() for a in arglist.split(",") if a.strip()]
        slots = _POSITIONAL.get(key, ())
        if len(args) > len(slots):
            raise ConfigurationError(f"too many arguments for {key}: {args}")
        try:
            kwargs.update({s: float(a) for s, a in zip(slots, args)})
        except ValueError as exc:
            raise ConfigurationError(f"bad argument in {name!r}") from exc
    kwargs.update(params)
    try:
        return _BUILDERS[key](**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {key}: {kwargs}") from exc


def scale_objective(problem, c):
    """Objective ``c * f`` for a constant ``c > 0``."""
    c = float(c)
    if not c > 0:
        raise ConfigurationError("scale must be positive")
    g, H, P = problem.grad, problem.hvp, problem.prox
    return ObjectiveSpec(
        name=f"{c:g}*{problem.name}",
        dim=problem.dim,
        value=lambda x: c * problem.value(x),
        grad=None if g is None else (lambda x: c * g(x)),
        hvp=None if H is None else (lambda x, d: c * H(x, d)),
        prox=None if P is None else ProxOracle(
            prox=lambda lam, x: P.prox(c * lam, x),
            raw_value=lambda x: c * P.raw_value(x),
        ),
        inf_value=c * problem.inf_value,
        minimizer_projection=problem.minimizer_projection,
        strong_convexity_mu=(
            None if problem.strong_convexity_mu is None else c * problem.strong_convexity_mu
        ),
        domain_check=problem.domain_check,
        unique_minimizer=problem.unique_minimizer,
    )


# -- finite-difference checkers ----------------------------------------------


def _rel_err(approx, exact):
    return float(np.max(np.abs(approx - exact) / (1.0 + np.abs(exact))))


def check_gradient(problem, x, h=1e-5):
    """Max relative error between ``grad`` and central differences of ``value``.

    The per-coordinate error is ``|fd - g| / (1 + |g|)``.
    """
    problem.require("grad")
    x = np.asarray(x, dtype=float)
    if not problem.domain_check(x):
        raise DomainError(f"{problem.name}: {x.tolist()} is outside the domain")
    if not h > 0:
        raise ConfigurationError("step must be positive")
    g = problem.grad(x)
    fd = np.empty_like(g)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fd[i] = (problem.value(x + e) - problem.value(x - e)) / (2.0 * h)
    return _rel_err(fd, g)


def check_hvp(problem, x, d, h=1e-5):
    """Compare ``hvp(x, d)`` with a central difference of ``grad`` along ``d``."""
    problem.require("hvp")
    problem.require("grad")
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if not problem.domain_check(x):
        raise DomainError(f"{problem.name}: {x.tolist()} is outside the domain")
    exact = problem.hvp(x, d)
    fd = (problem.grad(x + h * d) - problem.grad(x - h * d)) / (2.0 * h)
    return _rel_err(fd, exact)
