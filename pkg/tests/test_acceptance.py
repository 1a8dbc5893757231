"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import time

import numpy as np
import pytest

from togeslab import DynamicsConfig, IntegratorConfig, builtin_problem, integrate
from togeslab.diagnostics import (
    Selector,
    check_monotone,
    descent_series,
    distance_to_argmin_series,
    energy_at,
    energy_forms,
    energy_series,
    estimate_series,
    fit_rate,
    gap_series,
    grad_integral,
    lyapunov_sc,
    moreau_gap_series,
    sc_bounds,
    scaled_sup,
    value_at,
    vanishing_ratio,
)
from togeslab.dynamics import rescale_equivalence, rescaled_counterpart, residual_reduction
from togeslab.moreau import moreau_grad, moreau_value, regularize
from togeslab.problems import check_gradient, check_hvp, scale_objective

from reference import U0, run

FUNCS = ("f1", "f2", "f3")
WINDOW = (10.0, 1000.0)
MAX_SLOPE = -3.0 + 0.15
RESULTS = []


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS.append(line)
    print("\n" + line)
    assert ok, line


def test_criterion_01_change_of_variable():
    worst, start = 0.0, time.perf_counter()
    for name in FUNCS:
        p = builtin_problem(name)
        for alpha in (3.0, 4.0):
            cfg = DynamicsConfig(kind="TOGES_V", alpha=alpha, u0=U0)
            tr = integrate(cfg, p, IntegratorConfig(t_end=100.0))
            worst = max(worst, max(residual_reduction(cfg, p, s) for s in tr.states()))
    elapsed = time.perf_counter() - start
    report(1, worst <= 1e-6 and elapsed < 10.0,
           f"max reduction residual {worst:.2e} (<= 1e-6), runtime {elapsed:.2f}s (< 10s)")


def test_criterion_02_inverse_cubic_rate():
    ok, parts = True, []
    for name in FUNCS:
        p, tr = run("TOGES_V", name, alpha=3.0)
        _, fine = run("TOGES_V", name, alpha=3.0, rel_tol=5e-10, abs_tol=5e-13)
        for sel in (Selector.AT_U, Selector.AT_V):
            est = fit_rate(gap_series(tr, p, sel), WINDOW)
            sup_fine = scaled_sup(gap_series(fine, p, sel), WINDOW)
            drift = abs(sup_fine / est.sup_scaled - 1.0)
            ok &= est.slope <= MAX_SLOPE and np.isfinite(est.sup_scaled) and drift <= 0.05
            parts.append(f"{name}/{sel.value} slope {est.slope:.2f} sup {est.sup_scaled:.3g} "
                         f"drift {drift:.1e}")
    report(2, ok, "; ".join(parts))


def test_criterion_03_little_o_proxy():
    ok, parts = True, []
    for name in FUNCS:
        p, tr = run("TOGES_V", name, alpha=4.0)
        for sel in (Selector.AT_U, Selector.AT_V):
            r = vanishing_ratio(gap_series(tr, p, sel), 100.0, 1000.0)
            ok &= r < 0.1
            parts.append(f"{name}/{sel.value} {r:.2e}")
    report(3, ok, "ratios t^3 gap(1000)/t^3 gap(100) < 0.1: " + ", ".join(parts))


def test_criterion_04_estimate_nonincreasing():
    ok, parts = True, []
    for name in FUNCS:
        p, tr = run("TOGES_V", name, alpha=3.0)
        series, C = estimate_series(tr, p)
        viol = check_monotone(series, WINDOW[0], 1e-6)
        ok &= not viol
        parts.append(f"{name} C={C:.3g} violations={len(viol)}")
    report(4, ok, "; ".join(parts))


def test_criterion_05_energy_decrease():
    p, tr = run("TOGES_VH", "f1", alpha=4.0, beta=1.0)
    rep = energy_series(tr, p, tol=1e-7, check=False)
    z = p.minimizer_projection(tr.u[0])
    worst = 0.0
    for s in tr.states():
        e1, e2 = energy_forms(s, p, tr.cfg, z)
        scale = max(abs(e1), abs(e2))
        if scale > 0:
            worst = max(worst, abs(e1 - e2) / scale)
    ok = rep.threshold_t1 == 4.0 and not rep.violations and worst <= 1e-10
    report(5, ok, f"t1={rep.threshold_t1:g}, increases after t1: {len(rep.violations)}, "
                  f"max form disagreement {worst:.1e}")


def test_criterion_06_descent_property():
    p, tr = run("TOGES_VH", "f1", alpha=4.0, beta=1.0)
    e1 = energy_at(tr, p, 4.0)
    viol = check_monotone(descent_series(tr, p, e1, 4.0), 4.0, 1e-7)
    report(6, not viol, f"E(t1)={e1:.6g}, violations on [4, 1000]: {len(viol)}")


def test_criterion_07_gradient_integral_bound():
    ok, parts = True, []
    for name in ("f1", "f3"):
        p, tr = run("TOGES_VH", name, t_end=200.0, alpha=4.0, beta=1.0)
        integral = grad_integral(tr, p, 4.0, 200.0)
        bound = (4.0 - 2.0) * energy_at(tr, p, 4.0) / 1.0
        ok &= integral <= bound
        parts.append(f"{name} {integral:.4g} <= {bound:.4g}")
    report(7, ok, "; ".join(parts))


def test_criterion_08_limiting_case_alpha3():
    p, tr = run("TOGES_VH", "f1", alpha=3.0, beta=1.0)
    est = fit_rate(gap_series(tr, p, Selector.AT_V), WINDOW)
    report(8, est.slope <= MAX_SLOPE, f"TOGES_VH alpha=3 beta=1 slope {est.slope:.2f}")


def test_criterion_09_strongly_convex_bounds():
    start = time.perf_counter()
    p = builtin_problem("quad_mu(1)")
    cfg = DynamicsConfig(kind="SC3", mu=1.0, u0=U0)
    tr = integrate(cfg, p, IntegratorConfig(t_end=50.0, sample_grid=np.linspace(1, 50, 491)))
    b = sc_bounds(tr, p)
    energy = np.array([lyapunov_sc(s, p, 1.0) for s in tr.states()])
    gap = gap_series(tr, p, Selector.AT_U).gap
    dist2 = np.array([d for _, d in distance_to_argmin_series(tr, p)]) ** 2
    elapsed = time.perf_counter() - start
    ra = np.max(energy / b["energy"])
    rb = np.max(gap / b["gap_u"])
    rc = np.max(dist2 / b["dist_u_sq"])
    tol = 1.0 + 1e-6
    ok = ra <= tol and rb <= tol and rc <= tol and elapsed < 5.0
    report(9, ok, f"max ratios to bound (a) {ra:.6f} (b) {rb:.6f} (c) {rc:.6f}, "
                  f"runtime {elapsed:.2f}s")


def test_criterion_10_exponential_beats_polynomial():
    gaps = {}
    for kind, kw in (("TOGES_V", dict(alpha=3.0)), ("TOGES_VH", dict(alpha=3.0, beta=1.0)),
                     ("SC3", dict(mu=1.0))):
        p, tr = run(kind, "f1", t_end=100.0, abs_tol=1e-30, grid=400, **kw)
        gaps[kind] = value_at(gap_series(tr, p, Selector.AT_U), 100.0)
    ok = gaps["SC3"] < gaps["TOGES_V"] and gaps["SC3"] < gaps["TOGES_VH"]
    report(10, ok, "gaps at t=100: " + ", ".join(f"{k} {v:.2e}" for k, v in gaps.items()))


def test_criterion_11_moreau_regularized():
    p, tr = run("TOGES_VR", "abs_sum", alpha=3.0, lam=1.0)
    env = moreau_gap_series(tr, p, lam=1.0)
    est = fit_rate(env, WINDOW)
    raw = gap_series(tr, p, Selector.AT_PROX_U, lam=1.0)
    bad = int(np.sum(raw.gap > env.gap))
    report(11, est.slope <= MAX_SLOPE and bad == 0,
           f"envelope gap slope {est.slope:.2f}, samples with f(prox) gap above envelope: {bad}")


def test_criterion_12_rescaling_equivalence():
    f1 = builtin_problem("f1")
    avd = DynamicsConfig(kind="AVD", alpha=3.0, u0=U0)
    tight = dict(rel_tol=1e-12, abs_tol=1e-14)
    a = integrate(avd, f1, IntegratorConfig(t_end=10.0**1.5, **tight))
    b = integrate(rescaled_counterpart(avd), scale_objective(f1, 9 / 4), IntegratorConfig(
        t_end=10.0, sample_grid=np.linspace(1, 10, 91), **tight))
    dev = rescale_equivalence(a, b)
    report(12, dev <= 1e-6, f"max deviation over s in [1, 10]: {dev:.2e}")


def _euler_du(alpha, du0, ddu0, t):
    d = (5 * du0 + ddu0) / (5 - (alpha + 1))
    c = du0 - d
    t = np.asarray(t)[:, None]
    return c * t**-5 + d * t ** -(alpha + 1)


def test_criterion_13_oracle_suites():
    rng = np.random.default_rng(13)
    worst_g = worst_h = 0.0
    for name in ("f1", "f2", "f3", "quad_mu(0.5)", "zero"):
        p = builtin_problem(name)
        for _ in range(100):
            x = rng.uniform(0.0, 3.0, 2)
            worst_g = max(worst_g, check_gradient(p, x))
            worst_h = max(worst_h, check_hvp(p, x, rng.normal(size=2)))

    worst_e = 0.0
    zero = builtin_problem("zero")
    for alpha in (3.0, 5.5):
        du0, ddu0 = np.array([1.0, -1.0]), np.array([0.5, 2.0])
        cfg = DynamicsConfig(kind="TOGES_V", alpha=alpha, u0=[1, 2], du0=du0, ddu0=ddu0)
        tr = integrate(cfg, zero, IntegratorConfig(
            t_end=100, rel_tol=1e-10, abs_tol=1e-20, sample_grid=np.geomspace(1, 100, 100)))
        exact = _euler_du(alpha, du0, ddu0, tr.t)
        worst_e = max(worst_e, float(np.max(np.abs(tr.du - exact) / np.abs(exact))))

    worst_m = 0.0
    for name in ("abs_sum", "box(-1,2)"):
        base = builtin_problem(name)
        for lam in (1.0, 0.3):
            env = regularize(base.prox, lam, base.inf_value, base.minimizer_projection, dim=2)
            for _ in range(100):
                x = rng.uniform(-4.0, 4.0, 2)
                h = 1e-5
                fd = np.array([(moreau_value(base.prox, lam, x + h * e)
                                - moreau_value(base.prox, lam, x - h * e)) / (2 * h)
                               for e in np.eye(2)])
                g = moreau_grad(base.prox, lam, x)
                worst_m = max(worst_m, float(np.max(np.abs(fd - g) / (1 + np.abs(g)))))
                assert np.allclose(env.grad(x), g)
    ok = worst_g <= 1e-6 and worst_h <= 1e-6 and worst_e <= 1e-8 and worst_m <= 1e-6
    report(13, ok, f"gradient {worst_g:.1e}, hvp {worst_h:.1e}, Euler {worst_e:.1e}, "
                   f"Moreau {worst_m:.1e}")
