"""Batch experiments: integrate a grid of runs, emit CSVs, rate reports and plots.

A config is a JSON document::

    {
      "output_dir": "out",
      "seed": 0,
      "runs": [
        {"name": "f1_toges_v",
         "problem": "f1",
         "dynamics": {"kind": "TOGES_V", "alpha": 3, "u0": [3, 1]},
         "integrator": {"t_end": 1000, "samples": 400},
         "diagnostics": {"energy": false, "rate_windows": [[10, 1000]],
                         "checks": [{"type": "rate", "selector": "AT_U",
                                     "window": [10, 1000], "max_slope": -2.85}]}}
      ],
      "figures": [{"name": "fig", "runs": ["f1_toges_v"], "scale": "loglog"}],
      "cross_checks": []
    }
"""

import copy
import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .dynamics import DynamicsConfig, Kind, check_capabilities, residual_reduction
from .errors import ConfigurationError, TogesError, UnsupportedCapabilityError
from .integrator import IntegratorConfig, integrate
from .moreau import moreau_value, regularize
from .problems import builtin_problem, check_gradient

COLUMNS = ["t", "gap_u", "gap_v", "grad_norm_v", "energy", "dist_argmin"]
OUT_ENV = "TOGESLAB_OUT"


class ConfigParseError(ConfigurationError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


@dataclass
class RunResult:
    name: str
    csv_path: Path
    failures: list = field(default_factory=list)
    rates: list = field(default_factory=list)


@dataclass
class ExperimentResult:
    runs: list
    failures: list
    figures: list

    @property
    def ok(self):
        return not self.failures


# -- config ----------------------------------------------------------------------


def parse_config(text):
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(cfg, dict):
        raise ConfigParseError("top level must be an object", 1, 1)
    runs = cfg.setdefault("runs", [])
    names = [r.get("name") for r in runs]
    if any(not n for n in names):
        raise ConfigParseError("every run needs a name")
    if len(set(names)) != len(names):
        raise ConfigParseError(f"duplicate run names in {names}")
    return cfg


def load_config(path):
    return parse_config(Path(path).read_text())


def build_problem(spec):
    if isinstance(spec, str):
        return builtin_problem(spec)
    spec = dict(spec)
    return builtin_problem(spec.pop("name"), **spec)


def build_dynamics(spec):
    return DynamicsConfig(**spec)


def build_integrator(spec, t0, tol_scale=1.0):
    spec = dict(spec)
    samples = spec.pop("samples", None)
    spacing = spec.pop("spacing", "geom")
    if samples is not None and "sample_grid" not in spec:
        t_end = spec["t_end"]
        if spacing == "geom":
            grid = np.geomspace(t0, t_end, int(samples))
        else:
            grid = np.linspace(t0, t_end, int(samples))
        extra = spec.pop("extra_times", [])
        grid = np.unique(np.concatenate([grid, extra, [t0, t_end]]))
        spec["sample_grid"] = grid.tolist()
    spec.pop("extra_times", None)
    icfg = IntegratorConfig(**spec)
    return icfg.scaled(tol_scale) if tol_scale != 1.0 else icfg


def validate_run(run):
    """Build every object a run needs; capability problems raise UnsupportedCapabilityError."""
    problem = build_problem(run["problem"])
    dyn = build_dynamics(run["dynamics"])
    check_capabilities(dyn, problem)
    sels = run.get("diagnostics", {}).get("selectors", [])
    for sel in sels:
        sel = dg.Selector(sel)
        if sel in (dg.Selector.AT_PROX_U, dg.Selector.AT_PROX_V) and problem.prox is None:
            raise UnsupportedCapabilityError(f"{sel.value} needs a prox oracle")
    return problem, dyn


# -- per-run work ------------------------------------------------------------------


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _smooth_problem(problem, dyn):
    """The objective the dynamic actually minimizes."""
    if dyn.kind is Kind.TOGES_VR:
        return regularize(
            problem.prox, dyn.lam, problem.inf_value, problem.minimizer_projection,
            dim=problem.dim, name=f"{problem.name}_lam{dyn.lam:g}",
        )
    return problem


def _aux_points(traj):
    cfg = traj.cfg
    if cfg.order == 2:
        return traj.u
    if cfg.kind is Kind.SC3:
        return traj.u + traj.du / math.sqrt(cfg.mu)
    return traj.u + 0.25 * traj.t[:, None] * traj.du


def run_columns(traj, problem, want_energy):
    """Column arrays of the per-run CSV (``None`` entries render empty)."""
    dyn = traj.cfg
    smooth = _smooth_problem(problem, dyn)
    cols = {"t": traj.t}
    cols["gap_u"] = dg.gap_series(traj, smooth, dg.Selector.AT_U).gap
    aux = _aux_points(traj)
    if dyn.order == 3:
        gv = np.array([smooth.value(x) for x in aux]) - smooth.inf_value
        cols["gap_v"] = np.maximum(gv, 0.0)
    else:
        cols["gap_v"] = [None] * len(traj)
    cols["grad_norm_v"] = np.array([np.linalg.norm(smooth.grad(x)) for x in aux])
    energy = [None] * len(traj)
    if want_energy:
        if dyn.kind in (Kind.TOGES_V, Kind.TOGES_VH):
            energy = dg.energy_series(traj, smooth).values
        elif dyn.kind is Kind.SC3:
            energy = dg.sc_energy_series(traj, smooth)
    cols["energy"] = energy
    cols["dist_argmin"] = np.array(
        [d for _, d in dg.distance_to_argmin_series(traj, smooth, dg.Selector.AT_U)]
    )
    if dyn.kind is Kind.TOGES_VR:
        cols["gap_prox_u"] = dg.gap_series(traj, problem, dg.Selector.AT_PROX_U).gap
    return cols


def write_csv(path, cols):
    names = list(cols)
    n = len(cols["t"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(n):
        w.writerow([_fmt(cols[c][i]) for c in names])
    Path(path).write_text(buf.getvalue())


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in body]
        out[name] = None if all(v == "" for v in vals) else np.array(
            [float(v) if v != "" else np.nan for v in vals]
        )
    return out


def _run_checks(run, traj, problem, cols, seed):
    dyn = traj.cfg
    smooth = _smooth_problem(problem, dyn)
    failures = []
    diag = run.get("diagnostics", {})
    for chk in diag.get("checks", []):
        kind = chk["type"]
        if kind == "rate":
            col = {"AT_U": "gap_u", "AT_V": "gap_v"}[chk.get("selector", "AT_U")]
            series = dg.GapSeries(cols["t"], np.asarray(cols[col], dtype=float), dg.Selector.AT_U)
            est = dg.fit_rate(series, tuple(chk["window"]), chk.get("power", 3.0))
            if not est.slope <= chk["max_slope"]:
                failures.append(f"rate {col} slope {est.slope:.4f} > {chk['max_slope']}")
        elif kind == "energy_monotone":
            rep = dg.energy_series(traj, smooth, tol=chk.get("tol", 1e-7))
            if rep.violations:
                failures.append(f"energy increased at {len(rep.violations)} samples")
        elif kind == "reduction":
            tol = chk.get("tol", 1e-6)
            worst = max(residual_reduction(dyn, problem, s) for s in traj.states())
            if worst > tol:
                failures.append(f"reduction residual {worst:.3e} > {tol}")
        elif kind == "prox_bound":
            bad = np.sum(np.asarray(cols["gap_prox_u"]) > np.asarray(cols["gap_u"]))
            if bad:
                failures.append(f"prox gap above envelope gap at {bad} samples")
        elif kind == "sc_bounds":
            tol = chk.get("tol", 1e-6)
            b = dg.sc_bounds(traj, smooth)
            e = dg.sc_energy_series(traj, smooth)
            d2 = np.asarray(cols["dist_argmin"]) ** 2
            for label, val, bound in (
                ("energy", e, b["energy"]),
                ("gap_u", np.asarray(cols["gap_u"]), b["gap_u"]),
                ("dist", d2, b["dist_u_sq"]),
            ):
                if np.any(val > bound * (1.0 + tol)):
                    failures.append(f"{label} exceeds its exponential bound")
        elif kind == "gradient":
            rng = np.random.default_rng(seed)
            tol = chk.get("tol", 1e-6)
            lo, hi = chk.get("box", [0.0, 3.0])
            for _ in range(int(chk.get("points", 100))):
                x = rng.uniform(lo, hi, size=dyn.dim)
                err = check_gradient(smooth, x)
                if err > tol:
                    failures.append(f"gradient check {err:.2e} at {x.tolist()}")
                    break
        else:
            raise ConfigurationError(f"unknown check type {kind!r}")
    return failures


def execute_run(run, out_dir, seed=0, tol_scale=1.0):
    """Integrate one run and write ``<name>.csv`` and ``<name>.rates.txt``."""
    problem, dyn = validate_run(run)
    icfg = build_integrator(run["integrator"], dyn.t0, tol_scale)
    traj = integrate(dyn, problem, icfg)
    diag = run.get("diagnostics", {})
    cols = run_columns(traj, problem, diag.get("energy", False))
    out = Path(out_dir)
    csv_path = out / f"{run['name']}.csv"
    write_csv(csv_path, cols)

    power = diag.get("power", 3.0)
    lines, rates = [], []
    for window in diag.get("rate_windows", []):
        for col in ("gap_u", "gap_v"):
            if cols[col][0] is None:
                continue
            series = dg.GapSeries(cols["t"], np.asarray(cols[col], dtype=float), dg.Selector.AT_U)
            try:
                est = dg.fit_rate(series, tuple(window), power)
            except dg.InsufficientDataError as exc:
                lines.append(f"{col} [{window[0]:g},{window[1]:g}] insufficient data: {exc}")
                continue
            rates.append((col, est))
            lines.append(
                f"{col} [{window[0]:g},{window[1]:g}] slope={est.slope:.6f} "
                f"sup_t^{power:g}_gap={est.sup_scaled:.6e} used={est.used}"
            )
    (out / f"{run['name']}.rates.txt").write_text("".join(l + "\n" for l in lines))
    failures = [f"{run['name']}: {m}" for m in _run_checks(run, traj, problem, cols, seed)]
    return RunResult(run["name"], csv_path, failures, rates)


def _execute_star(args):
    return execute_run(*args)


# -- figures -----------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#2ca02c", "#d62728", "#e377c2", "#ff7f0e", "#9467bd", "#8c564b"]


def render_svg(curves, title, loglog=True, width=640, height=420):
    """Self-contained SVG with one polyline per ``(label, t, y)`` curve.

    The y axis is always logarithmic; the x axis is logarithmic when ``loglog``.
    """
    pad_l, pad_r, pad_t, pad_b = 70, 150, 30, 45
    pts = []
    for label, t, y in curves:
        t, y = np.asarray(t, float), np.asarray(y, float)
        m = np.isfinite(y) & (y > 0)
        pts.append((label, t[m], y[m]))
    ys = np.concatenate([p[2] for p in pts if p[2].size] or [np.array([1e-16, 1.0])])
    ts = np.concatenate([p[1] for p in pts if p[1].size] or [np.array([1.0, 10.0])])
    ylo, yhi = math.floor(np.log10(ys.min())), math.ceil(np.log10(ys.max()))
    if yhi == ylo:
        yhi += 1
    fx = np.log10 if loglog else (lambda a: np.asarray(a, float))
    xlo, xhi = float(fx(ts.min())), float(fx(ts.max()))
    if xhi == xlo:
        xhi = xlo + 1
    W, H = width - pad_l - pad_r, height - pad_t - pad_b

    def X(t):
        return pad_l + (fx(t) - xlo) / (xhi - xlo) * W

    def Y(y):
        return pad_t + (yhi - np.log10(y)) / (yhi - ylo) * H

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{W}" height="{H}" fill="none" stroke="black"/>',
        f'<text x="{pad_l}" y="18" font-size="13">{title}</text>',
    ]
    step = max(1, (yhi - ylo) // 8)
    for k in range(ylo, yhi + 1, step):
        yy = Y(10.0**k)
        out.append(f'<line x1="{pad_l - 4}" y1="{yy:.1f}" x2="{pad_l}" y2="{yy:.1f}" stroke="black"/>')
        out.append(f'<text x="{pad_l - 6}" y="{yy + 4:.1f}" text-anchor="end">1e{k}</text>')
    if loglog:
        ticks = [10.0**k for k in range(math.ceil(xlo), math.floor(xhi) + 1)]
    else:
        ticks = np.linspace(xlo, xhi, 6)
    for tk in ticks:
        xx = X(tk)
        label = f"1e{int(round(math.log10(tk)))}" if loglog else f"{tk:g}"
        out.append(f'<line x1="{xx:.1f}" y1="{pad_t + H}" x2="{xx:.1f}" y2="{pad_t + H + 4}" stroke="black"/>')
        out.append(f'<text x="{xx:.1f}" y="{pad_t + H + 16}" text-anchor="middle">{label}</text>')
    out.append(f'<text x="{pad_l + W / 2:.0f}" y="{height - 8}" text-anchor="middle">t</text>')
    for i, (label, t, y) in enumerate(pts):
        color = _PALETTE[i % len(_PALETTE)]
        if t.size:
            coords = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(t, y))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.3" points="{coords}"/>')
        ly = pad_t + 14 + 16 * i
        out.append(f'<line x1="{pad_l + W + 10}" y1="{ly - 4}" x2="{pad_l + W + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{pad_l + W + 34}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def gnuplot_script(name, csv_names, loglog=True, column="gap_u"):
    col = COLUMNS.index(column) + 1
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set logscale {'xy' if loglog else 'y'}",
        "set xlabel 't'",
        f"set ylabel '{column}'",
        f"set terminal svg; set output '{name}.gnuplot.svg'",
    ]
    plots = [f"'{c}' using 1:{col} with lines title '{Path(c).stem}'" for c in csv_names]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def write_figure(fig, results, out_dir):
    out = Path(out_dir)
    column = fig.get("column", "gap_u")
    loglog = fig.get("scale", "loglog") == "loglog"
    curves, csvs = [], []
    for name in fig["runs"]:
        res = results[name]
        data = read_csv(res.csv_path)
        curves.append((name, data["t"], data[column]))
        csvs.append(res.csv_path.name)
    svg = render_svg(curves, fig.get("title", fig["name"]), loglog=loglog)
    (out / f"{fig['name']}.svg").write_text(svg)
    (out / f"{fig['name']}.gp").write_text(gnuplot_script(fig["name"], csvs, loglog, column))
    return out / f"{fig['name']}.svg"


def _cross_checks(cfg, results):
    failures = []
    for chk in cfg.get("cross_checks", []):
        if chk["type"] != "gap_order":
            raise ConfigurationError(f"unknown cross check {chk['type']!r}")
        col = chk.get("column", "gap_u")
        at = chk["at"]

        def value(name):
            d = read_csv(results[name].csv_path)
            i = int(np.argmin(np.abs(d["t"] - at)))
            return d[col][i]

        small = value(chk["smaller"])
        for other in chk["than"]:
            if not small < value(other):
                failures.append(f"gap_order: {chk['smaller']} not below {other} at t={at}")
    return failures


def run_experiment(cfg, out_dir=None, workers=1, tol_scale=1.0):
    """Run every entry of a parsed config and write its artifacts.

    Runs are validated up front, so a capability mismatch aborts before any
    integration. Invariant failures are collected, not raised.
    """
    out_dir = Path(out_dir or cfg.get("output_dir") or os.environ.get(OUT_ENV) or "togeslab_out")
    runs = cfg.get("runs", [])
    for run in runs:
        try:
            validate_run(run)
        except UnsupportedCapabilityError as exc:
            raise UnsupportedCapabilityError(f"run {run['name']!r}: {exc}") from exc
    if not runs:
        return ExperimentResult([], [], [])
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg.get("seed", 0)
    jobs = [(run, out_dir, seed, tol_scale) for run in runs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_star, jobs))
    else:
        results = [_execute_star(j) for j in jobs]
    by_name = {r.name: r for r in results}
    failures = [f for r in results for f in r.failures]
    failures += _cross_checks(cfg, by_name)
    figures = [write_figure(fig, by_name, out_dir) for fig in cfg.get("figures", [])]
    return ExperimentResult(results, failures, figures)


# -- rate reports over emitted CSVs --------------------------------------------------


def rates_from_csv(path, power, window):
    """``[(column, RateEstimate | None)]`` for the gap columns of one CSV."""
    data = read_csv(path)
    out = []
    for col in ("gap_u", "gap_v"):
        if data.get(col) is None:
            continue
        series = dg.GapSeries(data["t"], data[col], dg.Selector.AT_U)
        try:
            out.append((col, dg.fit_rate(series, window, power)))
        except dg.InsufficientDataError:
            out.append((col, None))
    return out


def report_rates(csv_paths, power=3.0, window=(10.0, 1000.0), threshold=None):
    """One line per series: name, fitted slope, sup t^p gap, verdict."""
    threshold = -power + 0.15 if threshold is None else threshold
    lines = []
    for path in csv_paths:
        stem = Path(path).stem
        for col, est in rates_from_csv(path, power, window):
            if est is None:
                lines.append(f"{stem}:{col} insufficient-data")
                continue
            verdict = "pass" if est.slope <= threshold else "fail"
            lines.append(
                f"{stem}:{col} slope={est.slope:.3f} sup={est.sup_scaled:.6e} {verdict}"
            )
    return "\n".join(lines) + ("\n" if lines else "")


# -- presets ------------------------------------------------------------------------

_FIG1_SYSTEMS = [
    ("TOGES", {"kind": "TOGES", "alpha": 3}),
    ("TOGES_V", {"kind": "TOGES_V", "alpha": 3}),
    ("TOGES_VH", {"kind": "TOGES_VH", "alpha": 3, "beta": 1.0}),
]


def _figure1():
    runs, figures = [], []
    for fn in ("f1", "f2", "f3"):
        names = []
        for label, dyn in _FIG1_SYSTEMS:
            name = f"fig1_{fn}_{label}"
            names.append(name)
            checks = []
            if label != "TOGES":
                checks.append({"type": "rate", "selector": "AT_U",
                               "window": [10, 1000], "max_slope": -2.85})
            if label == "TOGES_V":
                checks.append({"type": "reduction", "tol": 1e-6})
            runs.append({
                "name": name,
                "problem": fn,
                "dynamics": dict(dyn, u0=[3, 1], du0=[0, 0], ddu0=[0, 0], t0=1.0),
                "integrator": {"t_end": 1000, "samples": 300},
                "diagnostics": {"rate_windows": [[10, 1000]], "checks": checks},
            })
        figures.append({"name": f"figure1_{fn}", "runs": names, "scale": "loglog",
                        "title": f"{fn}: TOGES / TOGES-V / TOGES-VH, alpha=3, beta=1"})
    return {"runs": runs, "figures": figures}


def _figure2():
    systems = [
        ("TOGES_V", {"kind": "TOGES_V", "alpha": 3}),
        ("TOGES_VH", {"kind": "TOGES_VH", "alpha": 3, "beta": 1.0}),
        ("SC3", {"kind": "SC3", "mu": 1.0}),
        ("HEAVY_BALL", {"kind": "HEAVY_BALL", "mu": 1.0}),
    ]
    runs = []
    for label, dyn in systems:
        checks = [{"type": "sc_bounds", "tol": 1e-6}] if label == "SC3" else []
        runs.append({
            "name": f"fig2_{label}",
            "problem": "f1",
            "dynamics": dict(dyn, u0=[3, 1], t0=1.0),
            "integrator": {"t_end": 100, "samples": 400, "spacing": "lin",
                           "abs_tol": 1e-30},
            "diagnostics": {"energy": label in ("TOGES_V", "TOGES_VH", "SC3"),
                            "checks": checks},
        })
    names = [r["name"] for r in runs]
    return {
        "runs": runs,
        "figures": [{"name": "figure2", "runs": names, "scale": "semilog",
                     "title": "f1, mu=1: TOGES-V / TOGES-VH / SC3 / heavy ball"}],
        "cross_checks": [{"type": "gap_order", "at": 100, "smaller": "fig2_SC3",
                          "than": ["fig2_TOGES_V", "fig2_TOGES_VH"]}],
    }


PRESETS = {
    "figure1": ("TOGES, TOGES-V, TOGES-VH on f1, f2, f3 (alpha=3, beta=1)", _figure1),
    "figure2": ("TOGES-V, TOGES-VH, SC3, heavy ball on f1 with mu=1", _figure2),
}


def preset(name):
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name][1]())
