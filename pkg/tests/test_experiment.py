import json

import numpy as np
import pytest

from togeslab import cli
from togeslab import diagnostics as dg
from togeslab import experiment as ex
from togeslab.errors import UnsupportedCapabilityError


def _small_run(name="v_f1", kind="TOGES_V", problem="f1", checks=(), **dyn):
    dynamics = {"kind": kind, "u0": [3, 1], **dyn}
    if kind in ("TOGES_V", "TOGES_VH", "TOGES", "TOGES_VR", "AVD") and "alpha" not in dyn:
        dynamics["alpha"] = 3
    return {
        "name": name,
        "problem": problem,
        "dynamics": dynamics,
        "integrator": {"t_end": 100, "samples": 120},
        "diagnostics": {"rate_windows": [[10, 100]], "energy": kind in ("TOGES_V", "TOGES_VH"),
                        "checks": list(checks)},
    }


def _write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2))
    return str(p)


# -- config parsing ---------------------------------------------------------------


def test_parse_error_reports_line_and_column():
    with pytest.raises(ex.ConfigParseError) as info:
        ex.parse_config('{\n  "runs": [\n    {"name": "a",,}\n  ]\n}')
    assert info.value.line == 3
    assert info.value.column > 1


def test_duplicate_run_names_rejected():
    with pytest.raises(ex.ConfigParseError):
        ex.parse_config(json.dumps({"runs": [_small_run("a"), _small_run("a")]}))


def test_integrator_grid_from_config():
    icfg = ex.build_integrator({"t_end": 50, "samples": 11, "spacing": "lin",
                                "extra_times": [7.5]}, 1.0)
    g = np.asarray(icfg.sample_grid)
    assert g[0] == 1.0 and g[-1] == 50.0
    assert 7.5 in g
    assert len(g) == 12
    assert ex.build_integrator({"t_end": 10}, 1.0, tol_scale=0.5).rel_tol == 0.5e-9


# -- CLI exit codes ---------------------------------------------------------------


def test_empty_run_list_writes_nothing(tmp_path):
    out = tmp_path / "out"
    cfg = _write_cfg(tmp_path, {"runs": []})
    assert cli.main(["run", cfg, "--out", str(out)]) == 0
    assert not out.exists()


def test_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"runs": [\n  {"name": 1\n}')
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "line" in capsys.readouterr().err


def test_capability_mismatch_exit_code(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, {"runs": [_small_run("vh_abs", kind="TOGES_VH", problem="abs_sum",
                                                    beta=1.0)]})
    out = tmp_path / "o"
    assert cli.main(["run", cfg, "--out", str(out)]) == 3
    assert "vh_abs" in capsys.readouterr().err
    assert not out.exists()


def test_capability_mismatch_raised_in_process():
    with pytest.raises(UnsupportedCapabilityError):
        ex.run_experiment({"runs": [_small_run("x", kind="TOGES_V", problem="abs_sum")]}, "unused")


def test_violation_exit_code(tmp_path, capsys):
    chk = {"type": "rate", "selector": "AT_U", "window": [10, 100], "max_slope": -100}
    cfg = _write_cfg(tmp_path, {"runs": [_small_run(checks=[chk])]})
    assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "VIOLATION" in capsys.readouterr().err


def test_passing_checks_exit_zero(tmp_path):
    checks = [
        {"type": "rate", "selector": "AT_U", "window": [10, 100], "max_slope": -2.85},
        {"type": "reduction", "tol": 1e-6},
        {"type": "energy_monotone", "tol": 1e-7},
        {"type": "gradient", "points": 20},
    ]
    cfg = _write_cfg(tmp_path, {"seed": 3, "runs": [_small_run(checks=checks)]})
    out = tmp_path / "o"
    assert cli.main(["run", cfg, "--out", str(out)]) == 0
    assert (out / "v_f1.csv").exists()
    assert "slope=" in (out / "v_f1.rates.txt").read_text()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(ex.OUT_ENV, str(tmp_path / "env_out"))
    ex.run_experiment({"runs": [_small_run()]})
    assert (tmp_path / "env_out" / "v_f1.csv").exists()


# -- artifacts --------------------------------------------------------------------


def test_csv_columns(tmp_path):
    cfg = {"runs": [_small_run(), _small_run("hb", kind="HEAVY_BALL", mu=1.0),
                    _small_run("vr", kind="TOGES_VR", problem="abs_sum", lam=1.0)]}
    ex.run_experiment(cfg, tmp_path)
    v = ex.read_csv(tmp_path / "v_f1.csv")
    assert list(v) == ex.COLUMNS
    assert v["energy"] is not None
    hb = ex.read_csv(tmp_path / "hb.csv")
    assert hb["gap_v"] is None and hb["energy"] is None
    vr = ex.read_csv(tmp_path / "vr.csv")
    assert list(vr) == ex.COLUMNS + ["gap_prox_u"]
    assert np.all(vr["gap_prox_u"] <= vr["gap_u"])


def test_csv_is_deterministic(tmp_path):
    cfg = {"seed": 1, "runs": [_small_run(), _small_run("vh", kind="TOGES_VH", beta=1.0)]}
    ex.run_experiment(cfg, tmp_path / "a")
    ex.run_experiment(cfg, tmp_path / "b", workers=2)
    for name in ("v_f1.csv", "vh.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_round_trip_matches_in_process_fit(tmp_path):
    res = ex.run_experiment({"runs": [_small_run()]}, tmp_path)
    in_process = dict(res.runs[0].rates)
    from_file = dict(ex.rates_from_csv(res.runs[0].csv_path, 3.0, (10.0, 100.0)))
    for col in ("gap_u", "gap_v"):
        a, b = in_process[col], from_file[col]
        assert b.slope == pytest.approx(a.slope, rel=1e-12, abs=1e-12)
        assert b.sup_scaled == pytest.approx(a.sup_scaled, rel=1e-12)


def test_synthetic_csv_rate_report(tmp_path, capsys):
    t = np.geomspace(1, 1000, 60)
    cols = {"t": t, "gap_u": t**-3.0, "gap_v": [None] * len(t), "grad_norm_v": t * 0,
            "energy": [None] * len(t), "dist_argmin": t * 0}
    path = tmp_path / "synthetic.csv"
    ex.write_csv(path, cols)
    text = ex.report_rates([path], 3.0, (10, 1000), threshold=-2.9)
    assert text == "synthetic:gap_u slope=-3.000 sup=1.000000e+00 pass\n"
    assert cli.main(["rates", str(path), "--window", "10:1000", "--threshold", "-2.9"]) == 0
    assert cli.main(["rates", str(path), "--threshold", "-3.5"]) == 1
    assert "fail" in capsys.readouterr().out


def test_svg_and_gnuplot_written(tmp_path):
    cfg = {"runs": [_small_run(), _small_run("vh", kind="TOGES_VH", beta=1.0)],
           "figures": [{"name": "cmp", "runs": ["v_f1", "vh"]}]}
    res = ex.run_experiment(cfg, tmp_path)
    svg = (tmp_path / "cmp.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") == 2
    assert "v_f1.csv" in (tmp_path / "cmp.gp").read_text()
    assert res.figures == [tmp_path / "cmp.svg"]


# -- presets ------------------------------------------------------------------------


def test_presets_list(capsys):
    assert cli.main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    assert "figure1" in out and "figure2" in out


def test_preset_show_is_valid_config(capsys):
    assert cli.main(["presets", "show", "figure1"]) == 0
    cfg = ex.parse_config(capsys.readouterr().out)
    assert len(cfg["runs"]) == 9
    for run in cfg["runs"]:
        assert run["dynamics"]["u0"] == [3, 1]
        assert run["dynamics"]["alpha"] == 3
        ex.validate_run(run)
    kinds = {r["dynamics"]["kind"] for r in cfg["runs"]}
    assert kinds == {"TOGES", "TOGES_V", "TOGES_VH"}


def test_figure1_f1_toges_v_slope(tmp_path):
    cfg = ex.preset("figure1")
    cfg["runs"] = [r for r in cfg["runs"] if r["name"] == "fig1_f1_TOGES_V"]
    cfg["figures"] = []
    res = ex.run_experiment(cfg, tmp_path)
    assert res.ok
    (col, est), = [(c, e) for c, e in ex.rates_from_csv(res.runs[0].csv_path, 3.0, (10, 1000))
                   if c == "gap_u"]
    assert est.slope <= -3.0


def test_figure2_preset_ordering(tmp_path):
    assert cli.main(["run", "preset:figure2", "--out", str(tmp_path)]) == 0
    gaps = {}
    for name in ("TOGES_V", "TOGES_VH", "SC3", "HEAVY_BALL"):
        d = ex.read_csv(tmp_path / f"fig2_{name}.csv")
        assert d["t"][-1] == 100.0
        gaps[name] = d["gap_u"][-1]
    assert gaps["SC3"] < gaps["TOGES_V"]
    assert gaps["SC3"] < gaps["TOGES_VH"]
    assert (tmp_path / "figure2.svg").exists()


def test_rate_check_matches_fit_rate(tmp_path):
    res = ex.run_experiment({"runs": [_small_run()]}, tmp_path)
    d = ex.read_csv(res.runs[0].csv_path)
    est = dg.fit_rate(dg.GapSeries(d["t"], d["gap_u"], dg.Selector.AT_U), (10, 100))
    assert est.slope == pytest.approx(dict(res.runs[0].rates)["gap_u"].slope, rel=1e-12)
