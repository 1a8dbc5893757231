"""
Batch experiments from a config
===============================

The runner reads a JSON config, writes one CSV per run, a rate summary and
an SVG figure. The same config works from the shell with
``togeslab run config.json --out DIR``.
"""

import json
import tempfile
from pathlib import Path

from togeslab import experiment as ex

config = {
    "seed": 0,
    "runs": [
        {
            "name": f"{kind.lower()}_f2",
            "problem": "f2",
            "dynamics": dict(kind=kind, alpha=3, u0=[3, 1], **({"beta": 1.0} if kind == "TOGES_VH" else {})),
            "integrator": {"t_end": 1000, "samples": 200},
            "diagnostics": {
                "rate_windows": [[10, 1000]],
                "checks": [{"type": "rate", "window": [10, 1000], "max_slope": -2.85}],
            },
        }
        for kind in ("TOGES_V", "TOGES_VH")
    ],
    "figures": [{"name": "f2_compare", "runs": ["toges_v_f2", "toges_vh_f2"]}],
}

out = Path(tempfile.mkdtemp(prefix="togeslab_demo_"))
(out / "config.json").write_text(json.dumps(config, indent=2))

result = ex.run_experiment(ex.load_config(out / "config.json"), out)
print("checks passed:", result.ok)
print(ex.report_rates([r.csv_path for r in result.runs], power=3.0, window=(10, 1000)))
print("artifacts in", out)
for p in sorted(out.iterdir()):
    print("  ", p.name)
