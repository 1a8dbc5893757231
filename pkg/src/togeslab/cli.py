"""Command-line entry point: ``togeslab run|rates|presets``.

Exit codes: 0 all checks passed, 1 invariant violation, 2 config parse
error, 3 capability mismatch.
"""

import argparse
import json
import sys
from pathlib import Path

from . import experiment as ex
from .errors import ConfigurationError, UnsupportedCapabilityError

EXIT_OK, EXIT_VIOLATION, EXIT_PARSE, EXIT_CAPABILITY = 0, 1, 2, 3


def _window(text):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like lo:hi, got {text!r}")
    return lo, hi


def build_parser():
    p = argparse.ArgumentParser(prog="togeslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config (or preset:NAME)")
    run.add_argument("config")
    run.add_argument("--out", help=f"output directory (default: ${ex.OUT_ENV} or config)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--tol-scale", type=float, default=1.0)

    rates = sub.add_parser("rates", help="fit log-log slopes on emitted CSVs")
    rates.add_argument("csv", nargs="+")
    rates.add_argument("--power", type=float, default=3.0)
    rates.add_argument("--window", type=_window, default=(10.0, 1000.0))
    rates.add_argument("--threshold", type=float, default=None)

    presets = sub.add_parser("presets", help="list or dump shipped presets")
    presets.add_argument("action", choices=["list", "show"])
    presets.add_argument("name", nargs="?")
    return p


def _load(spec):
    if spec.startswith("preset:"):
        return ex.preset(spec.split(":", 1)[1])
    return ex.load_config(spec)


def cmd_run(args, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        cfg = _load(args.config)
    except ex.ConfigParseError as exc:
        where = f" at line {exc.line} column {exc.column}" if exc.line else ""
        print(f"parse error{where}: {exc}", file=err)
        return EXIT_PARSE
    except (OSError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_PARSE
    try:
        result = ex.run_experiment(cfg, args.out, args.workers, args.tol_scale)
    except UnsupportedCapabilityError as exc:
        print(f"capability mismatch: {exc}", file=err)
        return EXIT_CAPABILITY
    for r in result.runs:
        print(f"{r.name}: wrote {r.csv_path}", file=out)
    for f in result.figures:
        print(f"figure: {f}", file=out)
    if result.failures:
        for f in result.failures:
            print(f"VIOLATION {f}", file=err)
        return EXIT_VIOLATION
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "rates":
        try:
            text = ex.report_rates(args.csv, args.power, args.window, args.threshold)
        except (OSError, ConfigurationError) as exc:
            print(f"rates: {exc}", file=sys.stderr)
            return EXIT_PARSE
        sys.stdout.write(text)
        failed = any(line.endswith((" fail", "insufficient-data")) for line in text.splitlines())
        return EXIT_VIOLATION if failed else EXIT_OK
    if args.action == "list":
        for name, (desc, _) in sorted(ex.PRESETS.items()):
            print(f"{name}\t{desc}")
        return EXIT_OK
    if not args.name:
        print("presets show needs a name", file=sys.stderr)
        return EXIT_PARSE
    try:
        print(json.dumps(ex.preset(args.name), indent=2))
    except ConfigurationError as exc:
        print(exc, file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
