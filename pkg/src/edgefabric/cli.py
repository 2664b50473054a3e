"""Command line entry point: validate, run, plot, and sweep scenarios.

Exit codes: 0 ok, 2 unreadable/unparseable input, 3 schema violations,
4 runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import plotting
from .metrics import TooFewSamples
from .scenario import (
    ScenarioInvalid,
    ScenarioParseError,
    build_scenario,
    load_data,
    validate_data,
)
from .simulator import Simulator
from .sweep import UnknownParameter, aggregate, run_sweep, write_sweep_outputs

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SCHEMA = 3
EXIT_RUNTIME = 4


def _default_seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("EDGEFABRIC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            print("EDGEFABRIC_SEED must be an integer, got %r" % env, file=sys.stderr)
            raise SystemExit(EXIT_PARSE) from None
    return None


def _load(path: str) -> dict:
    try:
        return load_data(path)
    except ScenarioParseError as e:
        print("parse error: %s" % e, file=sys.stderr)
        raise SystemExit(EXIT_PARSE) from None


def cmd_validate(args) -> int:
    data = _load(args.scenario)
    errors = validate_data(data)
    if errors:
        for e in errors:
            print(e, file=sys.stderr)
        return EXIT_SCHEMA
    print("%s: ok" % args.scenario)
    return EXIT_OK


def cmd_run(args) -> int:
    data = _load(args.scenario)
    name = Path(args.scenario).stem
    try:
        sc = build_scenario(data, name)
    except ScenarioInvalid as e:
        for err in e.errors:
            print(err, file=sys.stderr)
        return EXIT_SCHEMA
    seed = _default_seed(args)
    metrics = Simulator(sc, seed).run()
    outdir = Path(args.out) if args.out else Path("runs") / name
    metrics.write_csv(outdir)
    print("%s seed=%d -> %s" % (name, sc.seed if seed is None else seed, outdir))
    print(metrics.format_summary())
    return EXIT_OK


def cmd_plot(args) -> int:
    outdir = Path(args.out) if args.out else Path(args.csv_dir)
    try:
        if args.figure == "fig4":
            out = plotting.plot_fig4(Path(args.csv_dir), outdir)
        elif args.figure == "fig6":
            out = plotting.plot_fig6(Path(args.csv_dir), outdir)
        else:
            out = plotting.plot_latency(Path(args.csv_dir), outdir)
    except (plotting.MissingColumn, TooFewSamples, OSError) as e:
        print("plot failed: %s" % e, file=sys.stderr)
        return EXIT_RUNTIME
    print(out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = _load(args.scenario)
    name = Path(args.scenario).stem
    errors = validate_data(data)
    if errors:
        for e in errors:
            print(e, file=sys.stderr)
        return EXIT_SCHEMA
    seed = _default_seed(args)
    sc = build_scenario(data, name)
    base_seed = sc.seed if seed is None else seed
    if args.param is not None:
        if args.values is None:
            print("--values required with --param", file=sys.stderr)
            return EXIT_PARSE
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            print("--values must be a comma-separated number list", file=sys.stderr)
            return EXIT_PARSE
        param, seeds, compare = args.param, args.seeds, args.compare_transports
    elif sc.sweep is not None:
        param = sc.sweep.param
        values = sc.sweep.values
        seeds = args.seeds if args.seeds != 1 else sc.sweep.seeds
        compare = args.compare_transports or sc.sweep.compare_transports
    else:
        print("scenario has no run.sweep section; pass --param/--values", file=sys.stderr)
        return EXIT_PARSE
    try:
        rows = run_sweep(data, name, param, values, seeds, base_seed, compare)
    except UnknownParameter as e:
        print(e, file=sys.stderr)
        return EXIT_RUNTIME
    aggs = aggregate(rows)
    outdir = Path(args.out) if args.out else Path("runs") / ("%s_sweep" % name)
    write_sweep_outputs(outdir, rows, aggs)
    print("%s sweep over %s -> %s" % (name, param, outdir))
    for a in aggs:
        print(
            "  %s=%g %s: throughput %.1f B/s (sem %s) delivery %s join %s"
            % (
                a["param"],
                a["value"],
                a["transport"],
                a["mean_throughput_Bps"],
                "n/a" if a["sem_throughput_Bps"] is None else "%.1f" % a["sem_throughput_Bps"],
                "n/a" if a["delivery_rate"] is None else "%.3f" % a["delivery_rate"],
                "n/a" if a["join_success_rate"] is None else "%.2f" % a["join_success_rate"],
            )
        )
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="edgefabric",
        description="Mesh-routed remote-memory fabric simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file against the schema")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run one scenario and write metrics CSVs")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render SVG figures from run/sweep CSVs")
    p.add_argument("csv_dir")
    p.add_argument("--figure", choices=["fig4", "fig6", "latency"], required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("sweep", help="run a parameter sweep (explicit or embedded)")
    p.add_argument("scenario")
    p.add_argument("--param", default=None, help="dotted numeric field, e.g. workload.speed_mps")
    p.add_argument("--values", default=None, help="comma-separated numbers")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.add_argument("--compare-transports", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioInvalid as e:
        for err in e.errors:
            print(err, file=sys.stderr)
        return EXIT_SCHEMA
    except ScenarioParseError as e:
        print("parse error: %s" % e, file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
