"""``liqgeom`` command line.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 bad input
data, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .errors import LiqgeomError
from .ingest import build_snapshots, read_depth_csv
from .pipeline import OUTPUT_DIR_ENV, compare_reports, run_fit, simulate, write_comparison

log = logging.getLogger("liqgeom")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _field_flags():
    """(flag, dotted key) for every config field; names shared by two
    sections get the section as a prefix."""
    cfg = RunConfig()
    seen = {}
    for section in ("simulation", "geometry", "fit", "io"):
        for f in dataclasses.fields(getattr(cfg, section)):
            seen.setdefault(f.name, []).append(section)
    out = []
    for section in ("simulation", "geometry", "fit", "io"):
        for f in dataclasses.fields(getattr(cfg, section)):
            name = f.name if len(seen[f.name]) == 1 else f"{section}_{f.name}"
            out.append(("--" + name.replace("_", "-"), f"{section}.{f.name}"))
    return out


FIELD_FLAGS = _field_flags()


def _add_common(p):
    p.add_argument("--config", type=Path, help="flat section.key = value file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key, e.g. simulation.seed=3")
    p.add_argument("--out", dest="out", help="output directory (alias of --output-dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    group = p.add_argument_group("config fields")
    for flag, key in FIELD_FLAGS:
        group.add_argument(flag, dest=key, default=None, metavar="V")


def build_parser():
    parser = _Parser(prog="liqgeom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"liqgeom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run the graph inflation study")
    _add_common(p)

    p = sub.add_parser("fit", help="fit profile models to snapshot or depth CSVs")
    _add_common(p)
    p.add_argument("inputs", nargs="*", help="snapshot or depth CSV files")

    p = sub.add_parser("compare", help="aggregate fit reports into medians")
    _add_common(p)
    p.add_argument("reports", nargs="+", help="fit_report.csv files")

    p = sub.add_parser("ingest-check", help="validate a depth CSV without fitting")
    p.add_argument("input")
    p.add_argument("--tick-size", type=float, default=0.01)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args, inputs=None):
    overrides = []
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        overrides.append(("io.output_dir", env_out))
    overrides.extend(args.set)
    for _, key in FIELD_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            overrides.append((key, value))
    if args.out:
        overrides.append(("io.output_dir", args.out))
    if inputs:
        overrides.append(("io.inputs", ",".join(str(i) for i in inputs)))
    return load_config(args.config, overrides)


def _ingest_check(args):
    n_rec = 0
    venues = set()

    def counted(records):
        nonlocal n_rec
        for r in records:
            n_rec += 1
            venues.add(r.venue)
            yield r

    one_sided = n_snap = 0
    for snap in build_snapshots(counted(read_depth_csv(args.input)), args.tick_size):
        n_snap += 1
        if not snap.bids or not snap.asks:
            one_sided += 1
    print(f"records={n_rec} venues={len(venues)} snapshots={n_snap} one_sided={one_sided}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "ingest-check":
            _ingest_check(args)
            return 0
        if args.command == "simulate":
            cfg = resolve_config(args)
            summary = simulate(cfg, cfg.io.output_dir)
            print(f"{summary.n_snapshots} snapshots written to {summary.out_dir}")
        elif args.command == "fit":
            cfg = resolve_config(args, args.inputs)
            results = run_fit(cfg, cfg.io.output_dir)
            print(f"{len(results)} window fits written to {cfg.io.output_dir}")
        elif args.command == "compare":
            cfg = resolve_config(args)
            rows = compare_reports(args.reports)
            write_comparison(cfg.io.output_dir, rows, cfg)
            for row in rows:
                print(",".join(str(v) for v in row))
    except LiqgeomError as exc:
        print(f"liqgeom: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"liqgeom: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
