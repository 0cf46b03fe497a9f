"""Command-line entry point: ``recsim simulate | figures | validate``."""

from __future__ import annotations

import argparse
import logging
import sys

from recsim.config import load_config
from recsim.errors import ConfigError


def _simulate(args):
    from recsim.figures import emit_figures
    from recsim.runner import run_sweep

    spec = load_config(args.config)
    manifest = run_sweep(
        spec,
        out_dir=args.out,
        workers=args.workers,
        dump_teacher=args.dump_teacher,
        dump_student=args.dump_student,
        both_correlations=args.both_correlations,
    )
    if args.figures:
        emit_figures(manifest)
    print(manifest.path)
    for w in manifest.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 1 if manifest.failures else 0


def _figures(args):
    from recsim.figures import emit_figures

    for path in emit_figures(args.manifest):
        print(path)
    return 0


def _validate(args):
    spec = load_config(args.config)
    cells = spec.cells()
    print(f"ok: {len(cells)} cell(s)")
    for cid, cfg in cells:
        print(f"  {cid}: n={cfg.n} m={cfg.m} realizations={cfg.realizations}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a sweep")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    sim.add_argument("--workers", type=int, default=None, help="worker processes; RECSIM_WORKERS overrides")
    sim.add_argument("--dump-teacher", action="store_true")
    sim.add_argument("--dump-student", action="store_true")
    sim.add_argument("--both-correlations", action="store_true")
    sim.add_argument("--figures", action="store_true", help="also emit SVG figures")
    sim.set_defaults(func=_simulate)

    fig = sub.add_parser("figures", help="draw SVG figures for a finished run")
    fig.add_argument("--manifest", required=True)
    fig.set_defaults(func=_figures)

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        field = f" [{exc.field}]" if exc.field else ""
        print(f"config error{field}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
