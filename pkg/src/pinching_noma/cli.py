"""Command-line entry point: ``pinching-noma run <spec.yaml>`` or ``pinching-noma preset <name>``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .sweep import SpecError, emit_csv, load_preset, load_spec, preset_names, report_dict, report_text, run_experiment

EXIT_OK, EXIT_TOLERANCE, EXIT_SPEC = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinching-noma", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trials", type=int, help="Monte Carlo trials per SNR point")
    common.add_argument("--seed", type=int, help="64-bit RNG seed")
    common.add_argument("--quadrature-n", type=int, help="Chebyshev-Gauss node count")
    common.add_argument("--out", default="results", help="directory for CSV series (default: results)")
    common.add_argument("--report", choices=("text", "json"), default="text")
    common.add_argument("--workers", type=int, default=1, help="Monte Carlo worker threads")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run an experiment file")
    run.add_argument("spec", help="YAML experiment file")
    preset = sub.add_parser("preset", parents=[common], help="run a bundled figure preset")
    preset.add_argument("name", help="one of: " + ", ".join(preset_names()))
    sub.add_parser("list", help="list bundled presets")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        print("\n".join(preset_names()))
        return EXIT_OK
    try:
        spec = load_spec(args.spec) if args.command == "run" else load_preset(args.name)
        spec = spec.with_overrides(args.trials, args.seed, args.quadrature_n)
        if spec.trials < 1 or spec.quadrature_n < 1:
            raise SpecError("trials" if spec.trials < 1 else "quadrature_n", "must be at least 1")
    except (SpecError, OSError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    result = run_experiment(spec, workers=args.workers)
    emit_csv(result.series, args.out, prefix=f"{spec.name}_")
    if args.report == "json":
        print(json.dumps(report_dict(result), indent=2, sort_keys=True))
    else:
        print(report_text(result))
    return EXIT_OK if result.ok else EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
