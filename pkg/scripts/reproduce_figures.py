"""Run every bundled figure preset, write CSV series to results/ and print agreement and slope reports.

    python scripts/reproduce_figures.py [--trials N] [--workers W] [--out DIR] [preset ...]
"""
import argparse
import os
import sys
import time

from pinching_noma.sweep import (
    InsufficientPointsError,
    emit_csv,
    load_preset,
    preset_names,
    report_text,
    run_experiment,
    slope_report,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("presets", nargs="*", help="subset of presets (default: all)")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--out", default="results")
    args = parser.parse_args(argv)

    status = 0
    for name in args.presets or preset_names():
        spec = load_preset(name).with_overrides(trials=args.trials)
        start = time.perf_counter()
        result = run_experiment(spec, workers=args.workers)
        emit_csv(result.series, args.out, prefix=f"{name}_")
        print(report_text(result))
        rate_series = [s for s in result.series if s.metric in ("er", "er_lower", "er_upper")]
        try:
            for stem, slope in slope_report(rate_series).items():
                print(f"  slope {stem:40s} {slope:+.4f} per log2(rho)")
        except InsufficientPointsError as exc:
            print(f"  slopes skipped: {exc}")
        print(f"  {time.perf_counter() - start:.1f} s\n")
        status = max(status, 0 if result.ok else 1)
    return status


if __name__ == "__main__":
    sys.exit(main())
