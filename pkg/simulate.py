#!/usr/bin/env python3
"""
Run pinching-antenna beamforming experiments and write CSV results.

Modes: dl-fp, dl-zf, ul-mmse, dl-baseline-mimo, dl-baseline-mmimo,
ul-baseline-mimo, ul-baseline-mmimo (dl/ul-baseline-hmimo are accepted and
recorded as unsupported). Several modes may be given comma-separated; they
share user layouts per seed and add a gains.csv against the baselines.

Parameters come from a preset (full | desk), then an optional key=value
config file, then the flags below. A local .env may set PASS_OUT_DIR,
PASS_JOBS and SENTRY_DSN.

Usage:
  venv/bin/python simulate.py --preset desk --mode dl-zf --seeds 3 --out results/
  venv/bin/python simulate.py --config presets/desk.conf --mode dl-fp,dl-baseline-mmimo \\
      --sweep power:-10,0,10 --jobs 4 --trace
"""

import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from errors import ConfigError
from harness import load_spec, run_experiment, write_results

load_dotenv()

# Optional Sentry error reporting: a no-op until BOTH the sentry_sdk package
# and SENTRY_DSN are present.
try:
    import sentry_sdk
    if os.getenv("SENTRY_DSN"):
        sentry_sdk.init(dsn=os.getenv("SENTRY_DSN"), traces_sample_rate=0.0)
except ImportError:
    pass


def build_parser():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", help="key=value parameter file")
    ap.add_argument("--preset", default="full", choices=("full", "desk"))
    ap.add_argument("--mode", help="mode name, or several comma-separated (default dl-fp)")
    seeds = ap.add_mutually_exclusive_group()
    seeds.add_argument("--seeds", type=int, help="run seeds 0..N-1")
    seeds.add_argument("--seed-list", help="comma-separated seeds")
    ap.add_argument("--sweep", help="AXIS:v1,v2,...  (power | D_x | N | K | grid_L)")
    ap.add_argument("--grid", type=int, help="grid resolution grid_L")
    ap.add_argument("--out", default=os.environ.get("PASS_OUT_DIR", "results"))
    ap.add_argument("--trace", action="store_true", default=None,
                    help="write per-iteration convergence traces")
    ap.add_argument("--jobs", type=int, default=int(os.environ.get("PASS_JOBS", "1")))
    ap.add_argument("--verbose", "-v", action="store_true")
    return ap


def _fmt(value):
    return "-" if value != value else f"{value:.4f}"


def cli_main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s - %(levelname)s - %(message)s")

    # validate every mode before anything is written
    modes = [m.strip() for m in (args.mode or "").split(",") if m.strip()] or [None]
    try:
        specs = [load_spec(args.config, preset=args.preset, mode=mode, seeds=args.seeds,
                           seed_list=args.seed_list, sweep=args.sweep, grid=args.grid,
                           trace=args.trace)
                 for mode in modes]
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    records = []
    for spec in specs:
        cfg = spec.scenario
        print(f"{spec.mode}: M={cfg.M} N={cfg.N} K={cfg.K} grid_L={cfg.grid_L} "
              f"seeds={len(spec.seeds)}")
        recs, rows = run_experiment(spec, args.out, jobs=args.jobs, write_tables=False)
        records.extend(recs)
        for row in rows:
            point = f"{row['sweep_axis']}={row['sweep_value']} " if row["sweep_axis"] else ""
            print(f"  {point}n={row['n_seeds']}  mean={_fmt(row['mean_bits'])} bit/s/Hz  "
                  f"std={_fmt(row['std_bits'])}")

    out = write_results(args.out, records)
    failed = [r for r in records if any(f.startswith("error:") for f in r.flags)]
    print("=" * 60)
    print(f"runs: {len(records)}  failed: {len(failed)}  written to {out}/")
    return 1 if failed else 0


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
