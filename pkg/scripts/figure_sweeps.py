#!/usr/bin/env python3

"""
Run the standard comparison sweeps at desk scale (grid_L=4096, 20 seeds by
default) and write one result directory per figure:

  grid         downlink (FP, ZF) and the fixed arrays vs grid resolution
  grid-ul      uplink and the fixed arrays vs grid resolution
  power-dl     downlink vs transmit power, one subdirectory per grid level
  power-ul     uplink vs transmit power, one subdirectory per grid level
  dx           downlink vs side length D_x of the service region
  n            downlink vs pinching elements per waveguide
  k            uplink vs number of users
  convergence  per-iteration traces of dl-fp, dl-zf and ul-mmse at three powers

Usage:
  venv/bin/python scripts/figure_sweeps.py --out results/sweeps --jobs 4
  venv/bin/python scripts/figure_sweeps.py --only grid,k --seeds 5
"""

import sys
from pathlib import Path

SCRIPT_DIR = Path(__file__).parent
sys.path.insert(0, str(SCRIPT_DIR.parent))

from harness import ExperimentSpec, run_experiment, write_results  # noqa: E402
from scenario import DESK  # noqa: E402

DL_MODES = ("dl-fp", "dl-zf", "dl-baseline-mimo", "dl-baseline-mmimo")
UL_MODES = ("ul-mmse", "ul-baseline-mimo", "ul-baseline-mmimo")
GRID_VALUES = (256, 1024, 4096, 16384)
# reaches down to where FP pulls away from ZF
POWER_VALUES = (-30.0, -20.0, -10.0, 0.0, 10.0)

FIGURES = {
    "grid": {"modes": DL_MODES, "axis": "grid_L", "values": GRID_VALUES},
    "grid-ul": {"modes": UL_MODES, "axis": "grid_L", "values": GRID_VALUES},
    "power-dl": {"modes": DL_MODES, "axis": "power", "values": POWER_VALUES,
                 "grid_levels": (1024, 4096)},
    "power-ul": {"modes": UL_MODES, "axis": "power", "values": POWER_VALUES,
                 "grid_levels": (1024, 4096)},
    "dx": {"modes": DL_MODES, "axis": "D_x", "values": (10.0, 20.0, 30.0, 40.0, 50.0)},
    "n": {"modes": DL_MODES, "axis": "N", "values": (2, 4, 6, 8)},
    "k": {"modes": UL_MODES, "axis": "K", "values": (2, 3, 4, 5, 6)},
    "convergence": {"modes": ("dl-fp", "dl-zf", "ul-mmse"), "axis": "power",
                    "values": (-10.0, 0.0, 10.0), "trace": True},
}


def figure_runs(name, out_root):
    """(scenario, output directory) pairs for one figure."""
    figure = FIGURES[name]
    levels = figure.get("grid_levels")
    if not levels:
        return [(DESK, out_root / name)]
    return [(DESK.with_changes(grid_L=L), out_root / name / f"L{L}") for L in levels]


def run_figure(name, seeds, out_root, jobs):
    figure = FIGURES[name]
    trace = figure.get("trace", False)
    records = []
    for scenario, out_dir in figure_runs(name, out_root):
        if len(figure.get("grid_levels", ())) > 1:
            print(f"  grid_L={scenario.grid_L}")
        level = []
        for mode in figure["modes"]:
            spec = ExperimentSpec(scenario, mode, seeds, sweep_axis=figure["axis"],
                                  sweep_values=figure["values"], trace=trace)
            recs, rows = run_experiment(spec, out_dir if trace else None, jobs=jobs,
                                        write_tables=False)
            level.extend(recs)
            means = "  ".join(f"{row['sweep_value']}:{row['mean_bits']:.3f}" for row in rows)
            print(f"  {mode:<20} {means}")
        write_results(out_dir, level)
        records.extend(level)
    return records


def main():
    import argparse

    parser = argparse.ArgumentParser(description="Run the standard sweeps at desk scale.")
    parser.add_argument("--out", default="results/sweeps", help="Output root directory")
    parser.add_argument("--seeds", type=int, default=20, help="Seeds per sweep point")
    parser.add_argument("--jobs", type=int, default=1, help="Worker processes")
    parser.add_argument("--only", help=f"Comma-separated subset of: {', '.join(FIGURES)}")
    args = parser.parse_args()

    names = [n.strip() for n in args.only.split(",")] if args.only else list(FIGURES)
    unknown = [n for n in names if n not in FIGURES]
    if unknown:
        parser.error(f"unknown figure(s): {', '.join(unknown)}")

    out_root = Path(args.out)
    seeds = tuple(range(args.seeds))
    failed = 0
    for name in names:
        figure = FIGURES[name]
        print(f"{name}: {figure['axis']} over {len(figure['values'])} values, "
              f"{len(figure['modes'])} mode(s), {len(seeds)} seeds")
        records = run_figure(name, seeds, out_root, args.jobs)
        failed += sum(1 for r in records if any(f.startswith("error:") for f in r.flags))

    print(f"\nSummary:")
    print(f"  Figures: {len(names)}")
    print(f"  Failed runs: {failed}")
    print(f"  Written to: {out_root}/")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
