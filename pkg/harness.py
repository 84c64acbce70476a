"""
Monte-Carlo experiment runner.

An ExperimentSpec names a scenario, one algorithm mode, a list of seeds and an
optional sweep axis. For every (sweep value, seed) the runner

  - draws the user layout and the random initial element layout from one
    PCG64 stream seeded with the seed (users first, then L column by column),
    so every mode sees the same layout for a given seed
  - dispatches the mode (dl-fp runs dl-zf first and starts from its output)
  - stores a RunRecord; a failing run is recorded with an error flag and
    sum-rate 0 and the batch carries on

Outputs (when an output directory is given):
  runs.csv       one row per run
  aggregate.csv  per sweep value: successful seeds, mean and std in bit/s/Hz
  traces/        per-run convergence traces (spec.trace)

Config files are flat key=value text (read with python-dotenv, no variable
interpolation). Keys are ScenarioConfig field names plus the experiment keys
mode, seeds, seed_list, sweep and trace. Unknown keys are errors.

Sweep axes: power (dBm; P_dl for downlink modes, P_ul for uplink modes),
D_x, N, K, grid_L.
"""

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from dotenv import dotenv_values

from baselines import MODES as BASELINE_MODES
from baselines import antenna_count, run_baseline_dl, run_baseline_ul
from channel import PiTable, UserLayout, channel_matrix, random_feasible_locations
from errors import ConfigError, PassError
from fpbcd import LN2, run_fp_bcd, warm_start_precoder
from scenario import FIELD_NAMES, PRESET_SEEDS, PRESETS, scenario_from_mapping
from uplink import run_greedy_uplink
from zf import run_zf, zf_sum_rate

log = logging.getLogger(__name__)

PASS_MODES = ("dl-fp", "dl-zf", "ul-mmse")
UNSUPPORTED_MODES = ("dl-baseline-hmimo", "ul-baseline-hmimo")
MODES = PASS_MODES + tuple(BASELINE_MODES) + UNSUPPORTED_MODES

SWEEP_AXES = ("power", "D_x", "N", "K", "grid_L")
_INT_AXES = {"N", "K", "grid_L"}

EXPERIMENT_KEYS = ("mode", "seeds", "seed_list", "sweep", "trace")

RUN_COLUMNS = ("mode", "sweep_axis", "sweep_value", "seed", "sum_rate_bits",
               "sum_rate_nats", "iters", "wall_ms", "warm_start_bits", "flags")
AGGREGATE_COLUMNS = ("mode", "sweep_axis", "sweep_value", "n_seeds", "mean_bits", "std_bits")
GAIN_COLUMNS = ("mode", "baseline", "sweep_axis", "sweep_value", "n_pairs", "mean_gain_pct")

UNSUPPORTED = "unsupported_algorithm"
NO_ZF_WARM_START = "zf_warm_start_unavailable"


def direction(mode):
    return "ul" if mode.startswith("ul-") else "dl"


# --- sampling ---

def _rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFF_FFFF_FFFF_FFFF))


def _draw_users(config, rng):
    xy = rng.random((config.K, 2)) * np.array([config.D_x, config.D_y])
    return UserLayout(np.column_stack([xy, np.zeros(config.K)]))


def sample_users(config, seed):
    """K users i.i.d. uniform on [0, D_x] x [0, D_y] x {0}."""
    return _draw_users(config, _rng(seed))


def initial_locations(config, rng):
    return np.column_stack([random_feasible_locations(config, m, rng) for m in range(config.M)])


def sample_layout(config, seed):
    """(users, initial L) from one stream; users match sample_users(config, seed)."""
    rng = _rng(seed)
    users = _draw_users(config, rng)
    return users, initial_locations(config, rng)


# --- experiment description ---

@dataclass(frozen=True)
class ExperimentSpec:
    scenario: object
    mode: str
    seeds: tuple
    sweep_axis: str | None = None
    sweep_values: tuple = ()
    trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r} (choose from {', '.join(MODES)})")
        if not self.seeds:
            raise ConfigError("seed list is empty")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {self.sweep_axis!r} "
                                  f"(choose from {', '.join(SWEEP_AXES)})")
            if not self.sweep_values:
                raise ConfigError(f"sweep {self.sweep_axis} has no values")
        # every point must be a valid scenario
        self.points()

    def points(self):
        """[(sweep value or None, ScenarioConfig)]"""
        if self.sweep_axis is None:
            return [(None, self.scenario)]
        return [(v, scenario_at(self.scenario, self.mode, self.sweep_axis, v))
                for v in self.sweep_values]


def scenario_at(scenario, mode, axis, value):
    if axis == "power":
        key = "P_ul_dbm" if direction(mode) == "ul" else "P_dl_dbm"
        return scenario.with_changes(**{key: float(value)})
    if axis in _INT_AXES:
        return scenario.with_changes(**{axis: int(value)})
    return scenario.with_changes(**{axis: float(value)})


def parse_sweep(text):
    """'power:-10,0,10' -> ('power', (-10.0, 0.0, 10.0))"""
    axis, sep, values = str(text).partition(":")
    axis = axis.strip()
    if not sep or not values.strip():
        raise ConfigError(f"sweep must look like AXIS:v1,v2,... got {text!r}")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r} (choose from {', '.join(SWEEP_AXES)})")
    try:
        cast = (lambda s: int(float(s))) if axis in _INT_AXES else float
        return axis, tuple(cast(v) for v in values.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad sweep values in {text!r}") from None


def parse_seed_list(text):
    try:
        return tuple(int(s) for s in str(text).split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None


def read_config_file(path):
    """key=value file -> (scenario mapping, experiment mapping)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path, interpolate=False)
    missing = sorted(k for k, v in values.items() if v is None)
    if missing:
        raise ConfigError(f"{path}: keys without a value: {', '.join(missing)}")
    unknown = sorted(set(values) - set(FIELD_NAMES) - set(EXPERIMENT_KEYS))
    if unknown:
        raise ConfigError(f"{path}: unknown keys: {', '.join(unknown)}")
    scenario = {k: v for k, v in values.items() if k in FIELD_NAMES}
    experiment = {k: v for k, v in values.items() if k in EXPERIMENT_KEYS}
    return scenario, experiment


def load_spec(config_path=None, preset="full", mode=None, seeds=None, seed_list=None,
              sweep=None, grid=None, trace=None):
    """Preset, then config file, then explicit arguments (CLI flags)."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r} (choose from {', '.join(PRESETS)})")
    scenario_keys, experiment = ({}, {}) if config_path is None else read_config_file(config_path)
    if grid is not None:
        scenario_keys["grid_L"] = str(grid)
    scenario = scenario_from_mapping(scenario_keys, base=PRESETS[preset])

    mode = mode or experiment.get("mode") or "dl-fp"
    if seed_list is None and seeds is None:
        if "seed_list" in experiment:
            seed_list = experiment["seed_list"]
        elif "seeds" in experiment:
            seeds = experiment["seeds"]
    if seed_list is not None:
        seed_values = parse_seed_list(seed_list) if isinstance(seed_list, str) else tuple(seed_list)
    else:
        try:
            count = int(seeds) if seeds is not None else PRESET_SEEDS[preset]
        except ValueError:
            raise ConfigError(f"bad seed count {seeds!r}") from None
        seed_values = tuple(range(count))

    sweep = sweep if sweep is not None else experiment.get("sweep")
    axis, values = parse_sweep(sweep) if sweep else (None, ())
    if trace is None:
        trace = str(experiment.get("trace", "")).strip().lower() in ("1", "true", "yes")
    return ExperimentSpec(scenario=scenario, mode=mode, seeds=seed_values,
                          sweep_axis=axis, sweep_values=values, trace=bool(trace))


# --- runs ---

@dataclass
class RunRecord:
    mode: str
    sweep_axis: str | None
    sweep_value: object
    seed: int
    sum_rate_nats: float = 0.0
    iters: int = 0
    wall_ms: float = 0.0
    warm_start_bits: float | None = None
    flags: list = field(default_factory=list)

    @property
    def sum_rate_bits(self):
        return self.sum_rate_nats / LN2

    @property
    def ok(self):
        return not any(f == UNSUPPORTED or f.startswith("error:") for f in self.flags)

    def as_row(self):
        return {
            "mode": self.mode,
            "sweep_axis": self.sweep_axis or "",
            "sweep_value": "" if self.sweep_value is None else self.sweep_value,
            "seed": self.seed,
            "sum_rate_bits": repr(self.sum_rate_bits),
            "sum_rate_nats": repr(self.sum_rate_nats),
            "iters": self.iters,
            "wall_ms": f"{self.wall_ms:.3f}",
            "warm_start_bits": "" if self.warm_start_bits is None else repr(self.warm_start_bits),
            "flags": ";".join(self.flags),
        }


def trace_name(mode, seed, axis=None, value=None):
    if axis is None:
        return f"{mode}_{seed}.csv"
    return f"{mode}_{axis}{value}_{seed}.csv"


def _run_dl_fp(config, users, L0, record):
    table = PiTable(config, users)
    if config.M > config.K:
        W0, L_start, _ = run_zf(config, users, L0, table)
    else:
        log.warning("dl-fp: M=%d <= K=%d, starting FP from a matched filter", config.M, config.K)
        record.flags.append(NO_ZF_WARM_START)
        W0, L_start = warm_start_precoder(channel_matrix(config, users, L0), config.P_dl), L0
    _, _, trace = run_fp_bcd(config, users, W0, L_start, table)
    rates = trace.column("objective_nats")
    # row 0 is the warm start, the returned iterate is the best row
    record.warm_start_bits = float(rates[0] / LN2)
    record.sum_rate_nats = float(rates.max())
    return trace


def _run_dl_zf(config, users, L0, record):
    _, L, trace = run_zf(config, users, L0)
    record.sum_rate_nats = zf_sum_rate(channel_matrix(config, users, L), config.P_dl,
                                       config.sigma2_dl, config.weights_dl_vec)
    return trace


def _run_ul_mmse(config, users, L0, record):
    _, _, trace = run_greedy_uplink(config, users, L0)
    record.sum_rate_nats = float(trace.column("sum_rate_nats").max())
    return trace


def _run_baseline(config, users, mode, record):
    link, kind = BASELINE_MODES[mode]
    A = antenna_count(config, kind)
    if link == "dl":
        _, rate, trace = run_baseline_dl(config, users, A)
        record.sum_rate_nats = rate
        return trace
    _, record.sum_rate_nats = run_baseline_ul(config, users, A)
    return None


def _report(exc):
    try:
        import sentry_sdk
    except ImportError:
        return
    sentry_sdk.capture_exception(exc)


def run_one(task):
    """Worker: one (scenario, mode, seed) run -> RunRecord. Never raises PassError."""
    config, mode, seed, axis, value, trace_dir = task
    record = RunRecord(mode=mode, sweep_axis=axis, sweep_value=value, seed=seed)
    if mode in UNSUPPORTED_MODES:
        record.flags.append(UNSUPPORTED)
        return record
    t0 = time.perf_counter()
    trace = None
    try:
        users, L0 = sample_layout(config, seed)
        if mode == "dl-fp":
            trace = _run_dl_fp(config, users, L0, record)
        elif mode == "dl-zf":
            trace = _run_dl_zf(config, users, L0, record)
        elif mode == "ul-mmse":
            trace = _run_ul_mmse(config, users, L0, record)
        else:
            trace = _run_baseline(config, users, mode, record)
    except PassError as e:
        log.warning("%s seed %s failed: %s", mode, seed, e)
        _report(e)
        record.flags.append(f"error:{type(e).__name__}")
        record.sum_rate_nats = 0.0
        trace = getattr(e, "trace", None)
    record.wall_ms = (time.perf_counter() - t0) * 1000.0
    if trace is not None:
        record.iters = trace.iterations
        record.flags.extend(f for f in trace.flags if f not in record.flags)
        if trace_dir is not None:
            trace.to_csv(Path(trace_dir) / trace_name(mode, seed, axis, value))
    return record


def run_experiment(spec, out_dir=None, jobs=1, write_tables=True):
    """Run every (sweep value, seed). Returns (records, aggregate rows); writes
    traces/ (spec.trace) and, unless write_tables is off, runs.csv and
    aggregate.csv under out_dir when given."""
    out_dir = Path(out_dir) if out_dir is not None else None
    trace_dir = str(out_dir / "traces") if (out_dir is not None and spec.trace) else None
    tasks = [(config, spec.mode, seed, spec.sweep_axis, value, trace_dir)
             for value, config in spec.points() for seed in spec.seeds]
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_one, tasks))
    else:
        records = [run_one(task) for task in tasks]
    rows = aggregate(records)
    if out_dir is not None and write_tables:
        write_results(out_dir, records)
    return records, rows


def write_results(out_dir, records):
    """runs.csv, aggregate.csv and, when PASS and baseline runs are both
    present, gains.csv."""
    out_dir = Path(out_dir)
    write_csv(out_dir / "runs.csv", RUN_COLUMNS, [r.as_row() for r in records])
    write_csv(out_dir / "aggregate.csv", AGGREGATE_COLUMNS, aggregate(records))
    gains = gain_table(records)
    if gains:
        write_csv(out_dir / "gains.csv", GAIN_COLUMNS, gains)
    return out_dir


def aggregate(records):
    """One row per (mode, sweep value) over the successful records."""
    groups = {}
    for r in records:
        groups.setdefault((r.mode, r.sweep_axis, r.sweep_value), []).append(r)
    rows = []
    for (mode, axis, value), group in groups.items():
        bits = np.array([r.sum_rate_bits for r in group if r.ok])
        rows.append({
            "mode": mode,
            "sweep_axis": axis or "",
            "sweep_value": "" if value is None else value,
            "n_seeds": int(bits.size),
            "mean_bits": float(bits.mean()) if bits.size else math.nan,
            "std_bits": float(bits.std(ddof=1)) if bits.size > 1 else 0.0,
        })
    return rows


def gain_table(records):
    """Paired gain of each PASS mode over each baseline of the same link
    direction: 100 * (sum PASS / sum baseline - 1) over seeds where both ran."""
    by_key = {}
    for r in records:
        if r.ok:
            by_key[(r.mode, r.sweep_axis, r.sweep_value, r.seed)] = r.sum_rate_bits
    modes = list(dict.fromkeys(r.mode for r in records))
    points = list(dict.fromkeys((r.sweep_axis, r.sweep_value) for r in records))
    rows = []
    for mode in (m for m in modes if m in PASS_MODES):
        for base in (b for b in modes if b in BASELINE_MODES and direction(b) == direction(mode)):
            for axis, value in points:
                pairs = [(by_key[(mode, axis, value, s)], by_key[(base, axis, value, s)])
                         for (m, a, v, s) in by_key
                         if m == mode and a == axis and v == value
                         and (base, axis, value, s) in by_key]
                if not pairs:
                    continue
                ours, theirs = np.array(pairs).T
                gain = 100.0 * (ours.sum() / theirs.sum() - 1.0) if theirs.sum() > 0 else math.inf
                rows.append({"mode": mode, "baseline": base, "sweep_axis": axis or "",
                             "sweep_value": "" if value is None else value,
                             "n_pairs": len(pairs), "mean_gain_pct": gain})
    return rows


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})
    return path
