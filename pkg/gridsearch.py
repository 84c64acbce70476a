"""
Single-element location search and convergence bookkeeping.

All three location optimizers (FP-BCD downlink, ZF downlink, greedy uplink)
share one move: fix every element except (m, n), evaluate a scalar objective
of ell_m,n over the grid {0, L_m/(grid_L-1), ..., L_m}, drop grid points
within delta_ell of another element on the same waveguide, and take the
argmax (first maximum, i.e. the smallest ell on ties). If every grid point is
excluded the element stays put and a warning is logged.

gauss_seidel_update wraps that with one more rule: a current location that
scores strictly higher than the best feasible grid point (possible when the
layout started off-grid) is kept. That makes every single-element move
non-decreasing, which is what the convergence traces rely on.

ConvergenceTrace holds the per-iteration values each algorithm reports and
writes them to CSV.
"""

import csv
import logging
import time
from pathlib import Path

import numpy as np

from channel import GAP_RTOL, location_grid

log = logging.getLogger(__name__)

EMPTY_GRID = "empty_grid"
# loop stopped on max_iter before the epsilon test passed
MAX_ITER_REACHED = "max_iter_reached"


def feasible_grid_mask(config, grid, others):
    """True where a grid point keeps >= delta_ell from every position in `others`."""
    others = np.asarray(others, dtype=float).ravel()
    if others.size == 0:
        return np.ones(grid.shape, dtype=bool)
    gaps = np.abs(grid[:, None] - others[None, :])
    return np.all(gaps >= config.spacing * (1.0 - GAP_RTOL), axis=1)


def _argmax_feasible(values, mask):
    # argmax returns the first maximum: ties go to the smallest ell
    return int(np.argmax(np.where(mask, values, -np.inf)))


def grid_search_location(config, m, n, L, objective, grid=None, flags=None):
    """Best feasible grid position for element n of waveguide m.

    `objective` maps an array of candidate positions to an array of scores.
    Returns the current ell_m,n (and appends EMPTY_GRID to `flags`) when no
    grid point is feasible.
    """
    grid = location_grid(config) if grid is None else grid
    L = np.asarray(L, dtype=float)
    mask = feasible_grid_mask(config, grid, np.delete(L[:, m], n))
    if not mask.any():
        log.warning("waveguide %d element %d: no feasible grid point, keeping %.6g",
                    m, n, L[n, m])
        if flags is not None:
            flags.append(EMPTY_GRID)
        return float(L[n, m])
    values = np.asarray(objective(grid), dtype=float)
    idx = _argmax_feasible(values, mask)
    return float(grid[idx])


def gauss_seidel_update(config, m, n, L, objective, grid, flags=None):
    """One monotone single-element move: grid argmax unless the current
    position already scores strictly higher. Returns the new position."""
    current = float(L[n, m])
    chosen = grid_search_location(config, m, n, L, objective, grid=grid, flags=flags)
    if chosen == current:
        return current
    best, stay = np.asarray(objective(np.array([chosen, current])), dtype=float)
    return current if stay > best else chosen


class ConvergenceTrace:
    """Per-iteration values of one run. Row 0 is the initial point."""

    def __init__(self, columns):
        self.columns = ("iter",) + tuple(columns) + ("wall_ms",)
        self.rows = []
        self.flags = []
        self._t0 = time.perf_counter()

    def record(self, **values):
        row = {"iter": len(self.rows)}
        row.update(values)
        row["wall_ms"] = (time.perf_counter() - self._t0) * 1000.0
        self.rows.append(row)
        return row

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)

    @property
    def iterations(self):
        return max(len(self.rows) - 1, 0)

    @property
    def wall_ms(self):
        return self.rows[-1]["wall_ms"] if self.rows else 0.0

    def is_monotone(self, name, increasing=True, slack=1e-9):
        v = self.column(name)
        if v.size < 2:
            return True
        step = np.diff(v) if increasing else -np.diff(v)
        return bool(np.all(step >= -slack * np.maximum(np.abs(v[:-1]), 1e-300)))

    def to_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: row.get(k, "") for k in self.columns})
        return path


def fractional_change(new, old):
    """(new - old) / |old|, +inf when old is 0 and new moved up"""
    if old == 0:
        return np.inf if new > 0 else 0.0
    return (new - old) / abs(old)
