"""Feasible grid, argmax tie-breaking, the monotone single-element move and traces."""
import csv
import logging

import numpy as np

from channel import location_grid, pi_coeff
from conftest import users_at
from gridsearch import (
    EMPTY_GRID,
    ConvergenceTrace,
    feasible_grid_mask,
    gauss_seidel_update,
    grid_search_location,
)
from scenario import ScenarioConfig


def _two_element(**kw):
    return ScenarioConfig(M=1, N=2, K=1, D_x=2.0, D_y=1.0, delta_ell=0.5, grid_L=9, **kw)


def test_grid_excludes_points_near_other_element():
    cfg = _two_element()
    grid = location_grid(cfg)                                  # step 0.25 on [0, 2]
    mask = feasible_grid_mask(cfg, grid, [1.0])
    assert list(grid[mask]) == [0.0, 0.25, 0.5, 1.5, 1.75, 2.0]


def test_constant_objective_picks_smallest_position():
    cfg = _two_element()
    L = np.array([[1.0], [2.0]])
    assert grid_search_location(cfg, 0, 1, L, lambda ell: np.ones_like(ell)) == 0.0


def test_argmax_skips_infeasible_maximum():
    cfg = _two_element()
    L = np.array([[1.0], [0.0]])
    # the unconstrained peak sits on the other element
    value = grid_search_location(cfg, 0, 1, L, lambda ell: -np.abs(ell - 1.0))
    assert value == 0.5


def test_empty_feasible_set_keeps_position(caplog):
    cfg = ScenarioConfig(M=1, N=2, K=1, D_x=1.0, D_y=1.0, delta_ell=0.6, grid_L=5)
    L = np.array([[0.5], [0.0]])
    flags = []
    with caplog.at_level(logging.WARNING):
        assert grid_search_location(cfg, 0, 1, L, lambda ell: ell, flags=flags) == 0.0
    assert flags == [EMPTY_GRID]
    assert "no feasible grid point" in caplog.text


def test_nearest_grid_point_maximizes_channel_magnitude(rng):
    cfg = ScenarioConfig(M=1, N=1, K=1, D_x=10.0, D_y=2.0, grid_L=257)
    grid = location_grid(cfg)
    for _ in range(20):
        x = rng.uniform(0, 10.0)
        users = users_at((x, rng.uniform(0, 2.0)))
        best = grid_search_location(cfg, 0, 0, np.zeros((1, 1)),
                                    lambda ell: np.abs(pi_coeff(cfg, users, 0, 0, ell)))
        assert best == grid[np.argmin(np.abs(grid - x))]


def test_gauss_seidel_keeps_better_off_grid_position():
    cfg = ScenarioConfig(M=1, N=1, K=1, D_x=1.0, D_y=1.0, grid_L=3)
    L = np.array([[0.3]])
    # peak at 0.3, between the grid points 0, 0.5, 1
    assert gauss_seidel_update(cfg, 0, 0, L, lambda ell: -(ell - 0.3) ** 2, location_grid(cfg)) == 0.3
    # a grid point that beats the current one is taken
    assert gauss_seidel_update(cfg, 0, 0, L, lambda ell: ell, location_grid(cfg)) == 1.0


def test_trace_monotone_and_csv(tmp_path):
    trace = ConvergenceTrace(("objective_nats",))
    for v in (1.0, 2.0, 2.0, 2.5):
        trace.record(objective_nats=v)
    assert trace.iterations == 3
    assert trace.is_monotone("objective_nats")
    assert not trace.is_monotone("objective_nats", increasing=False)
    path = trace.to_csv(tmp_path / "traces" / "t.csv")
    rows = list(csv.DictReader(path.open()))
    assert [r["iter"] for r in rows] == ["0", "1", "2", "3"]
    assert list(rows[0]) == ["iter", "objective_nats", "wall_ms"]


def test_trace_slack_absorbs_roundoff():
    trace = ConvergenceTrace(("x",))
    trace.record(x=1.0)
    trace.record(x=1.0 - 1e-12)
    assert trace.is_monotone("x")
