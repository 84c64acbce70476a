"""Geometry, Pi coefficients, G(L) and the feasible location set."""
import math

import numpy as np
import pytest

from channel import (
    PiTable,
    channel_matrix,
    check_users_in_region,
    distance,
    effective_channel,
    is_feasible,
    location_grid,
    pi_coeff,
    random_feasible_locations,
    sort_columns,
)
from conftest import users_at
from errors import ConfigError, FeasibilityError
from harness import sample_layout
from scenario import ScenarioConfig, dbm_to_watt


def test_distance_examples():
    cfg = ScenarioConfig(M=2, a=5.0, D_x=20.0, D_y=1.5)
    assert distance(cfg, [10, 0, 0], 0, 10.0) == pytest.approx(5.0)            # straight above
    assert distance(cfg, [10, 0, 0], 0, 13.0) == pytest.approx(math.sqrt(34))
    # second waveguide sits at y = d = 1.5
    assert distance(cfg, [0, 0, 0], 1, 0.0) == pytest.approx(math.sqrt(27.25), rel=1e-12)


def test_distance_never_below_height(small, small_layout, rng):
    users, _ = small_layout
    ell = rng.uniform(0, small.length, 500)
    for k in range(small.K):
        for m in range(small.M):
            assert np.all(distance(small, users.positions[k], m, ell) >= small.a)


def test_pi_magnitude_at_five_metres():
    cfg = ScenarioConfig(M=1, N=1, K=1, a=5.0, D_x=20.0, D_y=1.0)
    users = users_at((10.0, 0.0))
    assert cfg.xi == pytest.approx(8.5203e-4, rel=1e-4)
    assert abs(pi_coeff(cfg, users, 0, 0, 10.0)) == pytest.approx(1.7041e-4, rel=1e-4)


def test_pi_magnitude_identity(small, small_layout, rng):
    users, _ = small_layout
    ell = rng.uniform(0, small.length, 200)
    for k in range(small.K):
        for m in range(small.M):
            D = distance(small, users.positions[k], m, ell)
            ratio = np.abs(pi_coeff(small, users, k, m, ell)) * np.sqrt(small.N) * D / small.xi
            assert np.allclose(ratio, 1.0, rtol=0, atol=1e-12)


def test_pi_zero_total_phase_is_positive_real():
    base = ScenarioConfig(M=1, N=1, K=1, D_x=2.0, D_y=1.0)
    # element straight above the user at ell = 0: total phase kappa * a = 200 pi
    cfg = base.with_changes(a=100 * base.wavelength)
    pi = pi_coeff(cfg, users_at((0.0, 0.0)), 0, 0, 0.0)
    assert pi.real > 0
    assert abs(pi.imag) < 1e-9 * abs(pi)


def test_effective_channel_single_element_is_pi():
    cfg = ScenarioConfig(M=2, N=1, K=2, D_x=4.0, D_y=2.0)
    users = users_at((1.0, 0.5), (3.0, 1.5))
    for k in range(2):
        for m in range(2):
            assert effective_channel(cfg, users, k, m, [2.5]) == pytest.approx(
                pi_coeff(cfg, users, k, m, 2.5), rel=1e-14)


def test_channel_matrix_matches_termwise_sum(small, small_layout):
    users, L = small_layout
    G = channel_matrix(small, users, L)
    assert G.shape == (small.M, small.K)
    for m in range(small.M):
        for k in range(small.K):
            oracle = sum(pi_coeff(small, users, k, m, L[n, m]) for n in range(small.N))
            assert G[m, k] == pytest.approx(oracle, rel=1e-12)


def test_permutation_invariance_is_bitwise(rng):
    cfg = ScenarioConfig(M=3, N=5, K=3, D_x=4.0, D_y=2.0)
    for seed in range(100):
        users, L = sample_layout(cfg, seed)
        shuffled = np.column_stack([rng.permutation(L[:, m]) for m in range(cfg.M)])
        assert np.array_equal(channel_matrix(cfg, users, L), channel_matrix(cfg, users, shuffled))


def test_magnitude_law_triangle_inequality(small, small_layout):
    users, L = small_layout
    G = channel_matrix(small, users, L)
    for m in range(small.M):
        for k in range(small.K):
            D = distance(small, users.positions[k], m, L[:, m])
            bound = np.sum(small.xi / (np.sqrt(small.N) * D))
            assert abs(G[m, k]) <= bound * (1 + 1e-12)
            assert bound <= small.N * small.xi / (np.sqrt(small.N) * small.a)


def test_infeasible_column_raises(small, small_layout):
    users, L = small_layout
    bad = L.copy()
    bad[1, 0] = bad[0, 0]                   # two elements on top of each other
    with pytest.raises(FeasibilityError):
        channel_matrix(small, users, bad)
    with pytest.raises(FeasibilityError):
        effective_channel(small, users, 0, 0, [-0.1, 1.0])


def test_is_feasible_examples():
    cfg = ScenarioConfig(M=1, N=2, K=1, D_x=1.0, D_y=1.0, delta_ell=0.5)
    assert is_feasible(cfg, [0.0, 0.5])      # gap exactly delta_ell
    assert not is_feasible(cfg, [0.0, 0.4])
    assert not is_feasible(cfg, [-0.1])
    assert not is_feasible(cfg, [0.5, 1.01])


def test_saturating_spacing_is_a_config_error():
    with pytest.raises(ConfigError):
        ScenarioConfig(M=1, N=2, K=1, D_x=1.0, D_y=1.0, delta_ell=1.0)


def test_random_locations_always_feasible(rng):
    cfg = ScenarioConfig(M=2, N=6, K=1, D_x=1.0, D_y=1.0, delta_ell=0.19)
    for _ in range(200):
        col = random_feasible_locations(cfg, 0, rng)
        assert col.shape == (6,)
        assert is_feasible(cfg, col)


def test_random_locations_single_element_uniform(rng):
    cfg = ScenarioConfig(M=1, N=1, K=1, D_x=10.0, D_y=1.0)
    draws = np.concatenate([random_feasible_locations(cfg, 0, rng) for _ in range(4000)])
    assert draws.min() >= 0 and draws.max() <= 10.0
    assert draws.mean() == pytest.approx(5.0, abs=3 * 10.0 / math.sqrt(12 * 4000))


def test_sort_columns_keeps_channel(small, small_layout, rng):
    users, L = small_layout
    shuffled = np.column_stack([rng.permutation(L[:, m]) for m in range(small.M)])
    ordered = sort_columns(shuffled)
    assert np.all(np.diff(ordered, axis=0) >= 0)
    assert np.array_equal(channel_matrix(small, users, ordered), channel_matrix(small, users, L))


def test_pi_table_matches_direct_evaluation(small, small_layout):
    users, _ = small_layout
    table = PiTable(small, users)
    grid = location_grid(small)
    assert table.values.shape == (small.M, small.K, small.grid_L)
    assert grid[0] == 0.0 and grid[-1] == small.length
    for m in range(small.M):
        for k in range(small.K):
            assert np.allclose(table.values[m, k], pi_coeff(small, users, k, m, grid),
                               rtol=1e-12, atol=0)
    # off-grid positions are computed directly
    assert np.allclose(table.pi(0, np.array([0.123]))[:, 0],
                       [pi_coeff(small, users, k, 0, 0.123) for k in range(small.K)],
                       rtol=1e-12, atol=0)


def test_users_outside_the_region_are_rejected():
    cfg = ScenarioConfig(M=2, N=1, K=2, D_x=4.0, D_y=2.0)
    check_users_in_region(cfg, users_at((0.0, 0.0), (4.0, 2.0)))   # closed edges
    L = np.full((1, 2), 1.0)
    for xy in ((4.5, 1.0), (-0.1, 1.0), (1.0, 2.5), (1.0, -1e-9)):
        users = users_at((1.0, 1.0), xy)
        with pytest.raises(ConfigError, match="outside"):
            channel_matrix(cfg, users, L)
        with pytest.raises(ConfigError, match="outside"):
            PiTable(cfg, users)


def test_dbm_conversion():
    assert dbm_to_watt(-90) == pytest.approx(1e-12)
    assert dbm_to_watt(30) == pytest.approx(1.0)
    assert ScenarioConfig().sigma2_dl == pytest.approx(1e-12)
