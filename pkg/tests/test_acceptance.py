"""Desk-scale runs (M=5, N=6, K=4, grid_L=4096, 20 seeds). Minutes, not
seconds: set PASS_SLOW=1 to include them."""
import numpy as np
import pytest

from channel import PiTable, channel_matrix
from conftest import slow
from fpbcd import run_fp_bcd
from harness import ExperimentSpec, run_experiment, sample_layout
from scenario import DESK
from uplink import run_greedy_uplink
from zf import run_zf

SEEDS = tuple(range(20))


def _mean(spec):
    _, rows = run_experiment(spec, jobs=4)
    return [row["mean_bits"] for row in rows]


@slow
def test_traces_are_monotone_at_desk_scale():
    for seed in SEEDS:
        users, L0 = sample_layout(DESK, seed)
        table = PiTable(DESK, users)
        W_zf, L_zf, zf_trace = run_zf(DESK, users, L0, table)
        assert zf_trace.is_monotone("trace_gamma", increasing=False)
        X = channel_matrix(DESK, users, L_zf).T @ W_zf
        off = X - np.diag(np.diag(X))
        assert np.max(np.abs(off)) <= 1e-9 * np.min(np.abs(np.diag(X)))

        W, L, fp_trace = run_fp_bcd(DESK, users, W_zf, L_zf, table)
        assert fp_trace.is_monotone("objective_nats")
        assert fp_trace.iterations <= 10
        assert np.real(np.vdot(W, W)) == pytest.approx(DESK.P_dl, rel=1e-9)

        _, _, ul_trace = run_greedy_uplink(DESK, users, L0, table)
        assert ul_trace.is_monotone("sum_rate_nats")
        assert ul_trace.iterations <= 10


@slow
def test_pass_beats_fixed_arrays():
    records, _ = run_experiment(ExperimentSpec(DESK, "dl-fp", SEEDS), jobs=4)
    fp = np.mean([r.sum_rate_bits for r in records])
    assert all(r.sum_rate_bits >= r.warm_start_bits for r in records)
    mmimo = _mean(ExperimentSpec(DESK, "dl-baseline-mmimo", SEEDS))[0]
    mimo = _mean(ExperimentSpec(DESK, "dl-baseline-mimo", SEEDS))[0]
    assert fp >= 1.10 * mmimo
    assert fp >= 2.00 * mimo


@slow
def test_finer_grid_never_hurts_on_average():
    means = _mean(ExperimentSpec(DESK, "dl-fp", SEEDS, "grid_L", (256, 1024, 4096, 16384)))
    assert all(b >= a for a, b in zip(means, means[1:]))


@slow
def test_uplink_rate_falls_with_more_users():
    means = _mean(ExperimentSpec(DESK, "ul-mmse", SEEDS, "K", (2, 3, 4, 5, 6)))
    assert all(b < a for a, b in zip(means, means[1:]))
