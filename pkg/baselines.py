"""
Fixed-array comparison points: conventional MIMO (M antennas) and massive
MIMO (M*N antennas), both fully digital.

The array is a half-wavelength uniform linear array along y, centered above
the service region at [D_x/2, D_y/2, a]. Each antenna sees the same free-space
line-of-sight law as a pinching element,

    H[i, k] = xi * alpha_k * exp(-j*kappa*D_ik) / D_ik

without the in-guide phase and without the 1/sqrt(N) power split (a
conventional antenna has its own RF chain).

Downlink runs the FP dual / RZF iterations of fpbcd with the channel frozen
(the same code path PASS uses, minus the location sweep); uplink applies the
MMSE receiver. Rates come from the same functions the PASS modes use.
"""

from dataclasses import dataclass

import numpy as np

from channel import check_users_in_region
from fpbcd import run_fp_fixed_channel, warm_start_precoder, weighted_sum_rate_dl
from uplink import mmse_detector, uplink_sum_rate_detfree

MODES = {
    "dl-baseline-mimo": ("dl", "mimo"),
    "dl-baseline-mmimo": ("dl", "mmimo"),
    "ul-baseline-mimo": ("ul", "mimo"),
    "ul-baseline-mmimo": ("ul", "mmimo"),
}


@dataclass(frozen=True)
class UlaChannel:
    A: int
    positions: np.ndarray   # A x 3
    H: np.ndarray           # A x K


def antenna_count(config, kind):
    """'mimo' -> M, 'mmimo' -> M*N"""
    return config.M if kind == "mimo" else config.M * config.N


def ula_channel(config, users, antenna_count):
    check_users_in_region(config, users)
    A = int(antenna_count)
    offsets = (np.arange(A) - (A - 1) / 2.0) * (config.wavelength / 2.0)
    positions = np.column_stack([
        np.full(A, config.D_x / 2.0),
        config.D_y / 2.0 + offsets,
        np.full(A, config.a),
    ])
    D = np.linalg.norm(positions[:, None, :] - users.positions[None, :, :], axis=2)
    H = config.xi * config.alpha_vec[None, :] * np.exp(-1j * config.kappa * D) / D
    return UlaChannel(A=A, positions=positions, H=H)


def run_baseline_dl(config, users, antenna_count):
    """FP precoding on the fixed array. Returns (W, weighted sum-rate, trace)."""
    H = ula_channel(config, users, antenna_count).H
    W, trace = run_fp_fixed_channel(config, H, warm_start_precoder(H, config.P_dl))
    return W, weighted_sum_rate_dl(H, W, config.sigma2_dl, config.weights_dl_vec), trace


def run_baseline_ul(config, users, antenna_count):
    """MMSE detection on the fixed array. Returns (Mrx, weighted sum-rate)."""
    H = ula_channel(config, users, antenna_count).H
    Mrx = mmse_detector(H, config.P_ul, config.sigma2_ul)
    return Mrx, uplink_sum_rate_detfree(H, config.P_ul, config.sigma2_ul, config.weights_ul_vec)
