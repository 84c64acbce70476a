"""
FP-BCD hybrid beamforming for the pinching-antenna downlink.

Maximizes the weighted sum-rate sum_k lambda_k ln(1 + SINR_k) jointly over the
digital precoder W (M x K) and the element locations L (N x M) by block
coordinate ascent on a fractional-programming dual:

  1. omega_k = sinr_bar_k                     (Lagrange dual, closed form)
  2. q_k = P sqrt(1+omega_k) g_k^T w_k / (sigma2 tr(WW^H) + P sum_j |g_k^T w_j|^2)
  3. W = (G* U G^T + gamma I)^-1 G* T,  gamma = sigma2 tr(U) / P   (RZF form)
  4. for m, n ascending: grid search of ell_m,n on the scalar objective f_m

then W is scaled to tr(W^H W) = P. sinr_bar is the power-constrained SINR with
the noise term sigma2/P * ||W||^2; it is invariant to scaling W, and after
the final scaling it equals the true SINR, which is why the power constraint
can be dropped during the iterations.

With T = Q A Lambda and U = Q Lambda Q^H (A = diag sqrt(1+omega)), the
W-dependent part of the dual is

  F_d = 2 Re tr(T^H G^T W) - tr(G^T W W^H G* U) - gamma tr(W W^H)

and as a function of one element location the only moving part is row m of
G. Writing E = W T^H, F = W W^H and

  b_m = E[m] - U_diag * sum_{m' != m} F[m, m'] conj(G[m'])

the row enters F_d as 2 Re(b_m . g_m) - F[m, m] sum_k U_kk |g_m,k|^2. Splitting
g_m = Pi(ell) + c (c = the other N-1 elements of waveguide m) gives the scalar
objective used by the grid search,

  f_m(ell) = sum_k 2 Re(zeta_k Pi_k(ell)) - vartheta_k |Pi_k(ell)|^2
  vartheta_k = F[m, m] U_kk,  zeta_k = b_m,k - vartheta_k conj(c_k)

which equals F_d(ell) up to a constant. b_m is built once per waveguide; c is
refreshed after every element move.

Iterations stop when the fractional increase of the (scaled) weighted
sum-rate is at most epsilon, or after max_iter outer iterations (flagged
max_iter_reached).
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from channel import PiTable, channel_matrix, channel_row
from errors import (
    DegeneratePrecoderError,
    NumericalFailure,
    RankDeficiencyError,
    SingularSystemError,
)
from gridsearch import (
    MAX_ITER_REACHED,
    ConvergenceTrace,
    fractional_change,
    gauss_seidel_update,
)
from zf import zf_precoder

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
TRACE_COLUMNS = ("objective_nats", "objective_bits")


def _gains(G, W):
    """|g_k^T w_j|^2 as a K x K array (row k = receiving user)."""
    return np.abs(G.T @ W) ** 2


def _frobenius2(W):
    return float(np.real(np.vdot(W, W)))


def sinr_downlink(G, W, sigma2, k=None):
    """SINR of user k (or the vector over all users)."""
    p = _gains(G, W)
    signal = np.diag(p)
    interference = p.sum(axis=1) - signal
    sinr = signal / (interference + sigma2)
    return sinr if k is None else float(sinr[k])


def sinr_bar(G, W, sigma2, P_d, k=None):
    """SINR with the power-normalized noise term sigma2/P_d * ||W||_F^2.
    Zero precoder -> 0."""
    p = _gains(G, W)
    signal = np.diag(p)
    denom = p.sum(axis=1) - signal + (sigma2 / P_d) * _frobenius2(W)
    out = np.divide(signal, denom, out=np.zeros_like(signal), where=denom > 0)
    return out if k is None else float(out[k])


def weighted_sum_rate_dl(G, W, sigma2, weights):
    """sum_k lambda_k ln(1 + SINR_k) in nats."""
    return float(np.dot(weights, np.log1p(sinr_downlink(G, W, sigma2))))


def update_omega(G, W, sigma2, P_d):
    return sinr_bar(G, W, sigma2, P_d)


def update_q(G, W, sigma2, P_d, omega):
    power = _frobenius2(W)
    if power == 0:
        raise DegeneratePrecoderError("q-update needs a nonzero precoder")
    X = G.T @ W
    denom = sigma2 * power + P_d * (np.abs(X) ** 2).sum(axis=1)
    return P_d * np.sqrt(1.0 + np.asarray(omega)) * np.diag(X) / denom


@dataclass(frozen=True)
class DualState:
    omega: np.ndarray
    q: np.ndarray
    weights: np.ndarray

    @property
    def Lambda(self):
        return np.diag(np.asarray(self.weights, dtype=float))

    @property
    def A(self):
        return np.diag(np.sqrt(1.0 + np.asarray(self.omega, dtype=float)))

    @property
    def Q(self):
        return np.diag(np.asarray(self.q, dtype=complex))

    @property
    def T(self):
        return self.Q @ self.A @ self.Lambda

    @property
    def U(self):
        return self.Q @ self.Lambda @ self.Q.conj().T

    @property
    def U_diag(self):
        # U is diagonal and real: lambda_k |q_k|^2
        return np.asarray(self.weights, dtype=float) * np.abs(self.q) ** 2


def update_W_rzf(G, duals, sigma2, P_d):
    """Maximizer of F_d at fixed L and duals (unscaled)."""
    M = G.shape[0]
    rhs = G.conj() @ duals.T
    if not np.any(rhs):
        return np.zeros((M, G.shape[1]), dtype=complex)
    gamma = sigma2 * float(np.sum(duals.U_diag)) / P_d
    system = (G.conj() * duals.U_diag) @ G.T + gamma * np.eye(M)
    try:
        W = scipy.linalg.solve(system, rhs, assume_a="her")
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"RZF system singular (gamma={gamma:.3g}): {e}") from e
    if not np.all(np.isfinite(W)):
        raise SingularSystemError(f"RZF system singular (gamma={gamma:.3g})")
    return W


def objective_F_d(G, W, duals, sigma2, P_d):
    X = G.T @ W
    gamma = sigma2 * float(np.sum(duals.U_diag)) / P_d
    linear = 2.0 * np.real(np.trace(duals.T.conj().T @ X))
    quadratic = float(np.sum(duals.U_diag * (np.abs(X) ** 2).sum(axis=1)))
    return float(linear - quadratic - gamma * _frobenius2(W))


def lagrange_dual(G, W, omega, sigma2, P_d, weights):
    """Lagrange-dual objective for fixed auxiliary omega; equals the weighted
    sum-rate (with sinr_bar) when omega = sinr_bar."""
    omega = np.asarray(omega, dtype=float)
    s = sinr_bar(G, W, sigma2, P_d)
    return float(np.dot(weights, np.log1p(omega) - omega + (1.0 + omega) * s / (1.0 + s)))


def fractional_objective(G, W, omega, sigma2, P_d, weights):
    """Sum-of-ratios form of the Lagrange dual."""
    omega = np.asarray(omega, dtype=float)
    p = _gains(G, W)
    total = p.sum(axis=1) + (sigma2 / P_d) * _frobenius2(W)
    ratio = np.divide(np.diag(p), total, out=np.zeros(len(omega)), where=total > 0)
    return float(np.dot(weights, np.log1p(omega) - omega + (1.0 + omega) * ratio))


def quadratic_dual(G, W, omega, q, sigma2, P_d, weights):
    """Quadratic-transform objective: omega-only terms plus F_d."""
    omega = np.asarray(omega, dtype=float)
    duals = DualState(omega, np.asarray(q, dtype=complex), np.asarray(weights, dtype=float))
    return float(np.dot(weights, np.log1p(omega) - omega)) + objective_F_d(G, W, duals, sigma2, P_d)


def scale_to_power(W, P):
    power = _frobenius2(W)
    if power == 0:
        raise DegeneratePrecoderError("cannot scale a zero precoder to the power budget")
    return W * np.sqrt(P / power)


@dataclass(frozen=True)
class ScalarObjectiveCoeffs:
    E: np.ndarray          # W T^H, M x K
    F: np.ndarray          # W W^H, M x M
    U_diag: np.ndarray     # K

    @classmethod
    def from_state(cls, W, duals):
        return cls(E=W @ duals.T.conj().T, F=W @ W.conj().T, U_diag=duals.U_diag)

    def b(self, m, G):
        others = np.arange(G.shape[0]) != m
        return self.E[m] - self.U_diag * (self.F[m, others] @ G[others].conj())

    def vartheta(self, m):
        return np.real(self.F[m, m]) * self.U_diag

    def zeta(self, b_m, vartheta, partial_row):
        return b_m - vartheta * np.conj(partial_row)


def scalar_objective_f_m(zeta, vartheta, pi):
    """f_m at the candidate(s) whose Pi values are `pi` (K or K x n_candidates)."""
    return 2.0 * np.real(zeta @ pi) - vartheta @ (np.abs(pi) ** 2)


def _location_sweep(config, users, table, L, flags):
    """One Gauss-Seidel pass over all elements; mutates L, returns the new G."""

    def sweep(G, W, duals):
        coeffs = ScalarObjectiveCoeffs.from_state(W, duals)
        G = G.copy()
        for m in range(config.M):
            b_m = coeffs.b(m, G)
            vartheta = coeffs.vartheta(m)
            for n in range(config.N):
                partial = table.pi(m, np.delete(L[:, m], n)).sum(axis=1)
                zeta = coeffs.zeta(b_m, vartheta, partial)

                def objective(ell, m=m, zeta=zeta):
                    return scalar_objective_f_m(zeta, vartheta, table.pi(m, ell))

                L[n, m] = gauss_seidel_update(config, m, n, L, objective, table.grid, flags)
            G[m] = channel_row(config, users, m, L[:, m])
        return G, L.copy()

    return sweep


def _fp_loop(config, G, W, sweep=None, state=None, label="fp"):
    """Dual / precoder iterations, optionally with a location sweep after each
    W update. `sweep(G, W, duals)` returns the new channel and a snapshot of
    whatever produced it. Returns the best (scaled W, G, snapshot) and the trace."""
    weights = config.weights_dl_vec
    sigma2, P = config.sigma2_dl, config.P_dl
    trace = ConvergenceTrace(TRACE_COLUMNS)

    W = scale_to_power(np.asarray(W, dtype=complex), P)
    rate = weighted_sum_rate_dl(G, W, sigma2, weights)
    _record(trace, rate, label)
    best = (rate, W, G, state)

    for _ in range(config.max_iter):
        omega = update_omega(G, W, sigma2, P)
        q = update_q(G, W, sigma2, P, omega)
        duals = DualState(omega, q, weights)
        W = update_W_rzf(G, duals, sigma2, P)
        if sweep is not None:
            G, state = sweep(G, W, duals)
        W = scale_to_power(W, P)
        new = weighted_sum_rate_dl(G, W, sigma2, weights)
        _record(trace, new, label)
        log.debug("%s iter %d: %.6f bit/s/Hz", label, trace.iterations, new / LN2)
        if new > best[0]:
            best = (new, W, G, state)
        if fractional_change(new, rate) <= config.epsilon:
            break
        rate = new
    else:
        trace.flags.append(MAX_ITER_REACHED)
    return best[1], best[2], best[3], trace


def _record(trace, rate, label):
    trace.record(objective_nats=rate, objective_bits=rate / LN2)
    if not np.isfinite(rate):
        raise NumericalFailure(f"{label}: non-finite weighted sum-rate", trace=trace)


def run_fp_bcd(config, users, W0, L0, table=None, optimize_locations=True):
    """FP-BCD from (W0, L0). Returns (W, L, trace) with tr(W^H W) = P_dl."""
    L = np.array(L0, dtype=float)
    G = channel_matrix(config, users, L)
    table = table if table is not None else PiTable(config, users)
    flags = []
    sweep = _location_sweep(config, users, table, L, flags) if optimize_locations else None
    W, _, L_best, trace = _fp_loop(config, G, W0, sweep, state=L.copy(), label="fp-bcd")
    trace.flags.extend(dict.fromkeys(flags))
    return W, L_best, trace


def run_fp_fixed_channel(config, G, W0):
    """The same dual / RZF iterations with the channel held fixed."""
    W, _, _, trace = _fp_loop(config, np.asarray(G, dtype=complex), W0, label="fp-fixed")
    return W, trace


def matched_filter(G, P):
    return scale_to_power(np.asarray(G, dtype=complex).conj(), P)


def warm_start_precoder(G, P):
    """ZF when the channel supports it, matched filter otherwise."""
    M, K = G.shape
    if M > K:
        try:
            return zf_precoder(G, P)
        except RankDeficiencyError:
            log.warning("ZF warm start unavailable (singular Gram), using matched filter")
    return matched_filter(G, P)
