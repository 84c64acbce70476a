"""
Greedy hybrid receiver for the pinching-antenna uplink.

Users transmit with power P_u each; the AP applies a bank of K linear filters
Mrx (M x K) to the waveguide outputs. For fixed locations the best linear
filter is MMSE,

    Mrx = G* (G^T G* + (sigma2/P_u) I)^-1

and the resulting weighted sum-rate has a determinant form. With
rho = P_u / sigma2, Sylvester's identity turns the per-user M x M
determinants into K x K ones:

    R = beta_sum ln det(I + rho G^H G) - sum_k beta_k ln det(I + rho G_k^H G_k)

(G_k drops column k). As a function of one row g of G the determinant
lemma factors out everything that does not move:

    R(g) = beta_sum ln(1 + rho g^T Gt_m g*) - sum_k beta_k ln(1 + rho g_k^T Gt_mk g_k*) + const

where Gt_m = (I + rho Gb^H Gb)^-1 for the channel Gb without row m and Gt_mk
the same with user k's column removed too. The location sweep grid-searches
that scalar form element by element; once the sum-rate stops improving by
more than epsilon the MMSE receiver of the final layout is emitted.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from channel import PiTable, channel_matrix, channel_row
from errors import DegenerateReceiverError, NumericalFailure
from gridsearch import (
    MAX_ITER_REACHED,
    ConvergenceTrace,
    fractional_change,
    gauss_seidel_update,
)

log = logging.getLogger(__name__)

LN2 = np.log(2.0)


def mmse_detector(G, P_u, sigma2_ul):
    K = G.shape[1]
    if not np.any(G):
        return np.zeros_like(G, dtype=complex)
    system = G.T @ G.conj() + (sigma2_ul / P_u) * np.eye(K)
    return G.conj() @ scipy.linalg.inv(system)


def sinr_uplink(G, m_k, P_u, sigma2_ul, k):
    m_k = np.asarray(m_k, dtype=complex)
    norm2 = float(np.real(np.vdot(m_k, m_k)))
    if norm2 == 0:
        raise DegenerateReceiverError(f"receiver of user {k} is zero")
    p = np.abs(m_k @ G) ** 2
    return float(p[k] / (p.sum() - p[k] + (sigma2_ul / P_u) * norm2))


def weighted_sum_rate_ul(G, Mrx, P_u, sigma2_ul, weights):
    """sum_k beta_k ln(1 + SINR_k) for any receiver bank."""
    sinr = np.array([sinr_uplink(G, Mrx[:, k], P_u, sigma2_ul, k) for k in range(G.shape[1])])
    return float(np.dot(weights, np.log1p(sinr)))


def uplink_sum_rate_direct(G, P_u, sigma2_ul, weights):
    """Per-user M x M determinant form."""
    M, K = G.shape
    noise = (sigma2_ul / P_u) * np.eye(M)
    total = 0.0
    for k in range(K):
        others = np.delete(G, k, axis=1)
        cov = others @ others.conj().T + noise
        g = G[:, k:k + 1]
        _, logdet = np.linalg.slogdet(np.eye(M) + g @ g.conj().T @ scipy.linalg.inv(cov))
        total += weights[k] * logdet
    return float(total)


def _logdet_gram(G, rho):
    """ln det(I + rho G^H G); an empty product (no columns) is 1."""
    if G.shape[1] == 0:
        return 0.0
    _, logdet = np.linalg.slogdet(np.eye(G.shape[1]) + rho * (G.conj().T @ G))
    return float(logdet)


def uplink_sum_rate_detfree(G, P_u, sigma2_ul, weights):
    rho = P_u / sigma2_ul
    weights = np.asarray(weights, dtype=float)
    total = weights.sum() * _logdet_gram(G, rho)
    for k in range(G.shape[1]):
        total -= weights[k] * _logdet_gram(np.delete(G, k, axis=1), rho)
    return float(total)


@dataclass(frozen=True)
class UplinkAuxiliary:
    Gamma_t_m: np.ndarray
    Gamma_t_mk: tuple     # K arrays, (K-1) x (K-1)


def uplink_auxiliary(G, m, P_u, sigma2_ul):
    rho = P_u / sigma2_ul
    Gb = np.delete(G, m, axis=0)
    K = G.shape[1]

    def inverse(cols):
        return scipy.linalg.inv(np.eye(cols.shape[1]) + rho * (cols.conj().T @ cols))

    return UplinkAuxiliary(
        Gamma_t_m=inverse(Gb),
        Gamma_t_mk=tuple(inverse(np.delete(Gb, k, axis=1)) if K > 1
                         else np.zeros((0, 0), dtype=complex) for k in range(K)),
    )


def _quad(rows, Gamma):
    # g^T Gamma g* per row; real since Gamma is Hermitian
    return np.real(np.sum((rows @ Gamma) * rows.conj(), axis=-1))


def scalar_uplink_objective(config, aux, g_candidate):
    """Location-dependent part of the uplink sum-rate for candidate rows g
    (shape K, or n x K)."""
    rho = config.P_ul / config.sigma2_ul
    beta = config.weights_ul_vec
    rows = np.asarray(g_candidate, dtype=complex)
    value = beta.sum() * np.log1p(rho * _quad(rows, aux.Gamma_t_m))
    for k in range(rows.shape[-1]):
        value = value - beta[k] * np.log1p(rho * _quad(np.delete(rows, k, axis=-1), aux.Gamma_t_mk[k]))
    return value


def run_greedy_uplink(config, users, L0, table=None):
    """Location sweeps on the uplink sum-rate, then MMSE. Returns (Mrx, L, trace)."""
    P_u, sigma2, weights = config.P_ul, config.sigma2_ul, config.weights_ul_vec
    L = np.array(L0, dtype=float)
    G = channel_matrix(config, users, L)
    table = table if table is not None else PiTable(config, users)
    trace = ConvergenceTrace(("sum_rate_nats", "sum_rate_bits"))

    rate = uplink_sum_rate_detfree(G, P_u, sigma2, weights)
    _record(trace, rate)
    best = (rate, L.copy())

    for _ in range(config.max_iter):
        for m in range(config.M):
            aux = uplink_auxiliary(G, m, P_u, sigma2)
            for n in range(config.N):
                partial = table.pi(m, np.delete(L[:, m], n)).sum(axis=1)

                def objective(ell, m=m, partial=partial, aux=aux):
                    return scalar_uplink_objective(config, aux, partial[None, :] + table.pi(m, ell).T)

                L[n, m] = gauss_seidel_update(config, m, n, L, objective, table.grid, trace.flags)
            G[m] = channel_row(config, users, m, L[:, m])
        new = uplink_sum_rate_detfree(G, P_u, sigma2, weights)
        _record(trace, new)
        log.debug("uplink sweep %d: %.6f bit/s/Hz", trace.iterations, new / LN2)
        if new > best[0]:
            best = (new, L.copy())
        if fractional_change(new, rate) <= config.epsilon:
            break
        rate = new
    else:
        trace.flags.append(MAX_ITER_REACHED)

    L = best[1]
    trace.flags[:] = list(dict.fromkeys(trace.flags))
    return mmse_detector(channel_matrix(config, users, L), P_u, sigma2), L, trace


def _record(trace, rate):
    trace.record(sum_rate_nats=rate, sum_rate_bits=rate / LN2)
    if not np.isfinite(rate):
        raise NumericalFailure("uplink: non-finite sum-rate", trace=trace)
