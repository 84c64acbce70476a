"""
Single-loop ZF hybrid beamforming for the pinching-antenna downlink.

With zero-forcing the digital precoder is fixed by the channel,

    W = sqrt(P / tr Gamma) G* Gamma,   Gamma = (G^T G*)^-1

every user sees an interference-free gain P / tr Gamma, and the weighted
sum-rate sum_k lambda_k ln(1 + P / (sigma2 tr Gamma)) only depends on the
locations through tr Gamma. So the location problem is: minimize tr Gamma.

G^T G* is a sum of rank-1 terms, one per waveguide row g_m. With Gamma_m the
inverse Gram of the channel without row m, Sherman-Morrison gives

    tr Gamma = tr Gamma_m - g^H Gamma_m^2 g / (1 + g^H Gamma_m g)

so each single-element grid search maximizes the subtracted term over the
candidate rows g = c + Pi(ell), with Gamma_m built once per waveguide. Needs
M > K so that Gamma_m exists.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from channel import PiTable, channel_matrix, channel_row
from errors import NumericalFailure, RankDeficiencyError
from gridsearch import MAX_ITER_REACHED, ConvergenceTrace, gauss_seidel_update

log = logging.getLogger(__name__)

# largest Gram condition number accepted as invertible
MAX_CONDITION = 1e12


def zf_gram_inverse(G, allow_square=True):
    """(G^T G*)^-1 for an R x K channel, R >= K (R > K when not allow_square)."""
    R, K = G.shape
    if R < K or (R == K and not allow_square):
        raise RankDeficiencyError(f"ZF needs more waveguides than users (M={R}, K={K})")
    gram = G.T @ G.conj()
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        raise RankDeficiencyError(f"ZF Gram matrix singular (condition {cond:.3g})")
    return scipy.linalg.inv(gram)


@dataclass(frozen=True)
class ZfAuxiliary:
    Gamma: np.ndarray
    Gamma_m: np.ndarray


def zf_auxiliary(G, m):
    return ZfAuxiliary(Gamma=zf_gram_inverse(G),
                       Gamma_m=zf_gram_inverse(np.delete(G, m, axis=0)))


def _trace_gamma(G):
    return float(np.real(np.trace(zf_gram_inverse(G))))


def zf_precoder(G, P_d):
    Gamma = zf_gram_inverse(G)
    tr = float(np.real(np.trace(Gamma)))
    return np.sqrt(P_d / tr) * (G.conj() @ Gamma)


def zf_sum_rate(G, P_d, sigma2, weights):
    """sum_k lambda_k ln(1 + P_d / (sigma2 tr Gamma)) in nats."""
    snr = P_d / (sigma2 * _trace_gamma(G))
    return float(np.sum(weights) * np.log1p(snr))


def sm_trace_objective(Gamma_m, g_candidate):
    """Drop in tr Gamma from adding row g; vectorized over leading axes of g."""
    g = np.asarray(g_candidate, dtype=complex)
    v = g @ Gamma_m.T                      # Gamma_m g per candidate
    num = np.sum(np.abs(v) ** 2, axis=-1)
    den = 1.0 + np.real(np.sum(g.conj() * v, axis=-1))
    return num / den


def run_zf(config, users, L0, table=None):
    """Location sweeps minimizing tr Gamma, then the ZF precoder.
    Returns (W, L, trace)."""
    if config.M <= config.K:
        raise RankDeficiencyError(f"ZF location search needs M > K (M={config.M}, K={config.K})")
    weights = config.weights_dl_vec
    L = np.array(L0, dtype=float)
    G = channel_matrix(config, users, L)
    table = table if table is not None else PiTable(config, users)
    trace = ConvergenceTrace(("trace_gamma", "sum_rate_nats"))

    tr = _trace_gamma(G)
    _record(config, trace, tr, weights)
    best = (tr, L.copy())

    for _ in range(config.max_iter):
        for m in range(config.M):
            Gamma_m = zf_gram_inverse(np.delete(G, m, axis=0))
            for n in range(config.N):
                partial = table.pi(m, np.delete(L[:, m], n)).sum(axis=1)

                def objective(ell, m=m, partial=partial, Gamma_m=Gamma_m):
                    return sm_trace_objective(Gamma_m, partial[None, :] + table.pi(m, ell).T)

                L[n, m] = gauss_seidel_update(config, m, n, L, objective, table.grid, trace.flags)
            G[m] = channel_row(config, users, m, L[:, m])
        new = _trace_gamma(G)
        _record(config, trace, new, weights)
        log.debug("zf sweep %d: tr Gamma %.6g", trace.iterations, new)
        if new < best[0]:
            best = (new, L.copy())
        if tr - new <= config.epsilon * tr:
            break
        tr = new
    else:
        trace.flags.append(MAX_ITER_REACHED)

    L = best[1]
    trace.flags[:] = list(dict.fromkeys(trace.flags))
    W = zf_precoder(channel_matrix(config, users, L), config.P_dl)
    return W, L, trace


def _record(config, trace, tr, weights):
    rate = float(np.sum(weights) * np.log1p(config.P_dl / (config.sigma2_dl * tr)))
    trace.record(trace_gamma=tr, sum_rate_nats=rate)
    if not (np.isfinite(tr) and np.isfinite(rate)):
        raise NumericalFailure("zf: non-finite trace", trace=trace)
