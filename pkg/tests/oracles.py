"""Independent reference implementations used to check the package.

Everything here is deliberately brute-force or re-derived straight from the
math, kept free of the production code paths it verifies.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


_PERM_CACHE: dict = {}


def _all_perms(k: int) -> np.ndarray:
    if k not in _PERM_CACHE:
        _PERM_CACHE[k] = np.array(list(itertools.permutations(range(k))), dtype=int)
    return _PERM_CACHE[k]


def matching_brute_force(weights) -> float:
    """Best total weight over all perfect matchings of the zero-padded square.

    Forbidden (-inf) edges are dominated by any finite total: permutations are
    ranked first by how few forbidden edges they use, then by finite sum, the
    same contract the solver implements. Chosen forbidden edges contribute 0.
    """
    w = np.asarray(weights, dtype=float)
    n, m = w.shape
    k = max(n, m)
    padded = np.zeros((k, k))
    padded[:n, :m] = w
    perms = _all_perms(k)
    vals = padded[np.arange(k)[None, :], perms]        # (k!, k)
    forbidden = np.isneginf(vals)
    n_forb = forbidden.sum(axis=1)
    fsum = np.where(forbidden, 0.0, vals).sum(axis=1)
    order = np.lexsort((fsum, -n_forb))                # primary: fewest forbidden
    return float(fsum[order[-1]])


def j0_series(x: float, terms: int = 120) -> float:
    """Maclaurin series of the zeroth-order Bessel function:
    sum_k (-1)^k (x/2)^(2k) / (k!)^2."""
    acc = 0.0
    term = 1.0
    for k in range(terms):
        acc += term
        term *= -(x * x) / (4.0 * (k + 1) * (k + 1))
    return acc


def duplicate_breakpoints(alpha_v, alpha_cv, eps_v, eps_cv, h_hat_v_sq, h_hat_cv_sq,
                          noise, gamma0, p0):
    """Straight transcription of the breakpoint formulas, independent of the
    production code layout."""
    denom = ((1 - eps_cv ** 2) / (1 - eps_v ** 2)) * (1 / p0 - 1) * alpha_cv * eps_v ** 2 * h_hat_v_sq \
        - alpha_cv * eps_cv ** 2 * h_hat_cv_sq
    if denom <= 0:
        return math.inf, math.inf
    p_c0 = noise / denom
    p_v0 = p_c0 * gamma0 * alpha_cv * (1 - eps_cv ** 2) * (1 - p0) / (alpha_v * (1 - eps_v ** 2) * p0)
    return p_c0, p_v0


def duplicate_f1(p_c, p_v, alpha_v, alpha_cv, eps_v, eps_cv, h_hat_v_sq, h_hat_cv_sq,
                 noise, gamma0, p0):
    a = p_v * alpha_v * eps_v ** 2 * h_hat_v_sq
    f = p_v * alpha_v * (1 - eps_v ** 2)
    g = noise + p_c * alpha_cv * eps_cv ** 2 * h_hat_cv_sq
    h = p_c * alpha_cv * (1 - eps_cv ** 2)
    return math.exp(g * gamma0 / f) * (1 + h * gamma0 / f) - math.exp(a / f) / (1 - p0)


def duplicate_f2(p_c, p_v, alpha_v, alpha_cv, eps_v, eps_cv, h_hat_v_sq, h_hat_cv_sq,
                 noise, gamma0, p0):
    a = p_v * alpha_v * eps_v ** 2 * h_hat_v_sq
    f = p_v * alpha_v * (1 - eps_v ** 2)
    g = noise + p_c * alpha_cv * eps_cv ** 2 * h_hat_cv_sq
    h = p_c * alpha_cv * (1 - eps_cv ** 2)
    return (1 + f / (gamma0 * h)) * math.exp((a - g * gamma0) / (gamma0 * h)) - 1 / p0


def mc_outage(params, p_c, p_v, n_draws, rng) -> float:
    """Monte Carlo estimate of Pr{pair SINR <= floor} under the aged-CSI
    fading model: |e|^2 terms are exponential with the error variances."""
    e_v = rng.exponential(1.0 - params.eps_v ** 2, size=n_draws)
    e_cv = rng.exponential(1.0 - params.eps_cv ** 2, size=n_draws)
    num = p_v * params.alpha_v * (params.eps_v ** 2 * params.h_hat_v_sq + e_v)
    den = params.noise_mw + p_c * params.alpha_cv * (params.eps_cv ** 2 * params.h_hat_cv_sq + e_cv)
    return float(np.mean(num <= params.sinr_floor * den))


def min_rbs_subset_search(per_rb_snr_db, packet_bits, bler, table) -> int | None:
    """Smallest subset size able to carry the packet under the min-SE rule,
    by full subset enumeration (use only for small pools)."""
    snr = list(per_rb_snr_db)
    n = len(snr)
    se = []
    for s in snr:
        idx = int(table.mcs_indices(s, bler))
        se.append(table.se_for_mcs(idx) if idx >= 1 else None)
    best = None
    for mask in range(1, 1 << n):
        members = [se[i] for i in range(n) if mask >> i & 1]
        if any(s is None for s in members):
            continue
        k = len(members)
        if k * 168 * min(members) >= packet_bits:
            best = k if best is None else min(best, k)
    return best
