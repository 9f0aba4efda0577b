"""Optimal transmit powers for a CUE-VUE resource-sharing pair.

For a candidate pair the CUE rate is maximised subject to the VUE's outage
constraint Pr{sidelink SINR <= threshold} <= p0 and the box limits on both
powers. Under aged CSI the outage probability has a closed form built from

    A = p_v * alpha_v * eps_v^2 * |h_hat_v|^2      (known part of the signal)
    F = p_v * alpha_v * (1 - eps_v^2)              (signal error scale)
    G = noise + p_c * alpha_cv * eps_cv^2 * |h_hat_cv|^2
    H = p_c * alpha_cv * (1 - eps_cv^2)            (interference error scale)

and the constraint boundary splits into two monotone curves, expressed by the
functions F1 (regime A <= gamma0*G, feasible iff F1 <= 0) and F2 (regime
A > gamma0*G, feasible iff F2 >= 0). The solver picks the active curve from
the breakpoint powers (P_c0, P_v0) where the regimes meet, then finds the
binding power by bisection; the companion batch implementation vectorises the
same arithmetic across many pairs.

All exponentials are evaluated in the log domain; the reported residual uses
exp(b) * expm1(a - b), which equals e^a - e^b without overflow for the
operating range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

BISECT_ITERS = 120
_TINY_FRACTION = 1e-12


class DegenerateCsiError(ValueError):
    """eps = 1 makes the error-scale terms vanish; the closed forms break."""


@dataclass(frozen=True)
class PairLinkParams:
    alpha_v: float          # pair transmitter -> pair receiver
    alpha_cv: float         # CUE -> pair receiver
    alpha_v_gnb: float      # pair transmitter -> gNB, effective (fading folded in)
    alpha_c_gnb: float      # CUE -> gNB
    eps_v: float
    eps_cv: float
    h_hat_v_sq: float
    h_hat_cv_sq: float
    h_c_gnb_sq: float
    noise_mw: float         # at the pair receiver (constraint side)
    sinr_floor: float       # linear SINR threshold gamma_0
    outage_cap: float       # p_0
    p_c_max_mw: float
    p_v_max_mw: float
    noise_gnb_mw: float = 0.0  # 0 means "same as noise_mw"

    def __post_init__(self):
        if not (0.0 < self.outage_cap < 1.0):
            raise ValueError("outage_cap must lie in (0, 1)")
        if self.sinr_floor <= 0:
            raise ValueError("sinr_floor must be positive")
        if min(self.alpha_v, self.alpha_cv, self.alpha_c_gnb) <= 0 or self.alpha_v_gnb < 0:
            raise ValueError("link gains must be positive")
        if self.noise_mw <= 0 or min(self.p_c_max_mw, self.p_v_max_mw) <= 0:
            raise ValueError("noise and power limits must be positive")
        for eps in (self.eps_v, self.eps_cv):
            if not 0.0 <= eps <= 1.0:
                raise ValueError("eps must lie in [0, 1]")

    def _check_csi(self):
        if self.eps_v >= 1.0 or self.eps_cv >= 1.0:
            raise DegenerateCsiError("eps = 1 leaves no CSI error scale")

    @property
    def rate_noise_mw(self) -> float:
        return self.noise_gnb_mw if self.noise_gnb_mw > 0 else self.noise_mw

    def cue_rate(self, p_c_mw: float, p_v_mw: float) -> float:
        """CUE rate proxy (bps/Hz) with the pair's interference at these powers."""
        sinr = p_c_mw * self.alpha_c_gnb * self.h_c_gnb_sq / (self.rate_noise_mw + p_v_mw * self.alpha_v_gnb)
        return math.log2(1.0 + sinr)


@dataclass(frozen=True)
class PowerSolution:
    p_c_mw: float
    p_v_mw: float
    case: int              # 1, 2 or 3 of the selector
    branch: str            # which constraint function and variable the root used
    residual: float        # F1 or F2 value at the solution
    root_found: bool       # False when a box corner was binding without a root

    def clipped(self, params: PairLinkParams) -> "PowerSolution":
        return replace(
            self,
            p_c_mw=min(max(self.p_c_mw, 0.0), params.p_c_max_mw),
            p_v_mw=min(max(self.p_v_mw, 0.0), params.p_v_max_mw),
        )


def _afgh(p_c, p_v, pr: PairLinkParams):
    a = p_v * pr.alpha_v * pr.eps_v ** 2 * pr.h_hat_v_sq
    f = p_v * pr.alpha_v * (1.0 - pr.eps_v ** 2)
    g = pr.noise_mw + p_c * pr.alpha_cv * pr.eps_cv ** 2 * pr.h_hat_cv_sq
    h = p_c * pr.alpha_cv * (1.0 - pr.eps_cv ** 2)
    return a, f, g, h


def _f1_logs(p_c, p_v, pr: PairLinkParams):
    a, f, g, h = _afgh(p_c, p_v, pr)
    if f <= 0:
        return math.inf, 0.0  # p_v = 0: certain outage, treat as +inf
    g0 = pr.sinr_floor
    l1 = g0 * g / f + math.log1p(g0 * h / f)
    l2 = a / f - math.log(1.0 - pr.outage_cap)
    return l1, l2


def _f2_logs(p_c, p_v, pr: PairLinkParams):
    a, f, g, h = _afgh(p_c, p_v, pr)
    g0 = pr.sinr_floor
    if h <= 0:
        # no interference: regime applies only when A > gamma0 G, outage -> 0
        return (math.inf, -math.log(pr.outage_cap)) if a > g0 * g else (-math.inf, -math.log(pr.outage_cap))
    l3 = math.log1p(f / (g0 * h)) + (a - g0 * g) / (g0 * h)
    l4 = -math.log(pr.outage_cap)
    return l3, l4


def _safe_diff_exp(la: float, lb: float) -> float:
    """e^la - e^lb without overflow near la ~ lb."""
    if math.isinf(la) and la > 0:
        return math.inf
    if math.isinf(la) and la < 0:
        return -math.exp(lb)
    try:
        return math.exp(lb) * math.expm1(la - lb)
    except OverflowError:
        return math.inf if la > lb else -math.inf


def f1(p_c_mw: float, p_v_mw: float, params: PairLinkParams) -> float:
    """Constraint function of the A <= gamma0*G regime; <= 0 means the outage
    cap is met there."""
    params._check_csi()
    l1, l2 = _f1_logs(p_c_mw, p_v_mw, params)
    return _safe_diff_exp(l1, l2)


def f2(p_c_mw: float, p_v_mw: float, params: PairLinkParams) -> float:
    """Constraint function of the A > gamma0*G regime; >= 0 means the outage
    cap is met there."""
    params._check_csi()
    l3, l4 = _f2_logs(p_c_mw, p_v_mw, params)
    return _safe_diff_exp(l3, l4)


def _f1_sign(p_c, p_v, pr) -> float:
    l1, l2 = _f1_logs(p_c, p_v, pr)
    return l1 - l2


def _f2_sign(p_c, p_v, pr) -> float:
    l3, l4 = _f2_logs(p_c, p_v, pr)
    return l3 - l4


def breakpoints(params: PairLinkParams):
    """Breakpoint powers (P_c0, P_v0) where the two constraint regimes meet.

    A non-positive denominator means the regimes never meet at positive powers;
    both breakpoints are then reported as +inf, which routes the solver to the
    F1 regime.
    """
    params._check_csi()
    pr = params
    denom = (
        (1.0 - pr.eps_cv ** 2) / (1.0 - pr.eps_v ** 2)
        * (1.0 / pr.outage_cap - 1.0)
        * pr.alpha_cv * pr.eps_v ** 2 * pr.h_hat_v_sq
        - pr.alpha_cv * pr.eps_cv ** 2 * pr.h_hat_cv_sq
    )
    if denom <= 0:
        return math.inf, math.inf
    p_c0 = pr.noise_mw / denom
    p_v0 = (
        p_c0 * pr.sinr_floor * pr.alpha_cv * (1.0 - pr.eps_cv ** 2) * (1.0 - pr.outage_cap)
        / (pr.alpha_v * (1.0 - pr.eps_v ** 2) * pr.outage_cap)
    )
    return p_c0, p_v0


def closed_form_outage(params: PairLinkParams, p_c_mw: float, p_v_mw: float) -> float:
    """Exact Pr{pair SINR <= sinr_floor} at given powers (diagnostic)."""
    params._check_csi()
    a, f, g, h = _afgh(p_c_mw, p_v_mw, params)
    g0 = params.sinr_floor
    if f <= 0:
        return 1.0
    if a <= g0 * g:
        return 1.0 - math.exp((a - g0 * g) / f) / (1.0 + g0 * h / f)
    if h <= 0:
        return 0.0
    return math.exp(-(a - g0 * g) / (g0 * h)) / (1.0 + f / (g0 * h))


def _bisect(sign_fn, lo: float, hi: float) -> Optional[float]:
    """Root of a monotone sign function on [lo, hi]; None without a bracket."""
    s_lo = sign_fn(lo)
    s_hi = sign_fn(hi)
    if s_lo == 0.0:
        return lo
    if s_hi == 0.0:
        return hi
    if (s_lo > 0) == (s_hi > 0):
        return None
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        s = sign_fn(mid)
        if s == 0.0:
            return mid
        if (s > 0) == (s_lo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_pair_power(params: PairLinkParams) -> Optional[PowerSolution]:
    """Optimal (P_c, P_v) for the pair, or None when no power choice meets the
    outage cap.

    Case selector:
      1. P_v_max <= P_v0: the F1 regime covers the reachable range.
      2. P_v_max > P_v0 and P_c_max > P_c0: the F2 regime is active.
      3. otherwise: the CUE transmits at its cap and the VUE takes the F1 root.
    Within a case the binding corner decides whether the root is taken in the
    VUE power (CUE pinned at its cap) or in the CUE power (VUE pinned).
    """
    params._check_csi()
    pr = params
    p_c0, p_v0 = breakpoints(pr)
    pcm, pvm = pr.p_c_max_mw, pr.p_v_max_mw
    tiny = _TINY_FRACTION * pvm

    if pvm <= p_v0:
        if _f1_sign(pcm, pvm, pr) <= 0:  # corner feasible, root in p_v
            if _f1_sign(pcm, tiny, pr) <= 0:
                sol = PowerSolution(pcm, tiny, 1, "f1:p_v", f1(pcm, tiny, pr), False)
            else:
                root = _bisect(lambda p: _f1_sign(pcm, p, pr), tiny, pvm)
                sol = PowerSolution(pcm, root, 1, "f1:p_v", f1(pcm, root, pr), True)
        else:
            if _f1_sign(0.0, pvm, pr) > 0:
                return None
            root = _bisect(lambda p: _f1_sign(p, pvm, pr), 0.0, pcm)
            sol = PowerSolution(root, pvm, 1, "f1:p_c", f1(root, pvm, pr), True)
    elif pcm > p_c0:
        if _f2_sign(pcm, pvm, pr) >= 0:  # corner feasible, root in p_v
            lo = p_v0
            if _f2_sign(pcm, lo, pr) >= 0:
                sol = PowerSolution(pcm, lo, 2, "f2:p_v", f2(pcm, lo, pr), False)
            else:
                root = _bisect(lambda p: _f2_sign(pcm, p, pr), lo, pvm)
                sol = PowerSolution(pcm, root, 2, "f2:p_v", f2(pcm, root, pr), True)
        else:
            if _f2_sign(p_c0, pvm, pr) < 0:
                return None
            root = _bisect(lambda p: _f2_sign(p, pvm, pr), p_c0, pcm)
            sol = PowerSolution(root, pvm, 2, "f2:p_c", f2(root, pvm, pr), True)
    else:
        if _f1_sign(pcm, p_v0, pr) > 0:
            return None
        if _f1_sign(pcm, tiny, pr) <= 0:
            sol = PowerSolution(pcm, tiny, 3, "f1:p_v", f1(pcm, tiny, pr), False)
        else:
            root = _bisect(lambda p: _f1_sign(pcm, p, pr), tiny, p_v0)
            sol = PowerSolution(pcm, root, 3, "f1:p_v", f1(pcm, root, pr), True)

    return sol.clipped(params)


# --- vectorised batch path used by the per-TTI pair scans -------------------

@dataclass
class PairParamsBatch:
    """Column arrays of PairLinkParams over many candidate pairs."""

    alpha_v: np.ndarray
    alpha_cv: np.ndarray
    eps_v: np.ndarray
    eps_cv: np.ndarray
    h_hat_v_sq: np.ndarray
    h_hat_cv_sq: np.ndarray
    noise_mw: np.ndarray
    sinr_floor: np.ndarray
    outage_cap: np.ndarray
    p_c_max_mw: np.ndarray
    p_v_max_mw: np.ndarray

    def __len__(self):
        return len(self.alpha_v)

    def take(self, idx: np.ndarray) -> "PairParamsBatch":
        return PairParamsBatch(**{k: getattr(self, k)[idx] for k in self.__dataclass_fields__})


def _batch_f1_sign(p_c, p_v, b: PairParamsBatch):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        a = p_v * b.alpha_v * b.eps_v ** 2 * b.h_hat_v_sq
        f = p_v * b.alpha_v * (1.0 - b.eps_v ** 2)
        g = b.noise_mw + p_c * b.alpha_cv * b.eps_cv ** 2 * b.h_hat_cv_sq
        h = p_c * b.alpha_cv * (1.0 - b.eps_cv ** 2)
        l1 = b.sinr_floor * g / f + np.log1p(b.sinr_floor * h / f)
        l2 = a / f - np.log(1.0 - b.outage_cap)
        out = l1 - l2
        return np.where(f <= 0, np.inf, out)


def _batch_f2_sign(p_c, p_v, b: PairParamsBatch):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        a = p_v * b.alpha_v * b.eps_v ** 2 * b.h_hat_v_sq
        f = p_v * b.alpha_v * (1.0 - b.eps_v ** 2)
        g = b.noise_mw + p_c * b.alpha_cv * b.eps_cv ** 2 * b.h_hat_cv_sq
        h = p_c * b.alpha_cv * (1.0 - b.eps_cv ** 2)
        g0 = b.sinr_floor
        l3 = np.log1p(f / (g0 * h)) + (a - g0 * g) / (g0 * h)
        l4 = -np.log(b.outage_cap)
        out = l3 - l4
        return np.where(h <= 0, np.where(a > g0 * g, np.inf, -np.inf), out)


_BATCH_BISECT_ITERS = 64  # resolves far below the 1e-9 * P_max tolerance


def _batch_bisect(sign_fn, fixed, lo, hi, vary_is_pv: bool, b: PairParamsBatch):
    def ev(p):
        return sign_fn(fixed, p, b) if vary_is_pv else sign_fn(p, fixed, b)

    s_lo = ev(lo)
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(_BATCH_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        s = ev(mid)
        go_lo = (s > 0) == (s_lo > 0)
        lo = np.where(go_lo, mid, lo)
        hi = np.where(go_lo, hi, mid)
    return 0.5 * (lo + hi)


def _fast_sign_fn(sign_kind: str, vary_is_pv: bool, fixed, b: PairParamsBatch):
    """Per-group sign function with everything but the varying power folded
    into constants; identical in value to the generic forms."""
    g0 = b.sinr_floor
    a_c = b.alpha_v * b.eps_v ** 2 * b.h_hat_v_sq      # A = a_c * p_v
    f_c = b.alpha_v * (1.0 - b.eps_v ** 2)             # F = f_c * p_v
    g_c = b.alpha_cv * b.eps_cv ** 2 * b.h_hat_cv_sq   # G = noise + g_c * p_c
    h_c = b.alpha_cv * (1.0 - b.eps_cv ** 2)           # H = h_c * p_c
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if sign_kind == "f1":
            l2 = a_c / f_c - np.log(1.0 - b.outage_cap)
            if vary_is_pv:
                g = b.noise_mw + g_c * fixed
                k1 = g0 * g / f_c
                k2 = g0 * h_c * fixed / f_c
                return lambda pv: k1 / pv + np.log1p(k2 / pv) - l2
            f = f_c * fixed
            c0 = g0 * b.noise_mw / f - l2
            c1 = g0 * g_c / f
            c2 = g0 * h_c / f
            return lambda pc: c0 + c1 * pc + np.log1p(c2 * pc)
        l4 = -np.log(b.outage_cap)
        if vary_is_pv:
            h = h_c * fixed
            g = b.noise_mw + g_c * fixed
            k3 = f_c / (g0 * h)
            k4 = a_c / (g0 * h)
            k5 = g / h + l4
            return lambda pv: np.log1p(k3 * pv) + k4 * pv - k5
        a = a_c * fixed
        f = f_c * fixed
        k6 = f / (g0 * h_c)
        k7 = (a - g0 * b.noise_mw) / (g0 * h_c)
        k8 = g_c / h_c + l4
        return lambda pc: np.log1p(k6 / pc) + k7 / pc - k8


def _batch_bisect_fast(sign_kind: str, fixed, lo, hi, vary_is_pv: bool, b: PairParamsBatch):
    ev = _fast_sign_fn(sign_kind, vary_is_pv, fixed, b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s_lo = ev(lo)
        lo = lo.copy()
        hi = hi.copy()
        pos_lo = s_lo > 0
        for _ in range(_BATCH_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            go_lo = (ev(mid) > 0) == pos_lo
            lo = np.where(go_lo, mid, lo)
            hi = np.where(go_lo, hi, mid)
    return 0.5 * (lo + hi)


def solve_pair_power_batch(b: PairParamsBatch):
    """Vectorised solve_pair_power over a batch.

    Returns (p_c, p_v, case) arrays; case 0 marks infeasible pairs. Matches the
    scalar solver to bisection accuracy (unit-tested).
    """
    n = len(b)
    p_c = np.zeros(n)
    p_v = np.zeros(n)
    case = np.zeros(n, dtype=int)
    if n == 0:
        return p_c, p_v, case

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        denom = (
            (1.0 - b.eps_cv ** 2) / (1.0 - b.eps_v ** 2)
            * (1.0 / b.outage_cap - 1.0)
            * b.alpha_cv * b.eps_v ** 2 * b.h_hat_v_sq
            - b.alpha_cv * b.eps_cv ** 2 * b.h_hat_cv_sq
        )
        p_c0 = np.where(denom > 0, b.noise_mw / denom, np.inf)
        p_v0 = np.where(
            np.isfinite(p_c0),
            p_c0 * b.sinr_floor * b.alpha_cv * (1.0 - b.eps_cv ** 2) * (1.0 - b.outage_cap)
            / (b.alpha_v * (1.0 - b.eps_v ** 2) * b.outage_cap),
            np.inf,
        )

    pcm, pvm = b.p_c_max_mw, b.p_v_max_mw
    tiny = _TINY_FRACTION * pvm
    zeros = np.zeros(n)

    is1 = pvm <= p_v0
    is2 = (~is1) & (pcm > p_c0)
    is3 = (~is1) & (~is2)

    s_corner1 = _batch_f1_sign(pcm, pvm, b)
    s_corner2 = _batch_f2_sign(pcm, pvm, b)

    def solve_group(mask, sign_kind, fixed, lo, hi, vary_is_pv, case_id, out_fixed_is_pc):
        idx = np.nonzero(mask)[0]
        if idx.size == 0:
            return
        sub = b.take(idx)
        root = _batch_bisect_fast(sign_kind, fixed[idx], lo[idx], hi[idx], vary_is_pv, sub)
        if out_fixed_is_pc:
            p_c[idx] = fixed[idx]
            p_v[idx] = root
        else:
            p_c[idx] = root
            p_v[idx] = fixed[idx]
        case[idx] = case_id

    # case 1: F1 regime over the whole reachable range
    m_corner = is1 & (s_corner1 <= 0)
    if m_corner.any():
        s_tiny = np.full(n, np.inf)
        s_tiny[m_corner] = _batch_f1_sign(pcm[m_corner], tiny[m_corner], b.take(np.nonzero(m_corner)[0]))
        m = m_corner & (s_tiny <= 0)
        p_c[m], p_v[m], case[m] = pcm[m], tiny[m], 1
        solve_group(m_corner & (s_tiny > 0), "f1", pcm, tiny, pvm, True, 1, True)
    m_edge = is1 & (s_corner1 > 0)
    if m_edge.any():
        s_zero = np.full(n, np.inf)
        s_zero[m_edge] = _batch_f1_sign(zeros[m_edge], pvm[m_edge], b.take(np.nonzero(m_edge)[0]))
        solve_group(m_edge & (s_zero <= 0), "f1", pvm, zeros, pcm, False, 1, False)

    # case 2: F2 regime
    m_corner = is2 & (s_corner2 >= 0)
    if m_corner.any():
        lo2 = np.where(np.isfinite(p_v0), p_v0, tiny)
        s_lo = np.full(n, np.inf)
        s_lo[m_corner] = _batch_f2_sign(pcm[m_corner], lo2[m_corner], b.take(np.nonzero(m_corner)[0]))
        m = m_corner & (s_lo >= 0)
        p_c[m], p_v[m], case[m] = pcm[m], lo2[m], 2
        solve_group(m_corner & (s_lo < 0), "f2", pcm, lo2, pvm, True, 2, True)
    m_edge = is2 & (s_corner2 < 0)
    if m_edge.any():
        lo_c = np.where(np.isfinite(p_c0), p_c0, zeros)
        s_lo = np.full(n, -np.inf)
        s_lo[m_edge] = _batch_f2_sign(lo_c[m_edge], pvm[m_edge], b.take(np.nonzero(m_edge)[0]))
        solve_group(m_edge & (s_lo >= 0), "f2", pvm, lo_c, pcm, False, 2, False)

    # case 3: CUE pinned at its cap, F1 root up to the breakpoint
    if is3.any():
        hi3 = np.where(np.isfinite(p_v0), p_v0, pvm)
        s_top = np.full(n, np.inf)
        s_top[is3] = _batch_f1_sign(pcm[is3], hi3[is3], b.take(np.nonzero(is3)[0]))
        m_ok = is3 & (s_top <= 0)
        if m_ok.any():
            s_tiny = np.full(n, np.inf)
            s_tiny[m_ok] = _batch_f1_sign(pcm[m_ok], tiny[m_ok], b.take(np.nonzero(m_ok)[0]))
            m = m_ok & (s_tiny <= 0)
            p_c[m], p_v[m], case[m] = pcm[m], tiny[m], 3
            solve_group(m_ok & (s_tiny > 0), "f1", pcm, tiny, hi3, True, 3, True)

    np.clip(p_c, 0.0, pcm, out=p_c)
    np.clip(p_v, 0.0, pvm, out=p_v)
    return p_c, p_v, case
