"""Fast fading state, Gauss-Markov CSI aging, and SINR evaluation.

Every link carries an i.i.d. unit-variance circular complex fading value per
RB, redrawn or aged once per TTI. Links terminating at the base station are
redrawn fresh each TTI (the scheduler sees them perfectly); device-to-device
links age as h = eps * h_prev + e with e ~ CN(0, 1 - eps^2), so the scheduler
only knows the previous value h_hat and the correlation eps, while the realised
error e belongs to the world.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

SPEED_OF_LIGHT = 3.0e8  # m/s


def bessel_j0(x: float) -> float:
    """Zeroth-order Bessel function of the first kind.

    Maclaurin series for |x| <= 8 (converges fast, float64 cancellation is
    harmless there), Abramowitz-Stegun style rational approximation beyond.
    Absolute error below 1e-7 on [0, 10].
    """
    ax = abs(x)
    if ax <= 8.0:
        q = -(ax * ax) / 4.0
        term = 1.0
        acc = 1.0
        for k in range(1, 200):
            term *= q / (k * k)
            acc += term
            if abs(term) < 1e-17 * (abs(acc) + 1e-300):
                break
        return acc
    z = 8.0 / ax
    y = z * z
    p0 = 1.0 + y * (-0.1098628627e-2 + y * (0.2734510407e-4 + y * (-0.2073370639e-5 + y * 0.2093887211e-6)))
    q0 = -0.1562499995e-1 + y * (0.1430488765e-3 + y * (-0.6911147651e-5 + y * (0.7621095161e-6 + y * -0.934935152e-7)))
    xx = ax - 0.785398164
    return math.sqrt(0.636619772 / ax) * (math.cos(xx) * p0 - z * math.sin(xx) * q0)


def jakes_epsilon(speed_mps: float, carrier_hz: float, tti_s: float) -> float:
    """Channel correlation between consecutive TTIs under the Jakes model.

    eps = J0(2 pi f_d T) with Doppler f_d = v * f_c / c.
    """
    if tti_s <= 0:
        raise ValueError("TTI duration must be positive")
    f_d = speed_mps * carrier_hz / SPEED_OF_LIGHT
    return bessel_j0(2.0 * math.pi * f_d * tti_s)


def draw_unit_cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex normal samples with E|h|^2 = 1."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


def aged_power_gain(eps, h_hat, err) -> np.ndarray:
    """Effective fading power the receiver sees under aged CSI:
    eps^2 |h_hat|^2 + |e|^2."""
    return (np.asarray(eps) ** 2) * np.abs(h_hat) ** 2 + np.abs(err) ** 2


@dataclass
class FadingState:
    """Per-link, per-RB fading for one BWP.

    Shapes: gNB-visible arrays are (n_links, n_rbs); the CUE-to-VUE-receiver
    interference array is (n_cues, n_vues, n_rbs). `h_hat_*` always holds the
    previous TTI's realisation of the aged links.
    """

    eps_vue: np.ndarray          # (V,) correlation of the VUE pair link
    eps_cue_vue: np.ndarray      # (C, V) correlation of the CUE -> VUE rx link
    h_cue_gnb: np.ndarray        # (C, N) fresh each TTI
    h_vue_gnb: np.ndarray        # (V, N) fresh each TTI
    h_vue: np.ndarray            # (V, N) aged
    h_hat_vue: np.ndarray        # (V, N)
    h_cue_vue: np.ndarray        # (C, V, N) aged
    h_hat_cue_vue: np.ndarray    # (C, V, N)

    @classmethod
    def fresh(cls, n_cues: int, n_vues: int, n_rbs: int, eps: float, rng: np.random.Generator) -> "FadingState":
        if not abs(eps) <= 1.0:
            raise ValueError("|eps| must be <= 1")
        h_vue = draw_unit_cn(rng, (n_vues, n_rbs))
        h_cv = draw_unit_cn(rng, (n_cues, n_vues, n_rbs))
        return cls(
            eps_vue=np.full(n_vues, eps),
            eps_cue_vue=np.full((n_cues, n_vues), eps),
            h_cue_gnb=draw_unit_cn(rng, (n_cues, n_rbs)),
            h_vue_gnb=draw_unit_cn(rng, (n_vues, n_rbs)),
            h_vue=h_vue,
            h_hat_vue=h_vue.copy(),
            h_cue_vue=h_cv,
            h_hat_cue_vue=h_cv.copy(),
        )

    def vue_error(self) -> np.ndarray:
        """Realised CSI error of the VUE pair links this TTI."""
        return self.h_vue - self.eps_vue[:, None] * self.h_hat_vue

    def cue_vue_error(self) -> np.ndarray:
        return self.h_cue_vue - self.eps_cue_vue[:, :, None] * self.h_hat_cue_vue


def evolve_fading(state: FadingState, rng: np.random.Generator) -> FadingState:
    """Advance one TTI in place and return the state.

    gNB-visible links are redrawn fresh; device-to-device links follow the
    first-order Gauss-Markov recursion, which preserves the unit second moment.
    The draw order is fixed so the realisation stream depends only on the
    population sizes, never on scheduler decisions.
    """
    c, n = state.h_cue_gnb.shape
    v = state.h_vue.shape[0]
    state.h_cue_gnb = draw_unit_cn(rng, (c, n))
    state.h_vue_gnb = draw_unit_cn(rng, (v, n))

    state.h_hat_vue = state.h_vue
    e_v = draw_unit_cn(rng, (v, n)) * np.sqrt(1.0 - state.eps_vue[:, None] ** 2)
    state.h_vue = state.eps_vue[:, None] * state.h_hat_vue + e_v

    state.h_hat_cue_vue = state.h_cue_vue
    e_cv = draw_unit_cn(rng, (c, v, n)) * np.sqrt(1.0 - state.eps_cue_vue[:, :, None] ** 2)
    state.h_cue_vue = state.eps_cue_vue[:, :, None] * state.h_hat_cue_vue + e_cv
    return state


@dataclass(frozen=True)
class SinrInputs:
    """Everything one SINR evaluation needs for a single receiver.

    `own_fading_sq` / `interf_fading_sq` carry the realised fading powers per
    RB: |h|^2 for links the gNB sees perfectly, eps^2|h_hat|^2 + |e|^2 for aged
    links (see `aged_power_gain`). Interference arrays are (n_interferers,
    n_rbs); `pairing` is the 0/1 resource-sharing indicator per interferer.
    """

    p_own_mw: float
    alpha_own: float
    noise_mw: float
    own_fading_sq: np.ndarray
    pairing: np.ndarray = field(default_factory=lambda: np.zeros(0))
    p_interf_mw: np.ndarray = field(default_factory=lambda: np.zeros(0))
    alpha_interf: np.ndarray = field(default_factory=lambda: np.zeros(0))
    interf_fading_sq: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self):
        if self.p_own_mw < 0 or np.any(np.asarray(self.p_interf_mw) < 0):
            raise ValueError("transmit powers must be >= 0")
        if self.noise_mw <= 0:
            raise ValueError("noise power must be > 0")


def _sinr(inputs: SinrInputs, rb: int) -> float:
    signal = inputs.p_own_mw * inputs.alpha_own * float(inputs.own_fading_sq[rb])
    interference = 0.0
    if len(inputs.pairing):
        terms = (
            np.asarray(inputs.pairing)
            * np.asarray(inputs.p_interf_mw)
            * np.asarray(inputs.alpha_interf)
            * np.asarray(inputs.interf_fading_sq)[:, rb]
        )
        interference = float(np.sum(terms))
    return signal / (inputs.noise_mw + interference)


def cue_sinr(inputs: SinrInputs, rb: int) -> float:
    """Uplink SINR of a CUE in one RB: own signal over noise plus the paired
    VUE transmitters' leakage into the base station. Reduces to plain SNR with
    no pairing."""
    return _sinr(inputs, rb)


def vue_sinr(inputs: SinrInputs, rb: int) -> float:
    """Sidelink SINR of a VUE pair in one RB under aged CSI.

    Callers fold the aged-CSI structure into the fading powers via
    `aged_power_gain` for both the own link and the CUE interference terms.
    """
    return _sinr(inputs, rb)
