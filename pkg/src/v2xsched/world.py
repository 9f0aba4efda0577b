"""Per-run simulation state: one drop, its gains, and the evolving channel.

Bundles what a scheduler needs each TTI and keeps the split between what the
scheduler may know (fresh gNB-side fading, aged estimates and correlation for
device-to-device links) and what only the world knows (the realised CSI
errors). RNG streams are split per concern so toggling one feature never
shifts another's sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import channel, scenario
from .dbunits import dbm_to_mw
from .link_adaptation import DEFAULT_TABLE, McsTable, RbGrid
from .power_control import PairParamsBatch
from .schedulers import SchedulerConfig
from .traffic import TrafficConfig


@dataclass
class World:
    scen: scenario.ScenarioConfig
    traffic_cfg: TrafficConfig
    sched: SchedulerConfig
    drop: scenario.UserDrop
    gains: scenario.LargeScaleGains
    fading: channel.FadingState
    grid_bwp1: RbGrid
    grid_bwp2: RbGrid
    mcs_table: McsTable
    noise_gnb_mw: float
    noise_vue_mw: float
    p_cue_mw: float
    p_vue_mw: float
    p_bue_mw: float
    eps: float
    rng_fading_bwp1: np.random.Generator
    rng_fading_bwp2: np.random.Generator
    bue_fading: Optional[np.ndarray] = None
    n_rbs_bwp2: int = 0
    t_ms: float = 0.0  # start of the current TTI, advanced by the runner

    def evolve_tti(self) -> None:
        channel.evolve_fading(self.fading, self.rng_fading_bwp1)

    def draw_bwp2(self) -> None:
        m = self.scen.num_bues
        self.bue_fading = channel.draw_unit_cn(self.rng_fading_bwp2, (m, self.n_rbs_bwp2))

    # -- scheduler-visible views ------------------------------------------

    def cue_snr_db(self, c: int) -> np.ndarray:
        """Interference-free per-RB SNR of a CUE at full power (dB)."""
        g = self.p_cue_mw * self.gains.cue_gnb[c] * np.abs(self.fading.h_cue_gnb[c]) ** 2
        return 10.0 * np.log10(g / self.noise_gnb_mw)

    def rc_mean_snr_db(self, c: int) -> np.ndarray:
        """Per-chunk SNR from the arithmetic mean of the member RBs' linear
        fading powers."""
        h_sq = np.abs(self.fading.h_cue_gnb[c]) ** 2
        mean = h_sq.reshape(self.sched.n_rc, self.sched.rc_size).mean(axis=1)
        g = self.p_cue_mw * self.gains.cue_gnb[c] * mean
        return 10.0 * np.log10(g / self.noise_gnb_mw)

    def vue_link_snr_db(self, v: int) -> np.ndarray:
        """Per-RB sidelink SNR of a pair under realised aged fading (dB)."""
        eff = channel.aged_power_gain(
            self.fading.eps_vue[v], self.fading.h_hat_vue[v], self.fading.vue_error()[v]
        )
        g = self.p_vue_mw * self.gains.vue[v] * eff
        return 10.0 * np.log10(g / self.noise_vue_mw)

    def pair_params_batch(self, cue_ids, vue_ids, rb_sets) -> PairParamsBatch:
        """Solver inputs for candidate (CUE, VUE) pairs.

        The per-RB estimates are scalarised by averaging |h_hat|^2 over the
        CUE's allocated RBs (power allocation is per user, not per RB).
        """
        n = len(cue_ids)
        h_hat_v_sq = np.empty(n)
        h_hat_cv_sq = np.empty(n)
        for k, (c, v, rbs) in enumerate(zip(cue_ids, vue_ids, rb_sets)):
            rbs = np.asarray(rbs)
            h_hat_v_sq[k] = np.mean(np.abs(self.fading.h_hat_vue[v, rbs]) ** 2)
            h_hat_cv_sq[k] = np.mean(np.abs(self.fading.h_hat_cue_vue[c, v, rbs]) ** 2)
        return PairParamsBatch(
            alpha_v=self.gains.vue[np.asarray(vue_ids, dtype=int)],
            alpha_cv=self.gains.cue_vue[np.asarray(cue_ids, dtype=int), np.asarray(vue_ids, dtype=int)],
            eps_v=np.full(n, self.eps),
            eps_cv=np.full(n, self.eps),
            h_hat_v_sq=h_hat_v_sq,
            h_hat_cv_sq=h_hat_cv_sq,
            noise_mw=np.full(n, self.noise_vue_mw),
            sinr_floor=np.full(n, self.sched.vue_sinr_floor),
            outage_cap=np.full(n, self.sched.vue_outage_cap),
            p_c_max_mw=np.full(n, self.p_cue_mw),
            p_v_max_mw=np.full(n, self.p_vue_mw),
        )

    def pair_cue_rates(self, c: int, vue_ids, rb_set, p_c: np.ndarray, p_v: np.ndarray) -> np.ndarray:
        """Recomputed CUE rate (sum over its RBs of log2(1+SINR)) against each
        candidate VUE at the solved powers. Shape (n_vues,)."""
        rbs = np.asarray(rb_set)
        sig_h = np.abs(self.fading.h_cue_gnb[c, rbs]) ** 2
        signal = p_c[:, None] * self.gains.cue_gnb[c] * sig_h[None, :]
        interf_h = np.abs(self.fading.h_vue_gnb[np.asarray(vue_ids, dtype=int)][:, rbs]) ** 2
        interf = p_v[:, None] * self.gains.vue_gnb[np.asarray(vue_ids, dtype=int), None] * interf_h
        sinr = signal / (self.noise_gnb_mw + interf)
        return np.sum(np.log2(1.0 + sinr), axis=1)

    # -- realised-world views (final checks, metrics) ----------------------

    def realized_cue_sinr(self, c: int, rb_set, v: Optional[int], p_c: float, p_v: float) -> np.ndarray:
        rbs = np.asarray(rb_set)
        signal = p_c * self.gains.cue_gnb[c] * np.abs(self.fading.h_cue_gnb[c, rbs]) ** 2
        interf = 0.0
        if v is not None:
            interf = p_v * self.gains.vue_gnb[v] * np.abs(self.fading.h_vue_gnb[v, rbs]) ** 2
        return signal / (self.noise_gnb_mw + interf)

    def realized_vue_sinr(self, v: int, rb_set, c: Optional[int], p_c: float, p_v: float) -> np.ndarray:
        rbs = np.asarray(rb_set)
        eps_v = self.fading.eps_vue[v]
        h_hat = self.fading.h_hat_vue[v, rbs]
        err = self.fading.h_vue[v, rbs] - eps_v * h_hat
        signal = p_v * self.gains.vue[v] * channel.aged_power_gain(eps_v, h_hat, err)
        interf = 0.0
        if c is not None:
            eps_cv = self.fading.eps_cue_vue[c, v]
            h_hat_cv = self.fading.h_hat_cue_vue[c, v, rbs]
            err_cv = self.fading.h_cue_vue[c, v, rbs] - eps_cv * h_hat_cv
            interf = p_c * self.gains.cue_vue[c, v] * channel.aged_power_gain(eps_cv, h_hat_cv, err_cv)
        return signal / (self.noise_vue_mw + interf)

    def bue_rb_gains(self) -> np.ndarray:
        """(M, N2) linear channel gains of the best-effort users this TTI."""
        return self.gains.bue_gnb[:, None] * np.abs(self.bue_fading) ** 2


def build_world(
    scen: scenario.ScenarioConfig,
    traffic_cfg: TrafficConfig,
    sched: SchedulerConfig,
    seed: int,
    mcs_table: Optional[McsTable] = None,
) -> World:
    """Assemble the immutable drop and the initial channel state for a seed."""
    ss = np.random.SeedSequence(seed)
    ss_drop, ss_fad1, ss_fad2, _ss_traffic = ss.spawn(4)
    rng_drop = np.random.default_rng(ss_drop)
    drop = scenario.drop_users(scen, rng_drop)
    gains = scenario.build_gains(scen, drop, rng_drop)

    grid1 = RbGrid(mu=3)
    grid2 = RbGrid(mu=0)
    eps = channel.jakes_epsilon(scen.vehicle_speed_mps, scen.carrier_bwp1_ghz * 1e9, grid1.tti_ms * 1e-3)
    rng_fad1 = np.random.default_rng(ss_fad1)
    fading = channel.FadingState.fresh(scen.num_cues, scen.num_vue_pairs, sched.n_rbs, eps, rng_fad1)

    return World(
        scen=scen,
        traffic_cfg=traffic_cfg,
        sched=sched,
        drop=drop,
        gains=gains,
        fading=fading,
        grid_bwp1=grid1,
        grid_bwp2=grid2,
        mcs_table=mcs_table or DEFAULT_TABLE,
        noise_gnb_mw=scenario.noise_power_mw(scen, "gnb"),
        noise_vue_mw=scenario.noise_power_mw(scen, "vehicle"),
        p_cue_mw=dbm_to_mw(sched.cue_power_dbm),
        p_vue_mw=dbm_to_mw(sched.vue_power_dbm),
        p_bue_mw=dbm_to_mw(sched.bue_power_dbm),
        eps=eps,
        rng_fading_bwp1=rng_fad1,
        rng_fading_bwp2=np.random.default_rng(ss_fad2),
        n_rbs_bwp2=int(sched.bwp2_bandwidth_mhz * 1e6 // grid2.rb_bandwidth_hz),
    )


def traffic_rng(seed: int) -> np.random.Generator:
    """The traffic stream companion to build_world's channel streams."""
    ss = np.random.SeedSequence(seed)
    _d, _f1, _f2, ss_traffic = ss.spawn(4)
    return np.random.default_rng(ss_traffic)
