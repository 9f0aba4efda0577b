"""Per-TTI allocation algorithms.

Three schedulers share the uplink BWP-1:

* grahs_tti: greedy link-adapted RB allocation for cellular users, then
  matching-based pairing with sidelink pairs under power control, then a final
  per-RB viability recount before any sharing is committed.
* hrahs_tti: resource-chunk variant; one Hungarian pass assigns chunks to
  users, a second pairs users with sidelink pairs.
* ora_tti: dedicated-resource baseline; cellular and sidelink packets compete
  in one deadline-sorted queue, everyone transmits at full power, nothing is
  shared.

Best-effort users live in BWP-2 and are served by max-C/I (max_ci_tti).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, TYPE_CHECKING

import numpy as np

from .assignment import max_weight_matching
from .link_adaptation import MAX_RBS_PER_PACKET, min_rb_allocation, rbs_needed
from .power_control import solve_pair_power_batch
from .traffic import Packet, TrafficBuffers

if TYPE_CHECKING:
    from .world import World


@dataclass(frozen=True)
class SchedulerConfig:
    c_t: int = 8                    # max users scheduled per TTI
    rc_size: int = 4                # RBs per resource chunk
    n_rc: int = 8                   # resource chunks in BWP-1
    cue_min_se: float = 0.5         # bps/Hz floor for a paired CUE (r_0)
    vue_sinr_floor_db: float = 5.0  # coverage SINR threshold (gamma_0)
    vue_outage_cap: float = 1e-3    # outage probability cap (p_0)
    bler_cue: float = 0.1
    bler_vue: float = 0.01          # the sidelink threshold column shipped with the table
    cue_power_dbm: float = 23.0
    vue_power_dbm: float = 23.0
    bue_power_dbm: float = 23.0
    bwp2_bandwidth_mhz: float = 3.92
    single_rb_only: bool = False    # restrict CUEs to single-RB grants (ablation)

    def __post_init__(self):
        if self.c_t < 1 or self.rc_size < 1 or self.n_rc < 1:
            raise ValueError("c_t, rc_size and n_rc must be >= 1")
        if not 0 < self.vue_outage_cap < 1:
            raise ValueError("vue_outage_cap must lie in (0, 1)")

    @property
    def n_rbs(self) -> int:
        return self.n_rc * self.rc_size

    @property
    def vue_sinr_floor(self) -> float:
        return 10.0 ** (self.vue_sinr_floor_db / 10.0)


@dataclass
class ServedCue:
    packet: Packet
    rb_ids: Tuple[int, ...]
    occupied_rbs: int
    paired_vue: Optional[int]
    p_c_mw: float
    p_v_mw: float
    rate_bps: float


@dataclass
class ServedVue:
    packet: Packet
    rb_ids: Tuple[int, ...]
    paired_cue: Optional[int]
    p_v_mw: float
    sinr_sum: float


@dataclass
class AllocationResult:
    """Outcome of one TTI: who got which RBs, pairings, powers, service."""

    rho: Dict[int, Tuple[int, ...]] = field(default_factory=dict)   # CUE -> RBs
    eta: Dict[int, int] = field(default_factory=dict)               # CUE -> RC (chunked mode)
    pairing: Dict[int, int] = field(default_factory=dict)           # CUE -> VUE
    pair_mean_se: Dict[int, float] = field(default_factory=dict)    # recomputed per-RB SE of pairs
    powers: Dict[int, Tuple[float, float]] = field(default_factory=dict)
    served_cues: List[ServedCue] = field(default_factory=list)
    served_vues: List[ServedVue] = field(default_factory=list)
    vue_rbs: Dict[int, Tuple[int, ...]] = field(default_factory=dict)  # ORA-dedicated / shared subset
    deferred_vues: List[int] = field(default_factory=list)
    scheduled_users: int = 0
    final_check_improved: int = 0   # recount needed fewer RBs than allocated
    tti_rate_bps: float = 0.0

    def validate(self, cfg: SchedulerConfig, shared_cap: bool = False) -> None:
        """Raise AssertionError on any structural violation (test hook)."""
        seen = set()
        for rbs in self.rho.values():
            for rb in rbs:
                assert 0 <= rb < cfg.n_rbs, f"RB {rb} out of range"
                assert rb not in seen, f"RB {rb} assigned twice"
                seen.add(rb)
        if shared_cap:
            for rbs in self.vue_rbs.values():
                for rb in rbs:
                    assert rb not in seen, f"RB {rb} assigned twice (dedicated VUE)"
                    seen.add(rb)
        else:
            for c, v in self.pairing.items():
                assert set(self.vue_rbs.get(v, ())) <= set(self.rho[c]), "shared RBs outside the CUE grant"
        assert len(set(self.pairing.keys())) == len(self.pairing), "CUE paired twice"
        assert len(set(self.pairing.values())) == len(self.pairing), "VUE paired twice"
        assert self.scheduled_users <= cfg.c_t, "per-TTI user cap exceeded"
        for c in self.pairing:
            assert self.pair_mean_se[c] >= cfg.cue_min_se - 1e-12, "paired CUE under the SE floor"


def _first_packet_per_owner(buffer, t_ms: float, tti_ms: float, limit: Optional[int] = None):
    picked = []
    seen = set()
    for pkt in buffer.pending(t_ms, tti_ms):
        if pkt.owner in seen:
            continue
        seen.add(pkt.owner)
        picked.append(pkt)
        if limit is not None and len(picked) >= limit:
            break
    return picked


@dataclass
class _ScheduledCandidate:
    packet: Packet
    rb_ids: Tuple[int, ...]
    n_c: int          # RB budget the sharing check compares against
    rc: Optional[int] = None


def _share_stage(world: "World", buffers: TrafficBuffers, cfg: SchedulerConfig,
                 scheduled: List[_ScheduledCandidate], result: AllocationResult,
                 chunked: bool) -> None:
    """Pairing stage shared by the two underlay schedulers.

    Solves the pair power allocation for every (scheduled CUE, buffered VUE)
    combination, recomputes the CUE rate at those powers, forbids pairs whose
    per-RB spectral efficiency falls under the floor, matches with the
    Hungarian solver, then re-verifies each match against realised SINRs
    before committing the share.
    """
    t = world.t_ms
    tti = world.grid_bwp1.tti_ms
    vue_cands = _first_packet_per_owner(buffers.vue, t, tti)
    n_s, n_v = len(scheduled), len(vue_cands)

    pair_p: Dict[Tuple[int, int], Tuple[float, float]] = {}
    weights = np.full((n_s, n_v), -np.inf)
    if n_s and n_v:
        cue_ids, vue_ids, rb_sets = [], [], []
        for s in scheduled:
            for cand in vue_cands:
                cue_ids.append(s.packet.owner)
                vue_ids.append(cand.owner)
                rb_sets.append(s.rb_ids)
        batch = world.pair_params_batch(cue_ids, vue_ids, rb_sets)
        p_c, p_v, case = solve_pair_power_batch(batch)
        k = 0
        for i, s in enumerate(scheduled):
            feas = case[k:k + n_v] > 0
            rates = world.pair_cue_rates(
                s.packet.owner,
                [cand.owner for cand in vue_cands],
                s.rb_ids,
                p_c[k:k + n_v],
                p_v[k:k + n_v],
            )
            ok = feas & (rates / len(s.rb_ids) >= cfg.cue_min_se)
            weights[i, ok] = rates[ok]
            for j, cand in enumerate(vue_cands):
                if ok[j]:
                    pair_p[(i, j)] = (float(p_c[k + j]), float(p_v[k + j]))
            k += n_v

    if not (n_s and n_v):
        for s in scheduled:
            result.powers[s.packet.owner] = (world.p_cue_mw, 0.0)
        return

    matching = max_weight_matching(weights)
    matched = dict(matching.pairs)

    for i, s in enumerate(scheduled):
        c = s.packet.owner
        j = matched.get(i)
        if j is None:
            result.powers[c] = (world.p_cue_mw, 0.0)
            continue
        v_pkt = vue_cands[j]
        v = v_pkt.owner
        p_c_mw, p_v_mw = pair_p[(i, j)]
        rbs = np.asarray(s.rb_ids)
        sinr_c = world.realized_cue_sinr(c, rbs, v, p_c_mw, p_v_mw)
        sinr_v = world.realized_vue_sinr(v, rbs, c, p_c_mw, p_v_mw)
        snr_c_db = 10.0 * np.log10(sinr_c)
        snr_v_db = 10.0 * np.log10(sinr_v)
        alloc_v = min_rb_allocation(
            snr_v_db, v_pkt.size_bits, cfg.bler_vue, world.mcs_table,
            rb_ids=rbs, max_rbs=s.n_c,
        )
        ok = alloc_v is not None
        if not chunked:
            alloc_c = min_rb_allocation(
                snr_c_db, s.packet.size_bits, cfg.bler_cue, world.mcs_table,
                rb_ids=rbs, max_rbs=len(s.rb_ids),
            )
            if alloc_c is None or alloc_c.n_rbs != len(s.rb_ids):
                if alloc_c is not None and alloc_c.n_rbs < len(s.rb_ids):
                    result.final_check_improved += 1
                ok = False
        if ok:
            result.pairing[c] = v
            result.pair_mean_se[c] = float(np.mean(np.log2(1.0 + sinr_c)))
            result.powers[c] = (p_c_mw, p_v_mw)
            result.vue_rbs[v] = alloc_v.rb_ids
            chosen = [int(np.nonzero(rbs == rb)[0][0]) for rb in alloc_v.rb_ids]
            buffers.vue.mark_served(v_pkt, t + tti)
            result.served_vues.append(ServedVue(
                packet=v_pkt,
                rb_ids=alloc_v.rb_ids,
                paired_cue=c,
                p_v_mw=p_v_mw,
                sinr_sum=float(np.sum(sinr_v[chosen])),
            ))
        else:
            result.deferred_vues.append(v)
            result.powers[c] = (world.p_cue_mw, 0.0)


def _finalize_cues(world: "World", buffers: TrafficBuffers, cfg: SchedulerConfig,
                   scheduled: List[_ScheduledCandidate], result: AllocationResult,
                   occupied_override: Optional[int] = None) -> None:
    """Serve every scheduled CUE packet and record its realised rate."""
    t = world.t_ms
    tti = world.grid_bwp1.tti_ms
    bw = world.grid_bwp1.rb_bandwidth_hz
    for s in scheduled:
        c = s.packet.owner
        p_c_mw, p_v_mw = result.powers.get(c, (world.p_cue_mw, 0.0))
        v = result.pairing.get(c)
        rbs = np.asarray(s.rb_ids)
        if v is not None:
            shared = np.isin(rbs, np.asarray(result.vue_rbs[v]))
            sinr = np.where(
                shared,
                world.realized_cue_sinr(c, rbs, v, p_c_mw, p_v_mw),
                world.realized_cue_sinr(c, rbs, None, p_c_mw, 0.0),
            )
        else:
            sinr = world.realized_cue_sinr(c, rbs, None, p_c_mw, 0.0)
        rate = float(np.sum(bw * np.log2(1.0 + sinr)))
        buffers.cue.mark_served(s.packet, t + tti)
        result.served_cues.append(ServedCue(
            packet=s.packet,
            rb_ids=s.rb_ids,
            occupied_rbs=occupied_override or len(s.rb_ids),
            paired_vue=v,
            p_c_mw=p_c_mw,
            p_v_mw=p_v_mw if v is not None else 0.0,
            rate_bps=rate,
        ))
        result.tti_rate_bps += rate


def grahs_tti(world: "World", buffers: TrafficBuffers, cfg: SchedulerConfig) -> AllocationResult:
    """Greedy link-adapted allocation with matching-based resource sharing."""
    result = AllocationResult()
    t = world.t_ms
    tti = world.grid_bwp1.tti_ms
    free = np.ones(cfg.n_rbs, dtype=bool)
    scheduled: List[_ScheduledCandidate] = []
    owners = set()
    max_rbs = 1 if cfg.single_rb_only else min(MAX_RBS_PER_PACKET, cfg.n_rbs)

    for pkt in buffers.cue.pending(t, tti):
        if len(scheduled) >= cfg.c_t or not free.any():
            break
        if pkt.owner in owners:
            continue
        free_ids = np.nonzero(free)[0]
        snr = world.cue_snr_db(pkt.owner)[free_ids]
        alloc = min_rb_allocation(snr, pkt.size_bits, cfg.bler_cue, world.mcs_table,
                                  rb_ids=free_ids, max_rbs=max_rbs)
        if alloc is None:
            continue
        free[list(alloc.rb_ids)] = False
        owners.add(pkt.owner)
        scheduled.append(_ScheduledCandidate(pkt, alloc.rb_ids, n_c=alloc.n_rbs))
        result.rho[pkt.owner] = alloc.rb_ids

    result.scheduled_users = len(scheduled)
    _share_stage(world, buffers, cfg, scheduled, result, chunked=False)
    _finalize_cues(world, buffers, cfg, scheduled, result)
    return result


def hrahs_tti(world: "World", buffers: TrafficBuffers, cfg: SchedulerConfig) -> AllocationResult:
    """Chunked allocation: Hungarian users-to-chunks, then Hungarian pairing."""
    if cfg.c_t > cfg.n_rc:
        raise ValueError("chunked scheduling needs c_t <= n_rc")
    result = AllocationResult()
    t = world.t_ms
    tti = world.grid_bwp1.tti_ms
    cands = _first_packet_per_owner(buffers.cue, t, tti, limit=cfg.c_t)

    scheduled: List[_ScheduledCandidate] = []
    if cands:
        weights = np.full((len(cands), cfg.n_rc), -np.inf)
        fits = {}
        for i, pkt in enumerate(cands):
            snr_db = world.rc_mean_snr_db(pkt.owner)
            mcs = world.mcs_table.mcs_indices(snr_db, cfg.bler_cue)
            se = world.mcs_table.se_for_mcs(mcs)
            for j in range(cfg.n_rc):
                if mcs[j] < 1:
                    continue
                if rbs_needed(pkt.size_bits, se[j]) > cfg.rc_size:
                    continue
                weights[i, j] = np.log2(1.0 + 10.0 ** (snr_db[j] / 10.0))
                fits[(i, j)] = int(mcs[j])
        matching = max_weight_matching(weights)
        for i, j in matching.pairs:
            pkt = cands[i]
            rb_ids = tuple(range(j * cfg.rc_size, (j + 1) * cfg.rc_size))
            scheduled.append(_ScheduledCandidate(pkt, rb_ids, n_c=cfg.rc_size, rc=j))
            result.rho[pkt.owner] = rb_ids
            result.eta[pkt.owner] = j

    result.scheduled_users = len(scheduled)
    _share_stage(world, buffers, cfg, scheduled, result, chunked=True)
    _finalize_cues(world, buffers, cfg, scheduled, result, occupied_override=cfg.rc_size)
    return result


def ora_tti(world: "World", buffers: TrafficBuffers, cfg: SchedulerConfig) -> AllocationResult:
    """Dedicated-resource baseline: one deadline-sorted queue, no sharing, no
    power control; the per-TTI user cap covers cellular and sidelink packets
    together."""
    result = AllocationResult()
    t = world.t_ms
    tti = world.grid_bwp1.tti_ms
    bw = world.grid_bwp1.rb_bandwidth_hz
    free = np.ones(cfg.n_rbs, dtype=bool)
    served = 0
    owners = set()
    merged = heapq.merge(buffers.cue.pending(t, tti), buffers.vue.pending(t, tti),
                         key=lambda p: p.sort_key)
    for pkt in merged:
        if served >= cfg.c_t or not free.any():
            break
        key = (pkt.kind, pkt.owner)
        if key in owners:
            continue
        free_ids = np.nonzero(free)[0]
        if pkt.kind == "cue":
            snr = world.cue_snr_db(pkt.owner)[free_ids]
            bler = cfg.bler_cue
        else:
            snr = world.vue_link_snr_db(pkt.owner)[free_ids]
            bler = cfg.bler_vue
        alloc = min_rb_allocation(snr, pkt.size_bits, bler, world.mcs_table,
                                  rb_ids=free_ids, max_rbs=min(MAX_RBS_PER_PACKET, cfg.n_rbs))
        if alloc is None:
            continue
        free[list(alloc.rb_ids)] = False
        owners.add(key)
        served += 1
        rbs = np.asarray(alloc.rb_ids)
        if pkt.kind == "cue":
            sinr = world.realized_cue_sinr(pkt.owner, rbs, None, world.p_cue_mw, 0.0)
            rate = float(np.sum(bw * np.log2(1.0 + sinr)))
            buffers.cue.mark_served(pkt, t + tti)
            result.rho[pkt.owner] = alloc.rb_ids
            result.powers[pkt.owner] = (world.p_cue_mw, 0.0)
            result.served_cues.append(ServedCue(pkt, alloc.rb_ids, alloc.n_rbs, None,
                                                world.p_cue_mw, 0.0, rate))
            result.tti_rate_bps += rate
        else:
            sinr = world.realized_vue_sinr(pkt.owner, rbs, None, 0.0, world.p_vue_mw)
            buffers.vue.mark_served(pkt, t + tti)
            result.vue_rbs[pkt.owner] = alloc.rb_ids
            result.served_vues.append(ServedVue(pkt, alloc.rb_ids, None, world.p_vue_mw,
                                                float(np.sum(sinr))))
    result.scheduled_users = served
    return result


SCHEDULERS = {"grahs": grahs_tti, "hrahs": hrahs_tti, "ora": ora_tti}


@dataclass
class BueAllocation:
    rb_owner: np.ndarray      # (N2,) BUE index per RB
    per_rb_rate_bps: np.ndarray
    total_rate_bps: float


def max_ci_tti(world: "World") -> Optional[BueAllocation]:
    """Assign every BWP-2 RB to the best-effort user with the strongest
    channel gain on it; full-buffer users always have data."""
    if world.scen.num_bues == 0 or world.n_rbs_bwp2 == 0:
        return None
    gains = world.bue_rb_gains()               # (M, N2)
    owner = np.argmax(gains, axis=0)
    best = gains[owner, np.arange(gains.shape[1])]
    snr = world.p_bue_mw * best / world.noise_gnb_mw
    per_rb = world.grid_bwp2.rb_bandwidth_hz * np.log2(1.0 + snr)
    return BueAllocation(rb_owner=owner, per_rb_rate_bps=per_rb,
                         total_rate_bps=float(per_rb.sum()))
