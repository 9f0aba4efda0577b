"""QoS accounting: loss ratios, delays, rates, outage, and capacity logic.

One MetricsRecorder accumulates a single run; finalisation produces per-user
stats and the CSV rows the plotting pipeline consumes. A real-time user is
satisfied when its packet loss ratio stays under 2% and its mean packet delay
within the TTL; the cell capacity is the largest user count at which at least
95% of the (traffic-generating) users are satisfied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np

PLR_MAX = 0.02
SATISFIED_FRACTION = 0.95


@dataclass
class UserStats:
    generated: int = 0
    served: int = 0
    dropped: int = 0
    delay_samples: List[float] = field(default_factory=list)
    rb_samples: List[int] = field(default_factory=list)

    @property
    def pending(self) -> int:
        return self.generated - self.served - self.dropped

    @property
    def plr(self) -> float:
        return self.dropped / self.generated if self.generated else 0.0

    @property
    def mean_delay_ms(self) -> float:
        return float(np.mean(self.delay_samples)) if self.delay_samples else 0.0


def is_satisfied(stats: UserStats, ttl_ms: float) -> bool:
    """PLR under 2% and mean delay within the deadline."""
    if stats.generated <= 0:
        raise ValueError("satisfaction is undefined for a user with no traffic")
    return stats.plr < PLR_MAX and stats.mean_delay_ms <= ttl_ms


def vue_outage(expired: int, below_floor: int, delivered_ok: int) -> float:
    """Fraction of sidelink packets not delivered above the SINR floor within
    their TTL; both expiry and under-floor delivery count."""
    total = expired + below_floor + delivered_ok
    return (expired + below_floor) / total if total else 0.0


def sum_rate(tti_rate_samples) -> float:
    """Time-averaged instantaneous sum rate (bps) over the recorded TTIs."""
    arr = np.asarray(list(tti_rate_samples), dtype=float)
    return float(arr.mean()) if arr.size else 0.0


def cdf_points(samples) -> List[Tuple[float, float]]:
    """Empirical CDF as (value, P[X <= value]) pairs; monotone, ends at 1."""
    arr = np.sort(np.asarray(list(samples), dtype=float))
    if arr.size == 0:
        return []
    values, counts = np.unique(arr, return_counts=True)
    cdf = np.cumsum(counts) / arr.size
    return list(zip(values.tolist(), cdf.tolist()))


class ConservationError(AssertionError):
    pass


class MetricsRecorder:
    """Event sink for one simulation run."""

    def __init__(self, num_cues: int, num_vues: int, ttl_cue_ms: float, ttl_vue_ms: float,
                 sinr_floor_lin: float):
        self.cue_stats = [UserStats() for _ in range(num_cues)]
        self.vue_stats = [UserStats() for _ in range(num_vues)]
        self.ttl = {"cue": ttl_cue_ms, "vue": ttl_vue_ms}
        self.sinr_floor = sinr_floor_lin
        self.vue_expired = 0
        self.vue_below_floor = 0
        self.vue_delivered_ok = 0
        self.cue_tti_rates: List[float] = []
        self.bue_tti_rates: List[float] = []
        self.rb_total_per_tti: List[int] = []
        self.final_check_improved = 0
        self.invariant_violations: List[str] = []

    def _stats(self, kind: str, owner: int) -> UserStats:
        return (self.cue_stats if kind == "cue" else self.vue_stats)[owner]

    def on_generated(self, pkt) -> None:
        self._stats(pkt.kind, pkt.owner).generated += 1

    def on_dropped(self, pkt) -> None:
        self._stats(pkt.kind, pkt.owner).dropped += 1
        if pkt.kind == "vue":
            self.vue_expired += 1

    def on_cue_served(self, served) -> None:
        st = self.cue_stats[served.packet.owner]
        st.served += 1
        st.delay_samples.append(served.packet.t_served_ms - served.packet.t_gen_ms)
        st.rb_samples.append(served.occupied_rbs)

    def on_vue_served(self, served) -> None:
        st = self.vue_stats[served.packet.owner]
        st.served += 1
        st.delay_samples.append(served.packet.t_served_ms - served.packet.t_gen_ms)
        st.rb_samples.append(len(served.rb_ids))
        if served.sinr_sum >= self.sinr_floor:
            self.vue_delivered_ok += 1
        else:
            self.vue_below_floor += 1

    def on_tti(self, alloc) -> None:
        self.cue_tti_rates.append(alloc.tti_rate_bps)
        self.rb_total_per_tti.append(sum(len(r) for r in alloc.rho.values()))
        self.final_check_improved += alloc.final_check_improved

    def on_bue_tti(self, total_rate_bps: float) -> None:
        self.bue_tti_rates.append(total_rate_bps)

    def check_conservation(self, buffers) -> None:
        """generated == served + dropped + live, per user population."""
        for label, stats, buf in (("cue", self.cue_stats, buffers.cue),
                                  ("vue", self.vue_stats, buffers.vue)):
            gen = sum(s.generated for s in stats)
            srv = sum(s.served for s in stats)
            drp = sum(s.dropped for s in stats)
            if gen != srv + drp + len(buf):
                msg = f"{label}: generated {gen} != served {srv} + dropped {drp} + buffered {len(buf)}"
                self.invariant_violations.append(msg)
                raise ConservationError(msg)

    # -- summaries ---------------------------------------------------------

    def satisfaction(self, kind: str) -> Tuple[int, int]:
        """(satisfied, counted) for the population; silent users are excluded
        from the census."""
        stats = self.cue_stats if kind == "cue" else self.vue_stats
        counted = satisfied = 0
        for st in stats:
            if st.generated == 0:
                continue
            counted += 1
            if is_satisfied(st, self.ttl[kind]):
                satisfied += 1
        return satisfied, counted

    def outage_probability(self) -> float:
        return vue_outage(self.vue_expired, self.vue_below_floor, self.vue_delivered_ok)

    def kind_totals(self, kind: str) -> Dict[str, int]:
        stats = self.cue_stats if kind == "cue" else self.vue_stats
        return {
            "generated": sum(s.generated for s in stats),
            "served": sum(s.served for s in stats),
            "dropped": sum(s.dropped for s in stats),
        }

    def delays(self, kind: str) -> List[float]:
        stats = self.cue_stats if kind == "cue" else self.vue_stats
        out: List[float] = []
        for st in stats:
            out.extend(st.delay_samples)
        return out

    def per_user_rbs(self, kind: str) -> List[int]:
        stats = self.cue_stats if kind == "cue" else self.vue_stats
        out: List[int] = []
        for st in stats:
            out.extend(st.rb_samples)
        return out


@dataclass
class CapacityResult:
    capacity: int
    satisfied_fraction_at_capacity: float
    met_at_minimum: bool            # False flags "criterion unmet even at range min"
    monotone_consistent: bool
    probes: List[Tuple[int, float]] = field(default_factory=list)


def capacity_search(evaluate: Callable[[int], float], cue_range: Tuple[int, int],
                    step: int = 1, threshold: float = SATISFIED_FRACTION) -> CapacityResult:
    """Largest user count in [lo, hi] whose satisfied fraction stays >= the
    threshold, by bisection on a stepped grid.

    `evaluate(n)` returns the satisfied fraction at load n (averaged over the
    caller's seeds). A +step neighbour probe of the result spot-checks the
    monotonicity assumption the bisection relies on.
    """
    lo, hi = cue_range
    if lo > hi or step < 1:
        raise ValueError("invalid search range")
    grid = list(range(lo, hi + 1, step))
    probes: List[Tuple[int, float]] = []

    def probe(n: int) -> float:
        frac = evaluate(n)
        probes.append((n, frac))
        return frac

    f_lo = probe(grid[0])
    if f_lo < threshold:
        return CapacityResult(grid[0], f_lo, False, True, probes)
    f_hi = probe(grid[-1])
    if f_hi >= threshold:
        return CapacityResult(grid[-1], f_hi, True, True, probes)
    # invariant: grid[a] passes, grid[b] fails
    a, b = 0, len(grid) - 1
    f_a = f_lo
    while b - a > 1:
        mid = (a + b) // 2
        f_mid = probe(grid[mid])
        if f_mid >= threshold:
            a, f_a = mid, f_mid
        else:
            b = mid
    neighbour_ok = True
    if a + 1 < len(grid):
        f_next = next((f for n, f in probes if n == grid[a + 1]), None)
        if f_next is None:
            f_next = probe(grid[a + 1])
        neighbour_ok = f_next < threshold
    return CapacityResult(grid[a], f_a, True, neighbour_ok, probes)
