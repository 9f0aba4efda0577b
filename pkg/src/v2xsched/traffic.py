"""Packet generation, deadline-sorted buffers, and TTL expiry.

CUE packets (400 bits, 50 ms TTL) arrive as an aggregate Poisson stream with
mean num_cues/20 per millisecond, owners drawn without repetition within a
batch; a strict per-user periodic mode is available as a config switch. Every
VUE pair emits one 80-bit packet (10 ms TTL) on the 10 ms grid. Best-effort
users are full-buffer and never enter these queues.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

CUE_PACKET_BITS = 400
VUE_PACKET_BITS = 80
CUE_TTL_MS = 50.0
VUE_TTL_MS = 10.0
CUE_PERIOD_MS = 20.0
VUE_PERIOD_MS = 10.0


@dataclass(frozen=True)
class TrafficConfig:
    cue_packet_bits: int = CUE_PACKET_BITS
    vue_packet_bits: int = VUE_PACKET_BITS
    cue_ttl_ms: float = CUE_TTL_MS
    vue_ttl_ms: float = VUE_TTL_MS
    cue_period_ms: float = CUE_PERIOD_MS
    vue_period_ms: float = VUE_PERIOD_MS
    cue_arrivals: str = "poisson"  # or "periodic"

    def __post_init__(self):
        if self.cue_arrivals not in ("poisson", "periodic"):
            raise ValueError("cue_arrivals must be 'poisson' or 'periodic'")


@dataclass
class Packet:
    kind: str        # "cue" | "vue"
    owner: int
    size_bits: int
    t_gen_ms: float
    ttl_ms: float
    seq: int
    t_served_ms: Optional[float] = None

    @property
    def deadline_ms(self) -> float:
        return self.t_gen_ms + self.ttl_ms

    @property
    def sort_key(self):
        # remaining TTL ascending == deadline ascending; ties broken by
        # earlier generation, then user identity, then arrival sequence
        return (self.deadline_ms, self.t_gen_ms, self.kind, self.owner, self.seq)


class TtlBuffer:
    """Packet queue kept sorted by deadline (earliest first).

    Serving marks the packet and removes it lazily; expiry sweeps the sorted
    prefix. Iteration order is the pop order.
    """

    def __init__(self):
        self._items: List[Packet] = []
        self._keys: List[tuple] = []
        self._live = 0

    def __len__(self) -> int:
        return self._live

    def push(self, pkt: Packet) -> None:
        key = pkt.sort_key
        idx = bisect.bisect(self._keys, key)
        self._keys.insert(idx, key)
        self._items.insert(idx, pkt)
        self._live += 1

    def mark_served(self, pkt: Packet, t_served_ms: float) -> None:
        if pkt.t_served_ms is not None:
            raise ValueError("packet already served")
        pkt.t_served_ms = t_served_ms
        self._live -= 1

    def expire(self, t_ms: float) -> List[Packet]:
        """Drop packets whose age exceeds the TTL (t - t_gen > ttl); returns
        the dropped packets for loss accounting. Served packets reached by the
        sweep are compacted away silently."""
        dropped = []
        cut = 0
        for pkt in self._items:
            if pkt.deadline_ms >= t_ms and pkt.t_served_ms is None:
                break
            if pkt.deadline_ms >= t_ms:
                cut += 1  # served, just compact
                continue
            cut += 1
            if pkt.t_served_ms is None:
                dropped.append(pkt)
                self._live -= 1
        if cut:
            del self._items[:cut]
            del self._keys[:cut]
        return dropped

    def pending(self, t_ms: float, tti_ms: float):
        """Unserved packets that could still complete by end of this TTI,
        in deadline order."""
        horizon = t_ms + tti_ms
        for pkt in self._items:
            if pkt.t_served_ms is not None:
                continue
            if pkt.deadline_ms >= horizon:
                yield pkt

    def snapshot(self) -> List[Packet]:
        return [p for p in self._items if p.t_served_ms is None]


def expire(buffer: TtlBuffer, t_ms: float) -> List[Packet]:
    return buffer.expire(t_ms)


class TrafficSource:
    """Generates the CUE/VUE packet arrivals for one simulation run."""

    def __init__(self, cfg: TrafficConfig, num_cues: int, num_vues: int, rng: np.random.Generator):
        self.cfg = cfg
        self.num_cues = num_cues
        self.num_vues = num_vues
        self.rng = rng
        self._seq = 0
        if cfg.cue_arrivals == "periodic" and num_cues:
            self._phases = self.rng.integers(0, int(cfg.cue_period_ms), size=num_cues)
        else:
            self._phases = None

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def generate_cue_traffic(self, t_ms: float) -> List[Packet]:
        """New CUE packets at a 1 ms generation instant."""
        cfg = self.cfg
        if self.num_cues == 0:
            return []
        if cfg.cue_arrivals == "periodic":
            due = ((t_ms - self._phases) % cfg.cue_period_ms == 0) & (t_ms >= self._phases)
            owners = np.nonzero(due)[0]
        else:
            k = int(self.rng.poisson(self.num_cues / cfg.cue_period_ms))
            k = min(k, self.num_cues)
            owners = self.rng.choice(self.num_cues, size=k, replace=False) if k else np.empty(0, dtype=int)
        return [
            Packet("cue", int(o), cfg.cue_packet_bits, t_ms, cfg.cue_ttl_ms, self._next_seq())
            for o in owners
        ]

    def generate_vue_traffic(self, t_ms: float) -> List[Packet]:
        """One packet per pair on the 10 ms grid, deterministic."""
        cfg = self.cfg
        if t_ms % cfg.vue_period_ms != 0:
            return []
        return [
            Packet("vue", v, cfg.vue_packet_bits, t_ms, cfg.vue_ttl_ms, self._next_seq())
            for v in range(self.num_vues)
        ]


@dataclass
class TrafficBuffers:
    cue: TtlBuffer = field(default_factory=TtlBuffer)
    vue: TtlBuffer = field(default_factory=TtlBuffer)

    def expire(self, t_ms: float) -> List[Packet]:
        return self.cue.expire(t_ms) + self.vue.expire(t_ms)
