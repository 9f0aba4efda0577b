"""SNR-to-MCS mapping and resource-block dimensioning.

The scheduler abstracts the PHY through a 15-level MCS table: each level has a
spectral efficiency (bits/symbol) and the minimum SNR at which it holds the
block error rate at 0.1 (cellular uplink target) or 0.01 (sidelink target).
An RB carries 12 subcarriers x 14 symbols = 168 symbols, so a packet of B bits
needs ceil(B / (168 * SE)) RBs at a given MCS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

SUBCARRIERS_PER_RB = 12
SYMBOLS_PER_TTI = 14
SYMBOLS_PER_RB = SUBCARRIERS_PER_RB * SYMBOLS_PER_TTI  # 168
MAX_RBS_PER_PACKET = 16  # worst row of the default table for a 400-bit packet

# index, modulation, SE (bits/symbol), SNR threshold (dB) at BLER 0.1, at BLER 0.01
_DEFAULT_ROWS = [
    (1, "QPSK", 0.15, -6.5, -2.5),
    (2, "QPSK", 0.23, -4.0, 0.0),
    (3, "QPSK", 0.38, -2.6, 1.4),
    (4, "QPSK", 0.60, -1.0, 3.0),
    (5, "QPSK", 0.88, 1.0, 5.0),
    (6, "QPSK", 1.18, 3.0, 7.0),
    (7, "16QAM", 1.48, 6.6, 10.6),
    (8, "16QAM", 1.91, 10.0, 14.0),
    (9, "16QAM", 2.41, 11.4, 15.4),
    (10, "64QAM", 2.73, 11.8, 15.8),
    (11, "64QAM", 3.32, 13.0, 17.0),
    (12, "64QAM", 3.90, 13.8, 17.8),
    (13, "64QAM", 4.52, 15.6, 19.6),
    (14, "64QAM", 5.12, 16.8, 20.8),
    (15, "64QAM", 5.55, 17.6, 21.6),
]

BLER_TARGETS = (0.1, 0.01)


class TableFormatError(ValueError):
    """Raised when an MCS table violates its structural invariants."""


@dataclass(frozen=True)
class McsRow:
    index: int
    modulation: str
    se: float
    snr_db_bler_10pct: float
    snr_db_bler_1pct: float


class McsTable:
    """Ordered MCS rows with vectorised SNR -> MCS lookup.

    Invariants enforced on construction: indices 1..n contiguous, SE strictly
    increasing, both threshold columns strictly increasing.
    """

    def __init__(self, rows: Sequence[McsRow]):
        if not rows:
            raise TableFormatError("MCS table is empty")
        self.rows = tuple(rows)
        idx = [r.index for r in self.rows]
        if idx != list(range(1, len(idx) + 1)):
            raise TableFormatError(f"MCS indices must be 1..{len(idx)} contiguous, got {idx}")
        self.se = np.array([r.se for r in self.rows])
        self._thr = {
            0.1: np.array([r.snr_db_bler_10pct for r in self.rows]),
            0.01: np.array([r.snr_db_bler_1pct for r in self.rows]),
        }
        if np.any(np.diff(self.se) <= 0):
            raise TableFormatError("spectral efficiency must increase strictly with MCS index")
        for target, thr in self._thr.items():
            if np.any(np.diff(thr) <= 0):
                raise TableFormatError(f"SNR thresholds for BLER {target} must increase strictly")

    def __len__(self) -> int:
        return len(self.rows)

    def thresholds(self, bler_target: float) -> np.ndarray:
        try:
            return self._thr[bler_target]
        except KeyError:
            raise ValueError(f"BLER target must be one of {BLER_TARGETS}, got {bler_target}") from None

    def mcs_indices(self, snr_db, bler_target: float) -> np.ndarray:
        """Highest feasible MCS index per SNR sample; 0 marks infeasible."""
        thr = self.thresholds(bler_target)
        return np.searchsorted(thr, np.asarray(snr_db, dtype=float), side="right")

    def se_for_mcs(self, mcs_index) -> np.ndarray:
        """SE per index (1-based); index 0 maps to 0.0 (infeasible)."""
        padded = np.concatenate(([0.0], self.se))
        return padded[np.asarray(mcs_index, dtype=int)]

    @classmethod
    def default(cls) -> "McsTable":
        return cls([McsRow(*r) for r in _DEFAULT_ROWS])

    @classmethod
    def from_file(cls, path, delimiter: str = ",") -> "McsTable":
        """Load rows `index,modulation,se,snr_bler_0.1,snr_bler_0.01`, one per line.

        Lines starting with '#' and blank lines are skipped.
        """
        rows = []
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(delimiter)]
            if len(parts) != 5:
                raise TableFormatError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            try:
                rows.append(McsRow(int(parts[0]), parts[1], float(parts[2]), float(parts[3]), float(parts[4])))
            except ValueError as exc:
                raise TableFormatError(f"{path}:{lineno}: {exc}") from None
        return cls(rows)


DEFAULT_TABLE = McsTable.default()


def select_mcs(snr_db: float, bler_target: float, table: McsTable = DEFAULT_TABLE) -> Optional[int]:
    """Highest MCS index whose threshold is <= snr_db, or None when below row 1."""
    idx = int(table.mcs_indices(snr_db, bler_target))
    return idx if idx >= 1 else None


def bits_per_rb(se: float) -> float:
    """Bits one RB carries at spectral efficiency `se`; fractional bits are kept
    (flooring happens at the packet-fit level)."""
    if se < 0:
        raise ValueError("spectral efficiency must be >= 0")
    return SYMBOLS_PER_RB * se


def rbs_needed(packet_bits: float, se: float) -> int:
    if packet_bits <= 0 or se <= 0:
        raise ValueError("packet_bits and se must be positive")
    return math.ceil(packet_bits / bits_per_rb(se))


@dataclass(frozen=True)
class RbAllocation:
    rb_ids: tuple
    mcs_index: int
    se: float

    @property
    def n_rbs(self) -> int:
        return len(self.rb_ids)


def min_rb_allocation(
    per_rb_snr_db: Sequence[float],
    packet_bits: float,
    bler_target: float,
    table: McsTable = DEFAULT_TABLE,
    rb_ids: Optional[Sequence[int]] = None,
    max_rbs: int = MAX_RBS_PER_PACKET,
) -> Optional[RbAllocation]:
    """Pick the smallest RB set that carries the packet under the min-SE rule.

    RBs are ranked by achievable SE (ties broken by lowest RB id). For k = 1, 2,
    ... the top-k set transmits at the minimum SE among its members, so it holds
    k * 168 * se_min bits; the first k that fits wins. Returns None when no
    k <= max_rbs fits (including the empty-pool case).
    """
    snr = np.asarray(per_rb_snr_db, dtype=float)
    if rb_ids is None:
        ids = np.arange(snr.size)
    else:
        ids = np.asarray(rb_ids)
        if ids.size != snr.size:
            raise ValueError("rb_ids and per_rb_snr_db must align")
    if snr.size == 0:
        return None
    mcs = table.mcs_indices(snr, bler_target)
    usable = mcs >= 1
    if not np.any(usable):
        return None
    se = table.se_for_mcs(mcs[usable])
    ids = ids[usable]
    mcs = mcs[usable]
    order = np.lexsort((ids, -se))
    se_sorted = se[order]
    k_max = min(max_rbs, se_sorted.size)
    capacity = (np.arange(1, k_max + 1)) * SYMBOLS_PER_RB * se_sorted[:k_max]
    fits = np.nonzero(capacity >= packet_bits)[0]
    if fits.size == 0:
        return None
    k = int(fits[0]) + 1
    chosen = order[:k]
    return RbAllocation(
        rb_ids=tuple(int(ids[i]) for i in chosen),
        mcs_index=int(mcs[chosen[-1]]),
        se=float(se_sorted[k - 1]),
    )


@dataclass(frozen=True)
class RbGrid:
    """Per-numerology RB geometry (subcarrier spacing scales as 2^mu * 15 kHz)."""

    mu: int

    @property
    def scs_khz(self) -> float:
        return (2 ** self.mu) * 15.0

    @property
    def rb_bandwidth_khz(self) -> float:
        return SUBCARRIERS_PER_RB * self.scs_khz

    @property
    def rb_bandwidth_hz(self) -> float:
        return self.rb_bandwidth_khz * 1e3

    @property
    def tti_ms(self) -> float:
        return 2.0 ** (-self.mu)

    subcarriers_per_rb = SUBCARRIERS_PER_RB
    symbols_per_tti = SYMBOLS_PER_TTI
