"""Static simulation world: service area, lanes, user drops, large-scale gains.

The base station sits at the origin of a square service area. A band of lanes
runs east-west south of it; vehicles (VUE pairs) live on lane centerlines,
cellular and best-effort users are dropped uniformly in the square excluding
the lane band. Large-scale gains (path loss + log-normal shadowing + antenna
gains) are drawn once per drop and frozen.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
import numpy as np

MIN_LINK_DISTANCE_M = 1.0
_REJECTION_CAP = 10_000


class ConfigError(ValueError):
    """Invalid scenario configuration."""


class LinkKind(enum.Enum):
    V2I = "v2i"  # link terminating at the base station
    V2V = "v2v"  # ground-to-ground link


@dataclass(frozen=True)
class ScenarioConfig:
    area_side_m: float = 1000.0
    lane_count: int = 8
    lane_width_m: float = 4.0
    lane_offset_south_m: float = 35.0
    num_cues: int = 50
    num_vue_pairs: int = 10
    num_bues: int = 10
    vehicle_speed_mps: float = 13.89  # 50 km/h
    carrier_bwp1_ghz: float = 28.0
    carrier_bwp2_ghz: float = 2.0
    gnb_antenna_gain_dbi: float = 8.0
    vehicle_antenna_gain_dbi: float = 3.0
    bs_noise_figure_db: float = 5.0
    vehicle_noise_figure_db: float = 9.0
    noise_power_dbm: float = -114.0
    shadow_std_v2v_db: float = 4.0
    shadow_std_v2i_db: float = 7.8
    vue_rx_gap_cap_m: float = 50.0
    rng_seed: int = 1

    def __post_init__(self):
        if self.area_side_m <= 0:
            raise ConfigError("area_side_m must be positive")
        if self.lane_count <= 0 or self.lane_count % 2 != 0:
            raise ConfigError("lane_count must be a positive even number (half per direction)")
        if self.vehicle_speed_mps <= 0:
            raise ConfigError("vehicle_speed_mps must be positive")
        for name in ("num_cues", "num_vue_pairs", "num_bues"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.lane_offset_south_m + self.lane_count * self.lane_width_m > self.area_side_m / 2:
            raise ConfigError("lane band does not fit inside the service area")

    @property
    def lane_band(self) -> tuple:
        """(y_top, y_bottom) of the lane strip, y_top > y_bottom."""
        top = -self.lane_offset_south_m
        return top, top - self.lane_count * self.lane_width_m

    def lane_center_y(self, lane: int) -> float:
        top, _ = self.lane_band
        return top - (lane + 0.5) * self.lane_width_m

    def lane_direction(self, lane: int) -> int:
        """+1 eastbound for the first half of the lanes, -1 for the rest."""
        return 1 if lane < self.lane_count // 2 else -1

    def in_lane_band(self, xy) -> bool:
        top, bottom = self.lane_band
        return bottom < float(xy[1]) < top


def vehicle_density_per_m(speed_mps: float) -> float:
    """Linear vehicle density on a lane, 5 / (2.5 s * 18 * v)."""
    if speed_mps <= 0:
        raise ValueError("speed must be positive")
    return 5.0 / (2.5 * 18.0 * speed_mps)


@dataclass(frozen=True)
class UserDrop:
    cue_positions: np.ndarray       # (C, 2)
    bue_positions: np.ndarray       # (M, 2)
    vue_tx_positions: np.ndarray    # (V, 2)
    vue_rx_positions: np.ndarray    # (V, 2)
    vue_directions: np.ndarray      # (V,) +1 / -1 along x
    vue_lanes: np.ndarray           # (V,)


def _drop_uniform_offroad(config: ScenarioConfig, count: int, rng: np.random.Generator) -> np.ndarray:
    half = config.area_side_m / 2.0
    top, bottom = config.lane_band
    band_fraction = (top - bottom) / config.area_side_m
    if band_fraction >= 1.0:
        raise ConfigError("lanes cover the whole service area; nowhere to drop users")
    out = np.empty((count, 2))
    placed = 0
    misses = 0
    while placed < count:
        pt = rng.uniform(-half, half, size=2)
        if bottom < pt[1] < top:
            misses += 1
            if misses > _REJECTION_CAP:
                raise ConfigError("could not place users outside the lanes")
            continue
        out[placed] = pt
        placed += 1
    return out


def _drop_vues(config: ScenarioConfig, rng: np.random.Generator):
    """Poisson-process positions along the lanes, truncated or padded to the
    requested pair count; receivers sit ahead of their transmitter in the lane
    direction at an exponential gap (mean 2.5 * v / 2, capped)."""
    half = config.area_side_m / 2.0
    lam = vehicle_density_per_m(config.vehicle_speed_mps)
    xs, lanes = [], []
    for lane in range(config.lane_count):
        x = -half
        while True:
            x += rng.exponential(1.0 / lam)
            if x > half:
                break
            xs.append(x)
            lanes.append(lane)
    xs = np.array(xs)
    lanes = np.array(lanes, dtype=int)
    v = config.num_vue_pairs
    if len(xs) >= v:
        keep = rng.permutation(len(xs))[:v]
        xs, lanes = xs[keep], lanes[keep]
    else:
        extra = v - len(xs)
        xs = np.concatenate([xs, rng.uniform(-half, half, size=extra)])
        lanes = np.concatenate([lanes, rng.integers(0, config.lane_count, size=extra)])
    directions = np.array([config.lane_direction(l) for l in lanes], dtype=int)
    tx = np.column_stack([xs, [config.lane_center_y(l) for l in lanes]])
    gaps = np.minimum(rng.exponential(2.5 * config.vehicle_speed_mps / 2.0, size=v), config.vue_rx_gap_cap_m) if v else np.zeros(0)
    rx_x = np.clip(tx[:, 0] + directions * gaps, -half, half) if v else np.zeros(0)
    rx = np.column_stack([rx_x, tx[:, 1]]) if v else tx.copy()
    return tx, rx, directions, lanes


def drop_users(config: ScenarioConfig, rng: np.random.Generator) -> UserDrop:
    """Place all users for one drop. Deterministic given the generator state."""
    cues = _drop_uniform_offroad(config, config.num_cues, rng)
    bues = _drop_uniform_offroad(config, config.num_bues, rng)
    tx, rx, directions, lanes = _drop_vues(config, rng)
    return UserDrop(
        cue_positions=cues,
        bue_positions=bues,
        vue_tx_positions=tx,
        vue_rx_positions=rx,
        vue_directions=directions,
        vue_lanes=lanes,
    )


def pathloss_db(link_kind: LinkKind, distance_m: float, carrier_ghz: float) -> float:
    """Path loss in dB; distance in meters, carrier in GHz.

    Distances below 1 m are clamped to avoid the log singularity.
    """
    if distance_m < 0:
        raise ValueError("distance must be >= 0")
    d = max(distance_m, MIN_LINK_DISTANCE_M)
    if link_kind is LinkKind.V2I:
        return 32.4 + 20.0 * math.log10(carrier_ghz) + 30.0 * math.log10(d)
    return 36.85 + 30.0 * math.log10(d) + 18.9 * math.log10(carrier_ghz)


def large_scale_gain(pathloss: float, shadowing_draw_db: float, tx_gain_dbi: float, rx_gain_dbi: float) -> float:
    """Linear power gain from the dB link budget."""
    return 10.0 ** ((tx_gain_dbi + rx_gain_dbi - pathloss - shadowing_draw_db) / 10.0)


@dataclass(frozen=True)
class LargeScaleGains:
    """Linear gains per link, frozen for the drop's lifetime."""

    cue_gnb: np.ndarray    # (C,)
    bue_gnb: np.ndarray    # (M,) on the BWP-2 carrier
    vue: np.ndarray        # (V,) transmitter to receiver of a pair
    vue_gnb: np.ndarray    # (V,) pair transmitter into the base station
    cue_vue: np.ndarray    # (C, V) CUE into a pair's receiver


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a - b, axis=-1)


def build_gains(config: ScenarioConfig, drop: UserDrop, rng: np.random.Generator) -> LargeScaleGains:
    """Path loss + one shadowing draw per link + antenna gains, all linear.

    Links terminating at the base station use the V2I model and shadowing
    deviation; ground-to-ground links (pair link, CUE interference into a pair
    receiver) use the V2V ones. Draw order is fixed for reproducibility.
    """
    g_bs = config.gnb_antenna_gain_dbi
    g_ue = config.vehicle_antenna_gain_dbi
    f1, f2 = config.carrier_bwp1_ghz, config.carrier_bwp2_ghz
    origin = np.zeros(2)

    def v2i_gains(positions: np.ndarray, carrier: float) -> np.ndarray:
        d = _distances(positions, origin)
        shadow = rng.normal(0.0, config.shadow_std_v2i_db, size=d.shape)
        pl = np.array([pathloss_db(LinkKind.V2I, di, carrier) for di in d])
        return 10.0 ** ((g_ue + g_bs - pl - shadow) / 10.0)

    cue_gnb = v2i_gains(drop.cue_positions, f1)
    bue_gnb = v2i_gains(drop.bue_positions, f2)
    vue_gnb = v2i_gains(drop.vue_tx_positions, f1)

    d_pair = _distances(drop.vue_tx_positions, drop.vue_rx_positions)
    shadow_pair = rng.normal(0.0, config.shadow_std_v2v_db, size=d_pair.shape)
    pl_pair = np.array([pathloss_db(LinkKind.V2V, di, f1) for di in d_pair])
    vue = 10.0 ** ((g_ue + g_ue - pl_pair - shadow_pair) / 10.0)

    c, v = config.num_cues, config.num_vue_pairs
    cue_vue = np.zeros((c, v))
    if c and v:
        d_cv = _distances(drop.cue_positions[:, None, :], drop.vue_rx_positions[None, :, :])
        shadow_cv = rng.normal(0.0, config.shadow_std_v2v_db, size=d_cv.shape)
        pl_cv = np.vectorize(lambda di: pathloss_db(LinkKind.V2V, di, f1))(d_cv)
        cue_vue = 10.0 ** ((g_ue + g_ue - pl_cv - shadow_cv) / 10.0)

    return LargeScaleGains(cue_gnb=cue_gnb, bue_gnb=bue_gnb, vue=vue, vue_gnb=vue_gnb, cue_vue=cue_vue)


def noise_power_mw(config: ScenarioConfig, receiver: str) -> float:
    """Effective per-RB noise power: thermal floor plus the receiver's noise
    figure, additive in dB."""
    nf = {"gnb": config.bs_noise_figure_db, "vehicle": config.vehicle_noise_figure_db}[receiver]
    return 10.0 ** ((config.noise_power_dbm + nf) / 10.0)


def config_from_mapping(mapping: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a {key: string-or-number} mapping, rejecting
    unknown keys."""
    known = {f.name: f.type for f in fields(ScenarioConfig)}
    kwargs = {}
    for key, raw in mapping.items():
        if key not in known:
            raise ConfigError(f"unknown scenario key: {key}")
        current = getattr(ScenarioConfig, key, None)
        if isinstance(current, bool):
            kwargs[key] = str(raw).strip().lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            kwargs[key] = int(raw)
        else:
            kwargs[key] = float(raw)
    return ScenarioConfig(**kwargs)
