"""System-level simulator of uplink spectrum and power allocation for
cellular V2X in a multi-numerology 5G cell."""

from .assignment import MatchingResult, max_weight_matching
from .channel import FadingState, SinrInputs, cue_sinr, evolve_fading, jakes_epsilon, vue_sinr
from .link_adaptation import (
    DEFAULT_TABLE,
    McsTable,
    RbGrid,
    bits_per_rb,
    min_rb_allocation,
    rbs_needed,
    select_mcs,
)
from .metrics import MetricsRecorder, UserStats, capacity_search, is_satisfied, sum_rate, vue_outage
from .power_control import (
    DegenerateCsiError,
    PairLinkParams,
    PowerSolution,
    breakpoints,
    f1,
    f2,
    solve_pair_power,
)
from .scenario import (
    LargeScaleGains,
    LinkKind,
    ScenarioConfig,
    UserDrop,
    drop_users,
    large_scale_gain,
    pathloss_db,
)
from .schedulers import AllocationResult, SchedulerConfig, grahs_tti, hrahs_tti, max_ci_tti, ora_tti
from .traffic import Packet, TrafficBuffers, TrafficConfig, TrafficSource, TtlBuffer
from .world import World, build_world

__version__ = "0.1.0"
