"""Run orchestration: config files, the two-clock TTI loop, and artifacts.

BWP-1 ticks every 0.125 ms (numerology 3) and hosts the real-time schedulers;
BWP-2 ticks every 1 ms (numerology 0, every 8th BWP-1 tick) and serves the
best-effort users by max-C/I. Seeds fan out to processes when requested;
within a run everything is sequential and deterministic, and artifacts carry
no timestamps so identical plans produce byte-identical files.
"""

from __future__ import annotations

import configparser
import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .metrics import CapacityResult, MetricsRecorder, capacity_search, cdf_points, sum_rate
from .scenario import ConfigError, ScenarioConfig, config_from_mapping
from .schedulers import SCHEDULERS, SchedulerConfig, max_ci_tti
from .traffic import TrafficBuffers, TrafficConfig, TrafficSource
from .world import build_world, traffic_rng

ENV_PREFIX = "V2XSCHED_"
CSV_FILES = ("plr.csv", "delay_cdf.csv", "sumrate.csv", "outage.csv", "rb_cdf.csv", "capacity.csv")


@dataclass(frozen=True)
class RunPlan:
    scheduler: str = "grahs"
    duration_s: float = 6.25
    seeds: Tuple[int, ...] = (1,)
    out_dir: Optional[str] = None
    sweep_param: Optional[str] = None       # e.g. "scenario.num_cues"
    sweep_values: Tuple[float, ...] = ()
    workers: int = 1
    check_invariants: bool = False

    def __post_init__(self):
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler: {self.scheduler}")
        if self.duration_s <= 0:
            raise ConfigError("duration must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")


def _coerce(template, raw):
    if isinstance(template, bool):
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    return str(raw)


def _dataclass_from_section(cls, mapping: dict, section: str):
    defaults = cls()
    kwargs = {}
    for key, raw in mapping.items():
        if not hasattr(defaults, key):
            raise ConfigError(f"unknown key in [{section}]: {key}")
        kwargs[key] = _coerce(getattr(defaults, key), raw)
    return replace(defaults, **kwargs)


def apply_env_overrides(sections: Dict[str, Dict[str, str]], environ=None) -> None:
    """Apply V2XSCHED_<SECTION>__<KEY>=value overrides in place."""
    environ = os.environ if environ is None else environ
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        section, key = name[len(ENV_PREFIX):].split("__", 1)
        sections.setdefault(section.lower(), {})[key.lower()] = value


def load_config(path, environ=None):
    """Parse the sectioned key-value config file into the three configs plus
    run options. Unknown sections or keys are hard errors naming the line."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    text = Path(path).read_text()
    parser.read_string(text, source=str(path))
    known = {"scenario", "traffic", "scheduler", "run"}
    lines = text.splitlines()

    def line_of(token: str) -> int:
        for i, line in enumerate(lines, start=1):
            if line.strip().lower().startswith(token):
                return i
        return 0

    sections: Dict[str, Dict[str, str]] = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{path}:{line_of('[' + section.lower())}: unknown section [{section}]")
        sections[section] = dict(parser.items(section))
    apply_env_overrides(sections, environ)

    try:
        scen = config_from_mapping(sections.get("scenario", {}))
        traffic = _dataclass_from_section(TrafficConfig, sections.get("traffic", {}), "traffic")
        sched = _dataclass_from_section(SchedulerConfig, sections.get("scheduler", {}), "scheduler")
    except ConfigError as exc:
        key = str(exc).rsplit(":", 1)[-1].strip()
        raise ConfigError(f"{path}:{line_of(key)}: {exc}") from None

    run_raw = dict(sections.get("run", {}))
    plan_kwargs: Dict[str, object] = {}
    if "scheduler" in run_raw:
        plan_kwargs["scheduler"] = run_raw.pop("scheduler")
    if "duration_s" in run_raw:
        plan_kwargs["duration_s"] = float(run_raw.pop("duration_s"))
    if "seeds" in run_raw:
        plan_kwargs["seeds"] = tuple(int(s) for s in run_raw.pop("seeds").split(","))
    if "workers" in run_raw:
        plan_kwargs["workers"] = int(run_raw.pop("workers"))
    if "check_invariants" in run_raw:
        plan_kwargs["check_invariants"] = _coerce(False, run_raw.pop("check_invariants"))
    if "sweep_param" in run_raw:
        plan_kwargs["sweep_param"] = run_raw.pop("sweep_param")
    if "sweep_values" in run_raw:
        plan_kwargs["sweep_values"] = tuple(float(v) for v in run_raw.pop("sweep_values").split(","))
    if run_raw:
        key = sorted(run_raw)[0]
        raise ConfigError(f"{path}:{line_of(key)}: unknown key in [run]: {key}")
    plan_kwargs.setdefault("seeds", (scen.rng_seed,))
    return scen, traffic, sched, RunPlan(**plan_kwargs)


def run_single_seed(scen: ScenarioConfig, traffic_cfg: TrafficConfig, sched: SchedulerConfig,
                    scheduler: str, duration_s: float, seed: int,
                    check_invariants: bool = False) -> MetricsRecorder:
    """One deterministic run of one seed; returns the filled recorder."""
    world = build_world(scen, traffic_cfg, sched, seed)
    buffers = TrafficBuffers()
    source = TrafficSource(traffic_cfg, scen.num_cues, scen.num_vue_pairs, traffic_rng(seed))
    rec = MetricsRecorder(scen.num_cues, scen.num_vue_pairs,
                          traffic_cfg.cue_ttl_ms, traffic_cfg.vue_ttl_ms,
                          sched.vue_sinr_floor)
    step = SCHEDULERS[scheduler]
    tti_ms = world.grid_bwp1.tti_ms
    n_ttis = int(round(duration_s * 1000.0 / tti_ms))
    ratio = int(round(world.grid_bwp2.tti_ms / tti_ms))

    for i in range(n_ttis):
        t = i * tti_ms
        world.t_ms = t
        on_ms_grid = i % ratio == 0
        if on_ms_grid:
            for pkt in source.generate_cue_traffic(t):
                buffers.cue.push(pkt)
                rec.on_generated(pkt)
        for pkt in source.generate_vue_traffic(t):
            buffers.vue.push(pkt)
            rec.on_generated(pkt)
        for pkt in buffers.expire(t):
            rec.on_dropped(pkt)
        world.evolve_tti()
        alloc = step(world, buffers, sched)
        for served in alloc.served_cues:
            rec.on_cue_served(served)
        for served in alloc.served_vues:
            rec.on_vue_served(served)
        rec.on_tti(alloc)
        if check_invariants:
            alloc.validate(sched, shared_cap=(scheduler == "ora"))
            rec.check_conservation(buffers)
            for served in alloc.served_cues + alloc.served_vues:
                delay = served.packet.t_served_ms - served.packet.t_gen_ms
                assert delay <= served.packet.ttl_ms + 1e-9, "served past the deadline"
        if on_ms_grid:
            world.draw_bwp2()
            bue = max_ci_tti(world)
            if bue is not None:
                rec.on_bue_tti(bue.total_rate_bps)
    rec.n_bwp1_ttis = n_ttis
    rec.n_bwp2_ttis = len(range(0, n_ttis, ratio))
    return rec


def _seed_job(args):
    return run_single_seed(*args)


def run_seeds(scen, traffic_cfg, sched, plan: RunPlan) -> List[MetricsRecorder]:
    jobs = [(scen, traffic_cfg, sched, plan.scheduler, plan.duration_s, seed, plan.check_invariants)
            for seed in plan.seeds]
    if plan.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            return list(pool.map(_seed_job, jobs))
    return [_seed_job(j) for j in jobs]


# -- artifacts ---------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_artifacts(out_dir, scen: ScenarioConfig, traffic_cfg: TrafficConfig,
                    sched: SchedulerConfig, plan: RunPlan,
                    recorders: List[MetricsRecorder],
                    capacity: Optional[CapacityResult] = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_path = out / "summary.json"
    summary = {
        "incomplete": True,
        "plan": {
            "scheduler": plan.scheduler,
            "duration_s": plan.duration_s,
            "seeds": list(plan.seeds),
            "check_invariants": plan.check_invariants,
        },
        "config": {
            "scenario": asdict(scen),
            "traffic": asdict(traffic_cfg),
            "scheduler": asdict(sched),
        },
    }
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True))

    sched_name = plan.scheduler
    n = scen.num_cues
    plr_rows, delay_rows, rate_rows, outage_rows, rb_rows, cap_rows = [], [], [], [], [], []
    results = []
    for seed, rec in zip(plan.seeds, recorders):
        for kind in ("cue", "vue"):
            tot = rec.kind_totals(kind)
            plr = tot["dropped"] / tot["generated"] if tot["generated"] else 0.0
            plr_rows.append([sched_name, n, seed, kind, tot["generated"], tot["served"], tot["dropped"], plr])
            for value, cdf in cdf_points(rec.delays(kind)):
                delay_rows.append([sched_name, n, seed, kind, value, cdf])
        rate_rows.append([sched_name, n, seed, "cue", "mean_mbps", sum_rate(rec.cue_tti_rates) / 1e6])
        rate_rows.append([sched_name, n, seed, "bue", "mean_mbps", sum_rate(rec.bue_tti_rates) / 1e6])
        for r in rec.bue_tti_rates:
            rate_rows.append([sched_name, n, seed, "bue", "tti_mbps", r / 1e6])
        outage_rows.append([sched_name, n, seed, rec.outage_probability(),
                            rec.vue_expired, rec.vue_below_floor, rec.vue_delivered_ok])
        for value, cdf in cdf_points(rec.rb_total_per_tti):
            rb_rows.append([sched_name, n, seed, "cue_total_per_tti", value, cdf])
        for value, cdf in cdf_points(rec.per_user_rbs("cue")):
            rb_rows.append([sched_name, n, seed, "per_cue_grant", value, cdf])
        for value, cdf in cdf_points(rec.per_user_rbs("vue")):
            rb_rows.append([sched_name, n, seed, "per_vue_grant", value, cdf])
        sat, counted = rec.satisfaction("cue")
        frac = sat / counted if counted else 1.0
        cap_rows.append([sched_name, n, seed, sat, counted, frac])
        results.append({
            "seed": seed,
            "cue_plr": plr_rows[-2][-1],
            "vue_outage": rec.outage_probability(),
            "satisfied_fraction": frac,
            "n_bwp1_ttis": getattr(rec, "n_bwp1_ttis", None),
            "n_bwp2_ttis": getattr(rec, "n_bwp2_ttis", None),
            "invariant_violations": list(rec.invariant_violations),
        })
    if capacity is not None:
        for probe_n, frac in capacity.probes:
            cap_rows.append([sched_name, probe_n, "probe", "", "", frac])
        cap_rows.append([sched_name, capacity.capacity, "capacity", "", "", capacity.satisfied_fraction_at_capacity])

    _write_csv(out / "plr.csv", ["scheduler", "num_cues", "seed", "user_kind", "generated", "served", "dropped", "plr"], plr_rows)
    _write_csv(out / "delay_cdf.csv", ["scheduler", "num_cues", "seed", "user_kind", "delay_ms", "cdf"], delay_rows)
    _write_csv(out / "sumrate.csv", ["scheduler", "num_cues", "seed", "user_kind", "stat", "value_mbps"], rate_rows)
    _write_csv(out / "outage.csv", ["scheduler", "num_cues", "seed", "outage_prob", "expired", "below_floor", "delivered_ok"], outage_rows)
    _write_csv(out / "rb_cdf.csv", ["scheduler", "num_cues", "seed", "scope", "rbs", "cdf"], rb_rows)
    _write_csv(out / "capacity.csv", ["scheduler", "num_cues", "seed", "satisfied", "counted", "satisfied_fraction"], cap_rows)

    summary["incomplete"] = False
    summary["results"] = results
    if capacity is not None:
        summary["capacity"] = {
            "capacity": capacity.capacity,
            "met_at_minimum": capacity.met_at_minimum,
            "monotone_consistent": capacity.monotone_consistent,
        }
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True))


def run(scen: ScenarioConfig, traffic_cfg: TrafficConfig, sched: SchedulerConfig,
        plan: RunPlan) -> int:
    """Execute the plan (with optional sweep) and write artifacts. Returns 0
    on success."""
    if plan.sweep_param:
        section, key = plan.sweep_param.split(".", 1)
        for value in plan.sweep_values:
            scen_i, sched_i, traffic_i = scen, sched, traffic_cfg
            cast = value
            if section == "scenario":
                cast = _coerce(getattr(scen, key), value)
                scen_i = replace(scen, **{key: cast})
            elif section == "scheduler":
                cast = _coerce(getattr(sched, key), value)
                sched_i = replace(sched, **{key: cast})
            elif section == "traffic":
                cast = _coerce(getattr(traffic_cfg, key), value)
                traffic_i = replace(traffic_cfg, **{key: cast})
            else:
                raise ConfigError(f"sweep_param section must be scenario/scheduler/traffic: {section}")
            sub = Path(plan.out_dir) / f"{key}={_fmt(cast)}"
            sub_plan = replace(plan, sweep_param=None, sweep_values=(), out_dir=str(sub))
            run(scen_i, traffic_i, sched_i, sub_plan)
        return 0
    recorders = run_seeds(scen, traffic_cfg, sched, plan)
    if plan.out_dir:
        write_artifacts(plan.out_dir, scen, traffic_cfg, sched, plan, recorders)
    return 0


def satisfied_fraction(scen: ScenarioConfig, traffic_cfg: TrafficConfig, sched: SchedulerConfig,
                       scheduler: str, duration_s: float, seeds: Sequence[int]) -> float:
    """Mean satisfied-CUE fraction across seeds at the configured load."""
    fracs = []
    for seed in seeds:
        rec = run_single_seed(scen, traffic_cfg, sched, scheduler, duration_s, seed)
        sat, counted = rec.satisfaction("cue")
        fracs.append(sat / counted if counted else 1.0)
    return float(np.mean(fracs))


def capacity_for_scheduler(scen: ScenarioConfig, traffic_cfg: TrafficConfig, sched: SchedulerConfig,
                           scheduler: str, duration_s: float, seeds: Sequence[int],
                           cue_range: Tuple[int, int], step: int = 1) -> CapacityResult:
    """Real-time traffic capacity in CUEs for one scheduler at desk scale."""

    def evaluate(n: int) -> float:
        scen_n = replace(scen, num_cues=n)
        return satisfied_fraction(scen_n, traffic_cfg, sched, scheduler, duration_s, seeds)

    return capacity_search(evaluate, cue_range, step=step)


def plan_from_summary(summary_path) -> Tuple[ScenarioConfig, TrafficConfig, SchedulerConfig, RunPlan]:
    """Rebuild the exact run inputs from a summary.json (round-trip contract)."""
    data = json.loads(Path(summary_path).read_text())
    scen = ScenarioConfig(**data["config"]["scenario"])
    traffic_cfg = TrafficConfig(**data["config"]["traffic"])
    sched = SchedulerConfig(**data["config"]["scheduler"])
    p = data["plan"]
    plan = RunPlan(scheduler=p["scheduler"], duration_s=p["duration_s"], seeds=tuple(p["seeds"]),
                   check_invariants=p.get("check_invariants", False))
    return scen, traffic_cfg, sched, plan
