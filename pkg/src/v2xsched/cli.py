"""Command-line entry points.

Subcommands:
  run              simulate one scheduler over seeds and write metric CSVs
  capacity         bisect the real-time traffic capacity over a CUE range
  power-solve      solve a single pair power allocation from a parameter file
  validate-tables  recompute the RB-need row of the shipped MCS table
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import replace

from .link_adaptation import DEFAULT_TABLE, rbs_needed
from .power_control import PairLinkParams, solve_pair_power
from .runner import RunPlan, capacity_for_scheduler, load_config, run
from .scenario import ConfigError, ScenarioConfig
from .schedulers import SCHEDULERS, SchedulerConfig
from .traffic import TrafficConfig

# RBs for a 400-bit packet per MCS row of the shipped table at BLER 0.1
EXPECTED_RB_NEED = (16, 11, 7, 4, 3, 3, 2, 2, 1, 1, 1, 1, 1, 1, 1)


def _load(args):
    if args.config:
        scen, traffic_cfg, sched, plan = load_config(args.config)
    else:
        scen, traffic_cfg, sched, plan = ScenarioConfig(), TrafficConfig(), SchedulerConfig(), RunPlan()
    overrides = {}
    if args.scheduler:
        overrides["scheduler"] = args.scheduler
    if args.seeds:
        overrides["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if args.duration is not None:
        overrides["duration_s"] = args.duration
    if args.out:
        overrides["out_dir"] = args.out
    if getattr(args, "workers", None):
        overrides["workers"] = args.workers
    if getattr(args, "check_invariants", False):
        overrides["check_invariants"] = True
    if overrides:
        plan = replace(plan, **overrides)
    return scen, traffic_cfg, sched, plan


def cmd_run(args) -> int:
    scen, traffic_cfg, sched, plan = _load(args)
    if not plan.out_dir:
        print("run: --out (or [run] out in the config) is required", file=sys.stderr)
        return 2
    return run(scen, traffic_cfg, sched, plan)


def cmd_capacity(args) -> int:
    scen, traffic_cfg, sched, plan = _load(args)
    lo, hi, step = (int(x) for x in args.cue_range.split(":"))
    result = capacity_for_scheduler(scen, traffic_cfg, sched, plan.scheduler,
                                    plan.duration_s, plan.seeds, (lo, hi), step=step)
    payload = {
        "scheduler": plan.scheduler,
        "capacity": result.capacity,
        "satisfied_fraction": result.satisfied_fraction_at_capacity,
        "met_at_minimum": result.met_at_minimum,
        "monotone_consistent": result.monotone_consistent,
        "probes": result.probes,
    }
    print(json.dumps(payload, indent=2))
    if args.out:
        from pathlib import Path

        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / f"capacity_{plan.scheduler}.json").write_text(json.dumps(payload, indent=2))
    return 0


def cmd_power_solve(args) -> int:
    parser = configparser.ConfigParser()
    parser.read(args.params)
    if "pair" not in parser:
        print(f"{args.params}: missing [pair] section", file=sys.stderr)
        return 2
    raw = dict(parser.items("pair"))
    try:
        params = PairLinkParams(**{k: float(v) for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        print(f"{args.params}: {exc}", file=sys.stderr)
        return 2
    sol = solve_pair_power(params)
    if sol is None:
        print(json.dumps({"feasible": False}))
        return 0
    print(json.dumps({
        "feasible": True,
        "p_c_mw": sol.p_c_mw,
        "p_v_mw": sol.p_v_mw,
        "case": sol.case,
        "branch": sol.branch,
        "residual": sol.residual,
        "cue_rate_bps_hz": params.cue_rate(sol.p_c_mw, sol.p_v_mw),
    }, indent=2))
    return 0


def cmd_validate_tables(args) -> int:
    ok = True
    for row, expected in zip(DEFAULT_TABLE.rows, EXPECTED_RB_NEED):
        got = rbs_needed(400, row.se)
        status = "ok" if got == expected else "MISMATCH"
        ok &= got == expected
        print(f"MCS {row.index:2d}  SE {row.se:4.2f}  RBs for 400 bits: {got:2d} (expected {expected:2d})  {status}")
    print("table check:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="v2xsched", description="Uplink V2X spectrum/power allocation simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="sectioned key-value config file")
        p.add_argument("--scheduler", choices=sorted(SCHEDULERS), help="override scheduler")
        p.add_argument("--seeds", help="comma-separated seed list")
        p.add_argument("--duration", type=float, help="run length in seconds")
        p.add_argument("--out", help="output directory")

    runp = sub.add_parser("run", help="simulate and write metric CSVs")
    common(runp)
    runp.add_argument("--workers", type=int, default=0, help="parallel seed workers")
    runp.add_argument("--check-invariants", action="store_true", dest="check_invariants")
    runp.set_defaults(func=cmd_run)

    capp = sub.add_parser("capacity", help="bisect real-time traffic capacity")
    common(capp)
    capp.add_argument("--cue-range", default="16:256:8", help="lo:hi:step probe grid")
    capp.set_defaults(func=cmd_capacity)

    pows = sub.add_parser("power-solve", help="solve one pair power allocation")
    pows.add_argument("--params", required=True, help="ini file with a [pair] section")
    pows.set_defaults(func=cmd_power_solve)

    valt = sub.add_parser("validate-tables", help="recompute RB needs from the MCS table")
    valt.set_defaults(func=cmd_validate_tables)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
