"""Acceptance suite: one test per release criterion, cheap ones first.

Each test prints a PASS line with its measured quantities (visible with -s);
pytest -v shows one pass/fail line per criterion either way.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from v2xsched.assignment import max_weight_matching
from v2xsched.channel import jakes_epsilon
from v2xsched.cli import EXPECTED_RB_NEED
from v2xsched.link_adaptation import DEFAULT_TABLE, rbs_needed
from v2xsched.power_control import PairLinkParams, solve_pair_power
from v2xsched.runner import CSV_FILES, RunPlan, capacity_for_scheduler, run, run_single_seed
from v2xsched.scenario import ScenarioConfig
from v2xsched.schedulers import SchedulerConfig
from v2xsched.traffic import TrafficConfig

from oracles import j0_series, matching_brute_force, mc_outage

RNG_PHY = dict(
    alpha_v=(-11, -7), alpha_cv=(-14, -9), alpha_v_gnb=(-14, -10), alpha_c_gnb=(-13, -9),
)


def _random_pair_params(rng) -> PairLinkParams:
    bounds = RNG_PHY
    return PairLinkParams(
        alpha_v=10 ** rng.uniform(*bounds["alpha_v"]),
        alpha_cv=10 ** rng.uniform(*bounds["alpha_cv"]),
        alpha_v_gnb=10 ** rng.uniform(*bounds["alpha_v_gnb"]),
        alpha_c_gnb=10 ** rng.uniform(*bounds["alpha_c_gnb"]),
        eps_v=0.757, eps_cv=0.757,
        h_hat_v_sq=float(rng.exponential()),
        h_hat_cv_sq=float(rng.exponential()),
        h_c_gnb_sq=float(rng.exponential()),
        noise_mw=10 ** (-10.5),
        sinr_floor=10 ** 0.5,
        outage_cap=1e-3,
        p_c_max_mw=199.53, p_v_max_mw=199.53,
        noise_gnb_mw=10 ** (-10.9),
    )


def _report(name, elapsed, detail=""):
    print(f"PASS {name}: {detail} ({elapsed:.1f}s)")


def test_criterion_01_mcs_table_rb_reproduction():
    t0 = time.perf_counter()
    got = tuple(rbs_needed(400, row.se) for row in DEFAULT_TABLE.rows)
    assert got == EXPECTED_RB_NEED == (16, 11, 7, 4, 3, 3, 2, 2, 1, 1, 1, 1, 1, 1, 1)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("criterion-1 table reproduction", elapsed, f"counts {got}")


def test_criterion_02_matching_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        n = int(rng.integers(1, 8))
        m = int(rng.integers(1, 8))
        w = rng.integers(-10, 11, size=(n, m)).astype(float)
        w[rng.random((n, m)) < 0.2] = -np.inf
        got = max_weight_matching(w, refine_ties=False).total
        want = matching_brute_force(w)
        assert got == want, f"trial {trial}:\n{w}\ngot {got} want {want}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report("criterion-2 matching oracle", elapsed, "1000/1000 exact")


def test_criterion_05_doppler_correlation():
    t0 = time.perf_counter()
    eps = jakes_epsilon(13.89, 28e9, 0.125e-3)
    assert eps == pytest.approx(0.757, abs=1e-3)
    assert eps == pytest.approx(j0_series(2 * math.pi * 13.89 * 28e9 / 3e8 * 0.125e-3), abs=1e-9)
    x = 2.4048
    v_zero = x / (2 * math.pi * 0.125e-3) * 3e8 / 28e9
    assert abs(jakes_epsilon(v_zero, 28e9, 0.125e-3)) <= 1e-4
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("criterion-5 Doppler correlation", elapsed, f"eps={eps:.4f}")


def test_criterion_09_deterministic_artifacts(tmp_path):
    t0 = time.perf_counter()
    scen = ScenarioConfig(num_cues=15, num_vue_pairs=4, num_bues=2, area_side_m=300.0)
    sched = SchedulerConfig(c_t=4, n_rc=4, rc_size=4)
    for sub in ("a", "b"):
        plan = RunPlan(scheduler="grahs", duration_s=0.05, seeds=(9,), out_dir=str(tmp_path / sub))
        run(scen, TrafficConfig(), sched, plan)
    for name in CSV_FILES + ("summary.json",):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report("criterion-9 determinism", elapsed, "all CSVs byte-identical")


def test_criterion_03_power_control_outage_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    draws = np.random.default_rng(32)
    n_draws = 1_000_000
    sigma = math.sqrt(1e-3 * (1 - 1e-3) / n_draws)
    checked = 0
    worst = 0.0
    while checked < 50:
        params = _random_pair_params(rng)
        sol = solve_pair_power(params)
        if sol is None:
            continue
        est = mc_outage(params, sol.p_c_mw, sol.p_v_mw, n_draws, draws)
        assert est <= params.outage_cap + 3 * sigma, (est, params)
        if sol.root_found:
            assert abs(sol.residual) <= 1e-6, (sol.residual, params)
        worst = max(worst, est)
        checked += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _report("criterion-3 outage soundness", elapsed, f"50 instances, worst outage {worst:.2e}")


def test_criterion_04_power_control_near_optimality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(41)
    draws = np.random.default_rng(42)
    n_grid = 200
    n_draws = 100_000
    checked = 0
    while checked < 10:
        params = _random_pair_params(rng)
        sol = solve_pair_power(params)
        if sol is None:
            continue
        checked += 1
        r_star = params.cue_rate(sol.p_c_mw, sol.p_v_mw)
        pcs = np.linspace(params.p_c_max_mw / n_grid, params.p_c_max_mw, n_grid)
        pvs = np.linspace(params.p_v_max_mw / n_grid, params.p_v_max_mw, n_grid)
        rate = np.log2(1.0 + (pcs[:, None] * params.alpha_c_gnb * params.h_c_gnb_sq)
                       / (params.rate_noise_mw + pvs[None, :] * params.alpha_v_gnb))
        # resolution effect: best single-cell move from the solution
        dc, dv = pcs[1] - pcs[0], pvs[1] - pvs[0]
        best_move = params.cue_rate(min(sol.p_c_mw + dc, params.p_c_max_mw),
                                    max(sol.p_v_mw - dv, pvs[0] / 2))
        inc = max(best_move - r_star, 1e-12)
        better = rate > r_star + inc
        if not better.any():
            continue
        # shared-draw Monte Carlo feasibility of every better-rate grid point;
        # a point only counts as MC-feasible when its estimate sits 3 sampling
        # sigmas under the cap (the same statistical convention the soundness
        # check uses on the other side; a plain point-estimate comparison would
        # flag boundary points on noise alone)
        e1 = draws.exponential(1 - params.eps_v ** 2, size=n_draws)
        e2 = draws.exponential(1 - params.eps_cv ** 2, size=n_draws)
        u = params.alpha_v * (params.eps_v ** 2 * params.h_hat_v_sq + e1)
        v = params.sinr_floor * params.alpha_cv * (params.eps_cv ** 2 * params.h_hat_cv_sq + e2)
        floor_term = params.sinr_floor * params.noise_mw
        sigma = math.sqrt(params.outage_cap * (1 - params.outage_cap) / n_draws)
        for j, pv in enumerate(pvs):
            cols = np.nonzero(better[:, j])[0]
            if cols.size == 0:
                continue
            ratios = np.sort((pv * u - floor_term) / v)
            outage = np.searchsorted(ratios, pcs[cols], side="right") / n_draws
            feasible = outage <= params.outage_cap - 3 * sigma
            assert not feasible.any(), (
                f"feasible better point at pv={pv}, pcs={pcs[cols][feasible]}")
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report("criterion-4 near-optimality", elapsed, "10 instances, grid 200x200")


INVARIANT_SCEN = ScenarioConfig(num_cues=50, num_vue_pairs=10, num_bues=10)


@pytest.mark.parametrize("scheduler", ["grahs", "hrahs", "ora"])
def test_criterion_06_invariant_suite(scheduler):
    t0 = time.perf_counter()
    rec = run_single_seed(INVARIANT_SCEN, TrafficConfig(), SchedulerConfig(), scheduler,
                          0.5, seed=606, check_invariants=True)
    assert rec.invariant_violations == []
    totals = rec.kind_totals("cue")
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _report(f"criterion-6 invariants [{scheduler}]", elapsed,
            f"zero violations over {rec.n_bwp1_ttis} TTIs, cue totals {totals}")


def test_criterion_08_link_adaptation_necessity():
    t0 = time.perf_counter()
    scen = ScenarioConfig(num_cues=100, num_vue_pairs=10, num_bues=2)
    base = SchedulerConfig()
    restricted = SchedulerConfig(single_rb_only=True)

    def cue_plr(sched_cfg):
        rec = run_single_seed(scen, TrafficConfig(), sched_cfg, "grahs", 0.25, seed=88)
        tot = rec.kind_totals("cue")
        return tot["dropped"] / tot["generated"]

    plr_restricted = cue_plr(restricted)
    plr_full = cue_plr(base)
    assert plr_restricted > plr_full
    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0
    _report("criterion-8 link-adaptation necessity", elapsed,
            f"PLR one-RB {plr_restricted:.3f} > adaptive {plr_full:.3f}")


def test_criterion_07_capacity_ordering_desk_scale():
    t0 = time.perf_counter()
    scen = ScenarioConfig(num_cues=64, num_vue_pairs=24, num_bues=2,
                          area_side_m=250.0, shadow_std_v2i_db=3.0)
    sched = SchedulerConfig(c_t=1, n_rc=1, rc_size=4)
    seeds = (101, 102, 103)
    caps = {}
    for name in ("ora", "grahs", "hrahs"):
        res = capacity_for_scheduler(scen, TrafficConfig(), sched, name, 0.5, seeds,
                                     (16, 256), step=16)
        assert res.met_at_minimum, f"{name} unsatisfied even at the range minimum"
        caps[name] = res.capacity
    assert caps["ora"] < caps["grahs"] <= caps["hrahs"], caps
    assert caps["hrahs"] >= 1.2 * caps["ora"], caps
    elapsed = time.perf_counter() - t0
    assert elapsed < 1800.0
    _report("criterion-7 capacity ordering", elapsed,
            f"ora {caps['ora']} < grahs {caps['grahs']} <= hrahs {caps['hrahs']}")
