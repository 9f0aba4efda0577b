import math

import numpy as np
import pytest

from v2xsched.power_control import (
    DegenerateCsiError,
    PairLinkParams,
    PairParamsBatch,
    breakpoints,
    closed_form_outage,
    f1,
    f2,
    solve_pair_power,
    solve_pair_power_batch,
)

from oracles import duplicate_breakpoints, duplicate_f1, duplicate_f2, mc_outage


def make_params(rng=None, **overrides):
    """Physically plausible random pair parameters (powers in mW)."""
    rng = rng or np.random.default_rng(0)
    base = dict(
        alpha_v=10 ** rng.uniform(-11, -7),
        alpha_cv=10 ** rng.uniform(-14, -9),
        alpha_v_gnb=10 ** rng.uniform(-14, -10),
        alpha_c_gnb=10 ** rng.uniform(-13, -9),
        eps_v=0.757, eps_cv=0.757,
        h_hat_v_sq=float(rng.exponential()),
        h_hat_cv_sq=float(rng.exponential()),
        h_c_gnb_sq=float(rng.exponential()),
        noise_mw=10 ** (-10.5),
        sinr_floor=10 ** 0.5,
        outage_cap=1e-3,
        p_c_max_mw=199.53, p_v_max_mw=199.53,
    )
    base.update(overrides)
    return PairLinkParams(**base)


def batch_from(params_list):
    return PairParamsBatch(
        alpha_v=np.array([p.alpha_v for p in params_list]),
        alpha_cv=np.array([p.alpha_cv for p in params_list]),
        eps_v=np.array([p.eps_v for p in params_list]),
        eps_cv=np.array([p.eps_cv for p in params_list]),
        h_hat_v_sq=np.array([p.h_hat_v_sq for p in params_list]),
        h_hat_cv_sq=np.array([p.h_hat_cv_sq for p in params_list]),
        noise_mw=np.array([p.noise_mw for p in params_list]),
        sinr_floor=np.array([p.sinr_floor for p in params_list]),
        outage_cap=np.array([p.outage_cap for p in params_list]),
        p_c_max_mw=np.array([p.p_c_max_mw for p in params_list]),
        p_v_max_mw=np.array([p.p_v_max_mw for p in params_list]),
    )


def _kw(p):
    return dict(alpha_v=p.alpha_v, alpha_cv=p.alpha_cv, eps_v=p.eps_v, eps_cv=p.eps_cv,
                h_hat_v_sq=p.h_hat_v_sq, h_hat_cv_sq=p.h_hat_cv_sq, noise=p.noise_mw,
                gamma0=p.sinr_floor, p0=p.outage_cap)


def test_breakpoints_match_duplicate_formula():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = make_params(rng)
        got = breakpoints(p)
        want = duplicate_breakpoints(**_kw(p))
        if math.isinf(want[0]):
            assert math.isinf(got[0]) and math.isinf(got[1])
        else:
            assert got[0] == pytest.approx(want[0], rel=1e-12)
            assert got[1] == pytest.approx(want[1], rel=1e-12)


def test_breakpoints_outage_cap_near_one_gives_infinite_branch():
    p = make_params(outage_cap=0.999999)
    p_c0, p_v0 = breakpoints(p)
    assert math.isinf(p_c0) and math.isinf(p_v0)


def test_breakpoints_symmetric_cancellation():
    p = make_params(alpha_cv=1e-9, alpha_v=1e-9, eps_v=0.7, eps_cv=0.7,
                    sinr_floor=1.0, outage_cap=0.5, h_hat_v_sq=2.0, h_hat_cv_sq=0.3)
    p_c0, p_v0 = breakpoints(p)
    assert p_v0 == pytest.approx(p_c0, rel=1e-12)


def test_degenerate_csi_raises():
    p = make_params(eps_v=1.0)
    with pytest.raises(DegenerateCsiError):
        breakpoints(p)
    with pytest.raises(DegenerateCsiError):
        f1(1.0, 1.0, p)
    with pytest.raises(DegenerateCsiError):
        solve_pair_power(p)


def test_f_functions_match_duplicate_formulas():
    # the plain-math oracle overflows where the log-domain implementation does
    # not; compare wherever the oracle itself is representable
    rng = np.random.default_rng(2)
    compared = 0
    for _ in range(200):
        p = make_params(rng)
        p_c = float(rng.uniform(0.01, p.p_c_max_mw))
        p_v = float(rng.uniform(0.01, p.p_v_max_mw))
        try:
            want1 = duplicate_f1(p_c, p_v, **_kw(p))
            assert f1(p_c, p_v, p) == pytest.approx(want1, rel=1e-12, abs=1e-300)
            compared += 1
        except OverflowError:
            pass
        try:
            want2 = duplicate_f2(p_c, p_v, **_kw(p))
            assert f2(p_c, p_v, p) == pytest.approx(want2, rel=1e-12, abs=1e-300)
            compared += 1
        except OverflowError:
            pass
    assert compared >= 150


def test_f1_with_zero_threshold_reduces():
    p = make_params(sinr_floor=1e-300)  # gamma0 -> 0 limit
    val = f1(1.0, 1.0, p)
    a = 1.0 * p.alpha_v * p.eps_v**2 * p.h_hat_v_sq
    fterm = 1.0 * p.alpha_v * (1 - p.eps_v**2)
    expected = 1.0 - math.exp(a / fterm) / (1 - p.outage_cap)
    assert val == pytest.approx(expected, rel=1e-9)


def test_f1_monotone_decreasing_in_pv():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(200):
        p = make_params(rng)
        _, p_v0 = breakpoints(p)
        hi = min(p_v0, p.p_v_max_mw)
        if not math.isfinite(hi) or hi <= 0:
            hi = p.p_v_max_mw
        grid = np.linspace(hi * 1e-3, hi, 50)
        vals = [f1(p.p_c_max_mw, pv, p) for pv in grid]
        finite = [v for v in vals if math.isfinite(v)]
        if len(finite) < 2:
            continue
        assert all(a >= b or math.isclose(a, b, rel_tol=1e-9) for a, b in zip(finite, finite[1:]))
        checked += 1
    assert checked >= 100


def test_solution_within_box_and_residual_small():
    rng = np.random.default_rng(4)
    solved = 0
    for _ in range(200):
        p = make_params(rng)
        sol = solve_pair_power(p)
        if sol is None:
            continue
        solved += 1
        assert 0.0 <= sol.p_c_mw <= p.p_c_max_mw
        assert 0.0 <= sol.p_v_mw <= p.p_v_max_mw
        if sol.root_found:
            assert abs(sol.residual) <= 1e-6
    assert solved > 150


def test_solution_meets_outage_closed_form():
    rng = np.random.default_rng(5)
    for _ in range(100):
        p = make_params(rng)
        sol = solve_pair_power(p)
        if sol is None:
            continue
        out = closed_form_outage(p, sol.p_c_mw, sol.p_v_mw)
        assert out <= p.outage_cap * (1 + 1e-6) + 1e-12


def test_solution_monte_carlo_outage_smoke():
    rng = np.random.default_rng(6)
    draws = np.random.default_rng(7)
    checked = 0
    while checked < 10:
        p = make_params(rng)
        sol = solve_pair_power(p)
        if sol is None:
            continue
        est = mc_outage(p, sol.p_c_mw, sol.p_v_mw, 100_000, draws)
        sigma = math.sqrt(p.outage_cap * (1 - p.outage_cap) / 100_000)
        assert est <= p.outage_cap + 3 * sigma
        checked += 1


def test_vacuous_constraint_pins_cue_power_at_cap():
    p = make_params(outage_cap=0.999)
    sol = solve_pair_power(p)
    assert sol is not None
    assert sol.p_c_mw == pytest.approx(p.p_c_max_mw)


def test_infeasible_pair_returns_none():
    # destroy the sidelink (weak gain, tight cap): no power meets the outage cap
    p = make_params(alpha_v=1e-22, sinr_floor=1e4, outage_cap=1e-6)
    assert solve_pair_power(p) is None


def test_batch_matches_scalar():
    rng = np.random.default_rng(8)
    params = [make_params(rng) for _ in range(300)]
    b = batch_from(params)
    p_c, p_v, case = solve_pair_power_batch(b)
    for i, p in enumerate(params):
        sol = solve_pair_power(p)
        if sol is None:
            assert case[i] == 0
        else:
            assert case[i] == sol.case
            assert p_c[i] == pytest.approx(sol.p_c_mw, rel=1e-6, abs=1e-12)
            assert p_v[i] == pytest.approx(sol.p_v_mw, rel=1e-6, abs=1e-9)


def test_case_structure_covers_all_three():
    rng = np.random.default_rng(9)
    seen = set()
    for _ in range(3000):
        p = make_params(
            rng,
            outage_cap=float(10 ** rng.uniform(-4, -0.3)),
            sinr_floor=float(10 ** rng.uniform(-1, 1.5)),
            p_v_max_mw=float(10 ** rng.uniform(-2, 2.5)),
            p_c_max_mw=float(10 ** rng.uniform(-2, 2.5)),
        )
        sol = solve_pair_power(p)
        if sol is not None:
            seen.add(sol.case)
        if seen == {1, 2, 3}:
            break
    assert seen == {1, 2, 3}


def test_params_validation():
    with pytest.raises(ValueError):
        make_params(outage_cap=0.0)
    with pytest.raises(ValueError):
        make_params(sinr_floor=-1.0)
    with pytest.raises(ValueError):
        make_params(noise_mw=0.0)
