import math

import numpy as np
import pytest

from v2xsched.channel import (
    FadingState,
    SinrInputs,
    aged_power_gain,
    bessel_j0,
    cue_sinr,
    draw_unit_cn,
    evolve_fading,
    jakes_epsilon,
    vue_sinr,
)

from oracles import j0_series


def test_jakes_epsilon_stationary_user():
    assert jakes_epsilon(0.0, 28e9, 0.125e-3) == 1.0


def test_jakes_epsilon_reference_point():
    eps = jakes_epsilon(13.89, 28e9, 0.125e-3)
    assert eps == pytest.approx(0.757, abs=1e-3)


def test_jakes_epsilon_at_first_bessel_zero():
    # pick v, fc, T so that 2 pi fd T = 2.4048
    x = 2.4048
    t = 0.125e-3
    fc = 28e9
    v = x / (2 * math.pi * t) * 3e8 / fc
    assert abs(jakes_epsilon(v, fc, t)) <= 1e-4


def test_j0_matches_series_oracle_on_grid():
    for x in np.linspace(0.0, 5.0, 100):
        assert bessel_j0(float(x)) == pytest.approx(j0_series(float(x)), abs=1e-6)


def test_j0_large_argument_region():
    scipy = pytest.importorskip("scipy.special")
    for x in np.linspace(0.1, 10.0, 97):
        assert bessel_j0(float(x)) == pytest.approx(float(scipy.j0(x)), abs=1e-6)


def test_evolve_perfect_correlation_keeps_value():
    rng = np.random.default_rng(0)
    st = FadingState.fresh(1, 1, 4, eps=1.0, rng=rng)
    before = st.h_vue.copy()
    evolve_fading(st, rng)
    assert np.allclose(st.h_hat_vue, before)
    assert np.allclose(st.h_vue, before)  # e has zero variance


def test_evolve_memoryless_when_eps_zero():
    rng = np.random.default_rng(1)
    st = FadingState.fresh(1, 1, 256, eps=0.0, rng=rng)
    before = st.h_vue.copy()
    evolve_fading(st, rng)
    corr = np.abs(np.vdot(before, st.h_vue)) / before.size
    assert corr < 0.2  # no linear dependence beyond noise


def test_evolve_preserves_unit_second_moment():
    rng = np.random.default_rng(2)
    st = FadingState.fresh(1, 1, 10, eps=0.757, rng=rng)
    acc = []
    for _ in range(10_000):
        evolve_fading(st, rng)
        acc.append(np.abs(st.h_vue) ** 2)
    mean = float(np.mean(acc))  # 1e5 link-RB samples
    assert mean == pytest.approx(1.0, abs=0.02)


def test_evolve_redraws_gnb_links_fresh():
    rng = np.random.default_rng(3)
    st = FadingState.fresh(2, 2, 8, eps=0.9, rng=rng)
    before = st.h_cue_gnb.copy()
    evolve_fading(st, rng)
    assert not np.allclose(st.h_cue_gnb, before)


def test_error_term_variance():
    rng = np.random.default_rng(4)
    eps = 0.8
    st = FadingState.fresh(1, 1, 20_000, eps=eps, rng=rng)
    evolve_fading(st, rng)
    err = st.vue_error()
    assert float(np.mean(np.abs(err) ** 2)) == pytest.approx(1 - eps**2, rel=0.05)


def test_aged_power_gain_formula():
    assert aged_power_gain(1.0, np.array([1 + 0j]), np.array([0j]))[0] == pytest.approx(1.0)
    got = aged_power_gain(0.5, np.array([2 + 0j]), np.array([1j]))[0]
    assert got == pytest.approx(0.25 * 4 + 1)


def _own_only_inputs(p, alpha, noise, fading_sq):
    return SinrInputs(p_own_mw=p, alpha_own=alpha, noise_mw=noise,
                      own_fading_sq=np.asarray(fading_sq))


def test_cue_sinr_interference_free_reduction():
    inputs = _own_only_inputs(2.0, 0.5, 0.25, [1.0, 4.0])
    assert cue_sinr(inputs, 0) == pytest.approx(4.0)
    assert cue_sinr(inputs, 1) == pytest.approx(16.0)


def test_cue_sinr_zero_power_interferer():
    inputs = SinrInputs(
        p_own_mw=2.0, alpha_own=0.5, noise_mw=0.25,
        own_fading_sq=np.array([1.0]),
        pairing=np.array([1.0]), p_interf_mw=np.array([0.0]),
        alpha_interf=np.array([1.0]), interf_fading_sq=np.array([[5.0]]),
    )
    assert cue_sinr(inputs, 0) == pytest.approx(4.0)


def test_cue_sinr_hand_case():
    # signal 4x noise, interference equal to noise -> SINR 2
    inputs = SinrInputs(
        p_own_mw=4.0, alpha_own=1.0, noise_mw=1.0,
        own_fading_sq=np.array([1.0]),
        pairing=np.array([1.0]), p_interf_mw=np.array([1.0]),
        alpha_interf=np.array([1.0]), interf_fading_sq=np.array([[1.0]]),
    )
    assert cue_sinr(inputs, 0) == pytest.approx(2.0)


def test_vue_sinr_perfect_csi_reduction():
    own = aged_power_gain(1.0, np.array([3 + 0j]), np.array([0j]))
    inputs = _own_only_inputs(2.0, 0.5, 1.0, own)
    assert vue_sinr(inputs, 0) == pytest.approx(9.0)


def test_vue_sinr_symmetric_hand_case():
    own = aged_power_gain(1.0, np.array([1 + 0j]), np.array([0j]))
    interf = aged_power_gain(1.0, np.array([[1 + 0j]]), np.array([[0j]]))
    inputs = SinrInputs(
        p_own_mw=1.0, alpha_own=1.0, noise_mw=1.0, own_fading_sq=own,
        pairing=np.array([1.0]), p_interf_mw=np.array([1.0]),
        alpha_interf=np.array([1.0]), interf_fading_sq=interf,
    )
    assert vue_sinr(inputs, 0) == pytest.approx(0.5)


def test_sinr_monotonicity_random_instances():
    rng = np.random.default_rng(5)
    for _ in range(50):
        base = SinrInputs(
            p_own_mw=float(rng.uniform(0.1, 10)), alpha_own=float(rng.uniform(0.1, 2)),
            noise_mw=float(rng.uniform(0.1, 2)),
            own_fading_sq=rng.exponential(1.0, size=3),
            pairing=np.ones(2), p_interf_mw=rng.uniform(0.1, 5, size=2),
            alpha_interf=rng.uniform(0.1, 2, size=2),
            interf_fading_sq=rng.exponential(1.0, size=(2, 3)),
        )
        rb = int(rng.integers(0, 3))
        up = SinrInputs(**{**base.__dict__, "p_own_mw": base.p_own_mw * 2})
        assert cue_sinr(up, rb) > cue_sinr(base, rb)
        more = SinrInputs(**{**base.__dict__, "p_interf_mw": base.p_interf_mw * 2})
        assert cue_sinr(more, rb) < cue_sinr(base, rb)


def test_draw_unit_cn_unit_variance():
    rng = np.random.default_rng(6)
    h = draw_unit_cn(rng, 200_000)
    assert float(np.mean(np.abs(h) ** 2)) == pytest.approx(1.0, abs=0.01)


def test_sinr_inputs_validation():
    with pytest.raises(ValueError):
        SinrInputs(p_own_mw=-1.0, alpha_own=1.0, noise_mw=1.0, own_fading_sq=np.ones(1))
    with pytest.raises(ValueError):
        SinrInputs(p_own_mw=1.0, alpha_own=1.0, noise_mw=0.0, own_fading_sq=np.ones(1))
