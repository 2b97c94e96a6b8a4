import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdotspin.constants import DotParams, LeadParams, thermal_up_probability
from qdotspin.initialization import (
    InitMethod,
    InitVariant,
    UnpolarizedLeadsError,
    initialize,
    lead_polarization,
    mixed_lead_init,
    polarized_lead_init,
    relaxation_ptm,
    thermal_init,
)
from qdotspin.state import apply_ptm, from_bloch, mixed, pure_down, pure_up

WARM = DotParams(temperature=0.3)


def test_five_t1_from_down():
    s, elapsed = thermal_init(WARM, pure_down(), 5 * WARM.T1)
    p_eq = thermal_up_probability(0.44, 5.0, 0.3)
    assert elapsed == 5 * WARM.T1
    assert s.prob_up() == pytest.approx(p_eq * (1 - math.exp(-5)), abs=1e-12)
    assert s.prob_up() == pytest.approx(0.9861, abs=2e-4)
    # residual below ~1% of equilibrium
    assert p_eq - s.prob_up() < 0.01


def test_zero_wait_is_identity():
    s0 = from_bloch((0.3, -0.2, 0.5))
    s, elapsed = thermal_init(WARM, s0, 0.0)
    assert elapsed == 0 and s.allclose(s0, atol=0)


def test_long_wait_converges():
    rng = np.random.default_rng(0)
    target = mixed(WARM.p_up_eq)
    for _ in range(20):
        v = rng.normal(size=3)
        v *= rng.uniform() / np.linalg.norm(v)
        s, _ = thermal_init(WARM, from_bloch(v), 20 * WARM.T1)
        assert s.allclose(target, atol=1e-8)


def test_coherence_decays_with_t2():
    s, _ = thermal_init(WARM, from_bloch((1, 0, 0)), WARM.T2)
    assert 2 * s.rho[0, 1].real == pytest.approx(math.exp(-1), rel=1e-12)


@given(st.floats(0, 3e-4), st.floats(0, 3e-4), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=100)
def test_semigroup(t1, t2, x, y, z):
    v = np.array([x, y, z])
    if np.linalg.norm(v) > 1:
        v /= np.linalg.norm(v)
    s0 = from_bloch(v)
    a, _ = thermal_init(WARM, s0, t1)
    a, _ = thermal_init(WARM, a, t2)
    b, _ = thermal_init(WARM, s0, t1 + t2)
    assert np.max(np.abs(a.rho - b.rho)) < 1e-12


def test_relaxation_ptm_matches_closed_form():
    s0 = from_bloch((0.2, 0.6, -0.7))
    t = 37e-6
    assert apply_ptm(s0, relaxation_ptm(WARM, t)).allclose(thermal_init(WARM, s0, t)[0], atol=1e-14)


def test_negative_wait():
    with pytest.raises(ValueError):
        thermal_init(WARM, pure_up(), -1.0)
    with pytest.raises(ValueError):
        InitMethod(InitVariant.THERMAL, wait_time=-1)


def test_polarized_leads_deep_regime():
    s, elapsed = polarized_lead_init(DotParams(), LeadParams())
    assert elapsed == pytest.approx(0.1e-6)
    assert s.prob_up() == 1.0
    assert lead_polarization(DotParams(), LeadParams()) == 1.0
    # exp(-1.447 meV / 8.62 ueV) is ~1e-73
    assert lead_polarization(DotParams(temperature=2.0), LeadParams()) < 1.0


def test_polarized_leads_boundary():
    leads = LeadParams(g_l=0.5, g_l_eff=5.0)
    # field where g_l_eff mu_B B0 equals 5 k_B T exactly at 1 K
    from qdotspin.constants import CONSTANTS

    b_edge = 5 * CONSTANTS.k_B * 1.0 / (5.0 * CONSTANTS.mu_B)
    with pytest.raises(UnpolarizedLeadsError):
        polarized_lead_init(DotParams(B0=b_edge * (1 - 1e-9), temperature=1.0), leads)
    s, _ = polarized_lead_init(DotParams(B0=b_edge * 1.001, temperature=1.0), leads)
    assert s.prob_up() > 0.99


def test_polarized_leads_need_nu_one():
    with pytest.raises(UnpolarizedLeadsError):
        polarized_lead_init(DotParams(), LeadParams(filling_factor=2))


@given(st.floats(0.5, 12.0), st.floats(0.02, 5.0), st.floats(0.3, 1.0), st.floats(1, 10))
@settings(max_examples=200)
def test_polarized_leads_above_99(b0, temp, g_l, ratio):
    leads = LeadParams(g_l=g_l, g_l_eff=g_l * ratio)
    dot = DotParams(B0=b0, temperature=temp)
    try:
        s, _ = polarized_lead_init(dot, leads)
    except UnpolarizedLeadsError:
        return
    assert s.prob_up() > 0.99


def test_spin_flip_option():
    s, _ = polarized_lead_init(DotParams(), LeadParams(), spin_flip_probability=0.01)
    assert s.prob_up() == pytest.approx(0.99)


@pytest.mark.parametrize("p", [0.0, 0.5, 0.7, 1.0])
def test_mixed_lead_init(p):
    s, elapsed = mixed_lead_init(DotParams(), LeadParams(), p)
    assert np.allclose(s.rho, np.diag([p, 1 - p]))
    assert elapsed == pytest.approx(0.1e-6)


def test_mixed_lead_init_range():
    with pytest.raises(ValueError):
        mixed_lead_init(DotParams(), LeadParams(), 1.2)


def test_initialize_dispatch():
    dot, leads = DotParams(), LeadParams()
    s, t = initialize(InitMethod("thermal", wait_time=1e-3), dot, leads)
    assert s.prob_up() == pytest.approx(dot.p_up_eq, abs=1e-4)
    assert t == 1e-3
    s, t = initialize(InitMethod("polarized_leads"), dot, leads)
    assert s.allclose(pure_up()) and t == pytest.approx(1e-7)
    s, t = initialize(InitMethod("partially_polarized_leads", lead_polarization=0.3, tunnel_time=5e-7), dot, leads)
    assert s.prob_up() == pytest.approx(0.3) and t == 5e-7
