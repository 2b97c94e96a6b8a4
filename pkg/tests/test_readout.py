import math

import numpy as np
import pytest

from qdotspin.constants import DotParams
from qdotspin.readout import (
    NOISE_ASSUMPTION,
    DetectorModel,
    InsufficientSamplesError,
    ReadoutConfig,
    ReadoutScheme,
    Spin,
    analytic_fidelity,
    outcome_spin_mutual_information,
    rate_ratio_from_tunnel_distance,
    simulate_shot,
    simulate_shots,
    simulate_singlet_triplet_shot,
    timing_chain_check,
)
from qdotspin.rng import ShotStream

QUIET = DetectorModel()
NOMINAL = ReadoutConfig(gamma_up_out=1e7, gamma_down_out=1e2, measurement_window=5e-6)


def test_config_invariants():
    with pytest.raises(ValueError):
        ReadoutConfig(gamma_up_out=1e2, gamma_down_out=1e7)
    with pytest.raises(ValueError):
        ReadoutConfig(measurement_window=0)
    with pytest.raises(ValueError):
        ReadoutConfig(gamma_in=-1)
    assert ReadoutConfig("energy_threshold", gamma_down_out=5e3).gamma_down_out == 0.0
    assert ReadoutConfig("broken_unselective", gamma_up_out=3e6).gamma_down_out == 3e6
    assert NOMINAL.tunnel_time == pytest.approx(1e-7)
    assert NOMINAL.no_tunnel_time == pytest.approx(1e-2)


def test_detector_invariants():
    with pytest.raises(ValueError):
        DetectorModel(threshold=1.0)
    with pytest.raises(ValueError):
        DetectorModel(charge_levels=(0, 2, 4))
    d = DetectorModel(noise_sigma_at_1us=0.2)
    assert d.sigma(4e-6) == pytest.approx(0.1)
    assert d.sigma(1e-6) == pytest.approx(0.2)


def test_tunnel_distance_ratio():
    assert rate_ratio_from_tunnel_distance(0.0, 1e-9) == 1.0
    assert rate_ratio_from_tunnel_distance(5e-9, 1e-9) == pytest.approx(math.exp(-5))
    cfg = ReadoutConfig.from_tunnel_distances(1e7, 11.5e-9, 1e-9)
    assert cfg.gamma_down_out == pytest.approx(1e7 * math.exp(-11.5))


def test_up_spin_leaves_in_nominal_regime():
    batch = simulate_shots(1.0, NOMINAL, QUIET, seed=1, shots=20000)
    assert np.all(batch.declared == 0)
    assert np.all(batch.final_charge == 0)
    assert batch.signal.max() < 0.5


def test_single_shot_matches_batch():
    batch = simulate_shots(0.4, NOMINAL, DetectorModel(noise_sigma_at_1us=0.3), seed=9, shots=50)
    for i in range(50):
        rec = simulate_shot(0.4, NOMINAL, DetectorModel(noise_sigma_at_1us=0.3), ShotStream(9, i, 0))
        assert rec == batch.record(i)


def test_record_structure():
    rec = simulate_shot(1.0, NOMINAL, QUIET, ShotStream(1, 0))
    assert rec.true_spin is Spin.UP and rec.declared is Spin.UP
    assert rec.charge_trajectory[0] == (0.0, 1)
    assert rec.final_charge == 0
    assert 0 < rec.tunnel_out_time < NOMINAL.measurement_window
    rec = simulate_shot(0.5, NOMINAL, QUIET, np.random.default_rng(0))
    times = [t for t, _ in rec.charge_trajectory]
    assert times == sorted(times)
    with pytest.raises(ValueError):
        simulate_shot(1.5, NOMINAL, QUIET, ShotStream(1))
    with pytest.raises(TypeError):
        simulate_shot(0.5, NOMINAL, QUIET, 42)


def test_trajectories_are_well_formed():
    for scheme in ReadoutScheme:
        cfg = ReadoutConfig(scheme=scheme, gamma_down_out=1e5)
        for rec in simulate_shots(0.5, cfg, QUIET, 3, 300).records():
            times = [t for t, _ in rec.charge_trajectory]
            assert times == sorted(times)
            assert {c for _, c in rec.charge_trajectory} <= {0, 1, 2}


def test_energy_threshold_down_never_leaves():
    cfg = ReadoutConfig("energy_threshold", gamma_up_out=1e7)
    batch = simulate_shots(0.0, cfg, QUIET, 4, 100_000)
    assert not np.any(np.isfinite(batch.event_time))
    assert np.all(batch.declared == 1)


def test_midgap_gives_no_information():
    cfg = ReadoutConfig("broken_midgap_ef", gamma_down_out=1e7, gamma_in=1e7)
    batch = simulate_shots(0.5, cfg, QUIET, 5, 100_000)
    assert np.all(batch.final_charge == 1)
    assert outcome_spin_mutual_information(batch) < 0.01
    # down electrons do leave and get replaced
    down = ~batch.true_up
    assert np.mean(np.isfinite(batch.event_time[down])) > 0.99
    assert np.all(batch.reload_time[down & np.isfinite(batch.event_time)] > batch.event_time[down & np.isfinite(batch.event_time)])


def test_both_below_ef_and_off_are_stuck():
    for scheme in ("broken_both_below_ef", "off"):
        batch = simulate_shots(0.5, ReadoutConfig(scheme), QUIET, 6, 10_000)
        assert np.all(batch.final_charge == 1)
        assert outcome_spin_mutual_information(batch) < 0.01
    off = simulate_shots(0.5, ReadoutConfig("off"), QUIET, 6, 10)
    assert np.all(off.declared == -1)
    assert off.record(0).declared is None


def test_unselective_gives_no_information():
    cfg = ReadoutConfig("broken_unselective", gamma_up_out=1e6)
    assert outcome_spin_mutual_information(simulate_shots(0.5, cfg, QUIET, 7, 100_000)) < 0.01


def test_singlet_triplet():
    cfg = ReadoutConfig("singlet_triplet", gamma_in=1e7)
    down = simulate_singlet_triplet_shot(0.0, cfg, QUIET, ShotStream(1))
    assert down.declared is Spin.DOWN and down.final_charge == 2
    up = simulate_singlet_triplet_shot(1.0, cfg, QUIET, ShotStream(1))
    assert up.declared is Spin.UP and up.final_charge == 1
    assert up.metadata["robust"] is True
    weak = cfg.with_(singlet_triplet_splitting=0.1e-3)
    assert simulate_shot(0.0, weak, QUIET, ShotStream(2)).metadata["robust"] is False
    with pytest.raises(ValueError):
        simulate_singlet_triplet_shot(0.5, NOMINAL, QUIET, ShotStream(1))
    batch = simulate_shots(0.5, cfg, DetectorModel(noise_sigma_at_1us=0.1), 3, 20_000)
    assert outcome_spin_mutual_information(batch) > 0.99


def test_noise_scaling():
    det = DetectorModel(noise_sigma_at_1us=0.2)
    sig = {}
    for tm in (1e-6, 4e-6, 9e-6):
        cfg = ReadoutConfig("broken_both_below_ef", measurement_window=tm)
        sig[tm] = simulate_shots(0.5, cfg, det, 11, 200_000).signal.std()
    for tm, s in sig.items():
        assert s == pytest.approx(0.2 * math.sqrt(1e-6 / tm), rel=0.02)


def test_analytic_examples():
    f_up, f_down = analytic_fidelity(ReadoutConfig("energy_threshold", gamma_up_out=3e5), QUIET)
    assert f_down == 1.0
    assert f_up == pytest.approx(1 - math.exp(-3e5 * 5e-6 / 2), rel=1e-12)
    with pytest.raises(ValueError):
        analytic_fidelity(ReadoutConfig("broken_midgap_ef"), QUIET)


def test_nominal_regime_fidelity():
    f_up, f_down = analytic_fidelity(NOMINAL, DetectorModel(noise_sigma_at_1us=0.1))
    assert f_up > 0.99 and f_down > 0.99


def test_analytic_matches_numerical_quadrature():
    # oracle: brute-force expectation over tau on a dense grid
    from scipy.integrate import trapezoid
    from scipy.special import ndtr

    cfg = ReadoutConfig(gamma_up_out=4e5, gamma_down_out=2e4, measurement_window=3e-6)
    det = DetectorModel(noise_sigma_at_1us=0.25, threshold=0.4)
    tm, sigma = cfg.measurement_window, det.sigma(cfg.measurement_window)

    def p_up(rate):
        tau = np.linspace(0, tm, 400001)
        dens = rate * np.exp(-rate * tau)
        val = trapezoid(dens * ndtr((0.4 - tau / tm) / sigma), tau)
        return val + math.exp(-rate * tm) * ndtr((0.4 - 1) / sigma)

    f_up, f_down = analytic_fidelity(cfg, det)
    assert f_up == pytest.approx(p_up(4e5), abs=1e-8)
    assert f_down == pytest.approx(1 - p_up(2e4), abs=1e-8)


def test_monte_carlo_matches_analytic():
    rng = np.random.default_rng(2024)
    n = 200_000
    for k in range(5):
        cfg = ReadoutConfig(gamma_up_out=10 ** rng.uniform(5, 7), gamma_down_out=10 ** rng.uniform(2, 5),
                            measurement_window=rng.uniform(1e-6, 10e-6))
        det = DetectorModel(noise_sigma_at_1us=rng.uniform(0, 0.4), threshold=rng.uniform(0.3, 0.7))
        f_up, f_down = analytic_fidelity(cfg, det)
        up = simulate_shots(1.0, cfg, det, 100 + k, n)
        down = simulate_shots(0.0, cfg, det, 200 + k, n)
        for f, hits in ((f_up, np.mean(up.declared == 0)), (f_down, np.mean(down.declared == 1))):
            sd = math.sqrt(max(f * (1 - f), 1e-12) / n)
            assert abs(hits - f) <= 3 * sd + 1 / n


def test_declared_down_leaves_dot_occupied():
    batch = simulate_shots(0.0, NOMINAL, QUIET, 12, 100_000)
    occupied = np.mean(batch.final_charge[batch.declared == 1] == 1)
    assert occupied >= 1 - NOMINAL.measurement_window / NOMINAL.no_tunnel_time


def test_timing_chain():
    dot = DotParams()
    rep = timing_chain_check(NOMINAL, dot)
    assert rep.passed and rep.failed() == []
    assert [l.name for l in rep.links] == ["T_t < T_m", "T_m < T_1", "T_m < T_nt"]
    assert rep.links[0].margin == pytest.approx(50)
    assert timing_chain_check(NOMINAL.with_(measurement_window=200e-6), dot).failed() == ["T_m < T_1"]
    rep = timing_chain_check(ReadoutConfig("energy_threshold"), dot)
    assert rep.links[2].longer == math.inf and rep.links[2].passed
    assert rep.to_dict()["passed"] is True


def test_mutual_information():
    perfect = ReadoutConfig.ideal()
    batch = simulate_shots(0.5, perfect, QUIET, 13, 100_000)
    assert outcome_spin_mutual_information(batch) == pytest.approx(1.0, abs=1e-3)
    # record list input gives the same answer
    small = simulate_shots(0.5, perfect, QUIET, 13, 2000)
    assert outcome_spin_mutual_information(small.records()) == outcome_spin_mutual_information(small)
    with pytest.raises(InsufficientSamplesError):
        outcome_spin_mutual_information(simulate_shots(0.5, perfect, QUIET, 13, 999))


def test_noise_assumption_is_stated():
    assert "assumed" in NOISE_ASSUMPTION
