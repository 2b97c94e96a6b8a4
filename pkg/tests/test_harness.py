import io
import json
import math
import time

import numpy as np
import pytest

from qdotspin.constants import DotParams, paper_device
from qdotspin.esr import EsrPulse, b1_for_rabi_frequency, cw_saturation_probability, rabi_frequency
from qdotspin.exchange import j_energy_from_frequency, swap_pulse
from qdotspin.harness import (
    EsrBurst,
    Exchange,
    Init,
    Measure,
    NumericError,
    ProtocolError,
    SweepSpec,
    Wait,
    error_per_gate_budget,
    run_protocol,
    run_sweep,
    swap_demo_experiment,
    validate_protocol,
    wilson_interval,
    write_sweep_csv,
)
from qdotspin.initialization import InitMethod
from qdotspin.readout import DetectorModel, ReadoutConfig, simulate_shots

DEV1 = paper_device(1)
DEV2 = paper_device(2)
UP = InitMethod("polarized_leads")
HALF = InitMethod("partially_polarized_leads", lead_polarization=0.5)
SWAP = Exchange(swap_pulse(j_energy_from_frequency(20e9)))


def test_pure_up_always_up():
    res = run_protocol([Init(0, UP), Measure(0)], DEV1, 10_000, 1)
    assert res.outcome_counts == {("up",): 10_000}


def test_mixed_half():
    res = run_protocol([Init(0, HALF), Measure(0)], DEV1, 10_000, 2)
    assert abs(res.marginal(0) - 0.5) < 3 * 0.005
    lo, hi = res.interval(0)
    assert lo <= res.marginal(0) <= hi


def test_swap_protocol():
    res = run_protocol([Init(0, UP), Init(1, HALF), SWAP, Measure(0), Measure(1)], DEV2, 10_000, 3)
    assert res.marginal(1) == 1.0
    assert abs(res.marginal(0) - 0.5) < 3 * 0.005
    assert sum(res.outcome_counts.values()) == 10_000


def test_correlations_after_sqrt_swap():
    # sqrt(SWAP) on |up down> gives (|ud> + i|du>)/sqrt2 up to phases: outcomes perfectly anticorrelated
    from qdotspin.exchange import sqrt_swap_pulse

    steps = [Init(0, UP), Init(1, InitMethod("partially_polarized_leads", lead_polarization=0.0)),
             Exchange(sqrt_swap_pulse(j_energy_from_frequency(20e9))), Measure(0), Measure(1)]
    res = run_protocol(steps, DEV2, 20_000, 4)
    assert set(res.outcome_counts) == {("up", "down"), ("down", "up")}
    assert abs(res.probability(("up", "down")) - 0.5) < 4 * math.sqrt(0.25 / 20_000)


def test_rabi_through_harness():
    dot = DEV1.dots[0]
    f1 = rabi_frequency(dot.g_d, 1e-3)
    burst = EsrBurst(EsrPulse(dot.larmor_frequency, 1e-3, 1 / (2 * f1)))
    res = run_protocol([Init(0, UP), burst, Measure(0)], DEV1, 20_000, 5)
    # pi pulse with T2 = 100 ns damping over ~81 ns: Pr[down] = (1 + e^{-3t/4T2}) / 2 approximately
    assert res.marginal(0, "down") > 0.7


def test_measure_collapse_and_repeat_rule():
    with pytest.raises(ProtocolError, match="step 2"):
        validate_protocol([Init(0, UP), Measure(0), Measure(0)], DEV1)
    with pytest.raises(ProtocolError, match="step 0"):
        validate_protocol([Measure(0)], DEV1)
    with pytest.raises(ProtocolError, match="step 1"):
        validate_protocol([Init(0, UP), SWAP], DEV1)
    with pytest.raises(ProtocolError, match="step 2"):
        validate_protocol([Init(0, UP), Init(1, UP), Measure(0, ReadoutConfig("singlet_triplet"))], DEV2)
    with pytest.raises(ProtocolError):
        validate_protocol([Init(3, UP)], DEV2)
    with pytest.raises(ProtocolError):
        validate_protocol([], DEV1)
    with pytest.raises(ProtocolError, match="step 3"):
        validate_protocol([Init(0, UP), Init(1, UP), Measure(0), SWAP], DEV2)


def test_off_measure_has_no_back_action():
    dot = DEV1.dots[0]
    f1 = rabi_frequency(dot.g_d, 1e-3)
    half = EsrBurst(EsrPulse(dot.larmor_frequency, 1e-3, 1 / (4 * f1)))
    off = Measure(0, ReadoutConfig("off", measurement_window=1e-15))
    # Wait(0) keeps the step index (and so the random draws) of the final measurement aligned
    a = run_protocol([Init(0, UP), half, off, half, Measure(0)], DEV1, 50_000, 6)
    b = run_protocol([Init(0, UP), half, Wait(0.0), half, Measure(0)], DEV1, 50_000, 6)
    assert a.outcome_counts == b.outcome_counts


def test_seed_independence_single_shot_replay():
    steps = [Init(0, HALF), Measure(0, ReadoutConfig(), DetectorModel(noise_sigma_at_1us=0.3))]
    res = run_protocol(steps, DEV1, 500, 77, keep_shots=True)
    rows = sorted(res.shot_rows)
    for shot, true_spin, _, signal, declared, qubit, step in rows[:50]:
        batch = simulate_shots(0.5, steps[1].readout, steps[1].detector, 77, [shot], step=1)
        assert float(batch.signal[0]) == signal
        assert ("up" if batch.true_up[0] else "down") == true_spin


def test_determinism_and_workers():
    steps = [Init(0, UP), Init(1, HALF), SWAP, Measure(0, ReadoutConfig(), DetectorModel(noise_sigma_at_1us=0.2)),
             Measure(1)]
    a = run_protocol(steps, DEV2, 100_000, 8, workers=1).to_json()
    b = run_protocol(steps, DEV2, 100_000, 8, workers=8).to_json()
    c = run_protocol(steps, DEV2, 100_000, 8, workers=3).to_json()
    assert a == b == c
    assert a != run_protocol(steps, DEV2, 100_000, 9).to_json()


def test_result_json_contents():
    res = run_protocol([Init(0, HALF), Wait(1e-6), Measure(0)], DEV1, 1000, 10)
    doc = json.loads(res.to_json())
    assert doc["shots"] == 1000
    assert sum(doc["outcome_counts"].values()) == 1000
    meta = doc["metadata"]
    assert meta["master_seed"] == 10 and meta["code_version"]
    assert meta["protocol_duration"] == pytest.approx(1e-7 + 1e-6 + 5e-6)
    assert any("noise" in a for a in meta["assumptions"])
    assert [s["type"] for s in meta["protocol"]] == ["Init", "Wait", "Measure"]
    for v in doc["estimated_probabilities"].values():
        assert v["ci_low"] <= v["p"] <= v["ci_high"]


def test_shots_csv():
    res = run_protocol([Init(0, HALF), Measure(0)], DEV1, 20, 11, keep_shots=True)
    buf = io.StringIO()
    res.write_shots_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "shot,true_spin,tunnel_out_time,signal,declared,qubit,step"
    assert len(lines) == 21
    with pytest.raises(ValueError):
        run_protocol([Init(0, HALF), Measure(0)], DEV1, 20, 11).write_shots_csv(io.StringIO())


def test_wilson():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - lo == pytest.approx(0.19, abs=0.01)
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_error_budget():
    assert error_per_gate_budget(10e-9, 100e-6) == pytest.approx(1e-4)
    assert error_per_gate_budget(50e-9, 100e-6) == pytest.approx(5e-4)
    assert error_per_gate_budget(10e-9, math.inf) == 0.0
    with pytest.raises(ValueError):
        error_per_gate_budget(0.0, 1.0)


def test_swap_demo():
    demo = swap_demo_experiment(0.5, 10_000, seed=1)
    t = demo.table()
    assert t["before"]["q1_up"] == 1.0 and t["after"]["q2_up"] == 1.0
    assert abs(t["before"]["q2_up"] - 0.5) < 0.015
    assert abs(t["after"]["q1_up"] - 0.5) < 0.015
    same = swap_demo_experiment(1.0, 2000, seed=1).table()
    assert same["before"] == same["after"] == {"q1_up": 1.0, "q2_up": 1.0}


def test_double_swap_restores():
    base = [Init(0, UP), Init(1, HALF)]
    a = run_protocol(base + [Measure(0), Measure(1)], DEV2, 20_000, 12)
    b = run_protocol(base + [SWAP, SWAP, Measure(0), Measure(1)], DEV2, 20_000, 12)
    assert b.marginal(0) == 1.0
    assert abs(b.marginal(1) - a.marginal(1)) < 4 * math.sqrt(0.5 / 20_000)


def base_config():
    return {
        "schema_version": 1,
        "device": {"preset": "paper-device"},
        "protocol": [
            {"type": "init", "qubit": 0, "method": "polarized_leads"},
            {"type": "esr", "b1": "1mT", "duration": "0ns"},
            {"type": "measure", "qubit": 0},
        ],
        "run": {"shots": 2000, "seed": 3},
    }


def test_sweep_rabi_curve():
    dot = DotParams()
    f1 = rabi_frequency(dot.g_d, 1e-3)
    durations = [f"{t}ns" for t in (0, 20, 40, 81, 120)]
    spec = SweepSpec("protocol.1.duration", durations, shots=4000)
    results = run_sweep(base_config(), spec, master_seed=5)
    from qdotspin.esr import bloch_trajectory, resonant_pulse
    from qdotspin.state import pure_up

    times = [0, 20e-9, 40e-9, 81e-9, 120e-9]
    m = bloch_trajectory(pure_up(), resonant_pulse(dot, 1e-3, 0), dot, times)
    expect = (1 - m[:, 2]) / 2
    for (value, res), p in zip(results, expect):
        assert abs(res.marginal(0, "down") - p) < 4 * math.sqrt(0.25 / 4000) + 1e-9
    buf = io.StringIO()
    write_sweep_csv(results, spec, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "parameter,value,p_estimate,ci_low,ci_high,shots"
    assert len(lines) == 6
    # seeds differ per point
    assert len({r.metadata["master_seed"] for _, r in results}) == len(results)
    assert f1 > 0


def test_sweep_cw_saturation():
    dot = DotParams()
    cfg = base_config()
    cfg["protocol"][1]["duration"] = "2ms"
    f1s = [20e3, 50e3, 150e3]
    b1s = [b1_for_rabi_frequency(dot.g_d, f) for f in f1s]
    results = run_sweep(cfg, SweepSpec("protocol.1.b1", b1s, shots=20_000), master_seed=1)
    for f, (_, res) in zip(f1s, results):
        p = cw_saturation_probability(f, dot.T1, dot.T2, dot.p_up_eq)
        assert abs(res.marginal(0, "up") - p) < 4 * math.sqrt(0.25 / 20_000)


def test_sweep_errors():
    with pytest.raises(ValueError):
        SweepSpec("protocol.1.duration", [])
    with pytest.raises(ProtocolError):
        run_sweep(base_config(), SweepSpec("protocol.9.duration", [1]), master_seed=1)
    with pytest.raises(ProtocolError):
        run_sweep(base_config(), SweepSpec("device.nonsense.x", [1]), master_seed=1)


def test_numeric_error_surfaces(monkeypatch):
    import qdotspin.harness as h

    monkeypatch.setattr(h, "bloch_ptm", lambda *a, **k: np.full((4, 4), np.nan))
    burst = EsrBurst(EsrPulse(DEV1.dots[0].larmor_frequency, 1e-3, 1e-9))
    with pytest.raises(NumericError) as info:
        run_protocol([Init(0, UP), burst, Measure(0)], DEV1, 10, 1)
    assert info.value.step == 1


def test_throughput():
    steps = [Init(0, HALF), Measure(0, ReadoutConfig())]
    run_protocol(steps, DEV1, 1000, 1)
    t0 = time.perf_counter()
    run_protocol(steps, DEV1, 500_000, 1)
    rate = 500_000 / (time.perf_counter() - t0)
    assert rate >= 1e5
