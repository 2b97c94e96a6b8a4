"""
Spin-to-charge readout
======================

Monte Carlo shots against the closed-form fidelity, and the configurations
that tell us nothing about the spin.
"""

from qdotspin.constants import DotParams
from qdotspin.readout import (
    DetectorModel,
    ReadoutConfig,
    analytic_fidelity,
    outcome_spin_mutual_information,
    simulate_shots,
    timing_chain_check,
)

cfg = ReadoutConfig(gamma_up_out=1e7, gamma_down_out=1e2, measurement_window=5e-6)
det = DetectorModel(noise_sigma_at_1us=0.1)  # assumed detector noise

report = timing_chain_check(cfg, DotParams())
for link in report.links:
    print(f"{link.name:12s} {'ok' if link.passed else 'FAIL'}   margin {link.margin:.3g}")

f_up, f_down = analytic_fidelity(cfg, det)
up = simulate_shots(1.0, cfg, det, seed=1, shots=200_000)
down = simulate_shots(0.0, cfg, det, seed=2, shots=200_000)
print("F_up   analytic %.6f  MC %.6f" % (f_up, (up.declared == 0).mean()))
print("F_down analytic %.6f  MC %.6f" % (f_down, (down.declared == 1).mean()))

# longer windows average the noise down but give the down electron time to leave
for tm in (1e-6, 5e-6, 20e-6, 100e-6):
    print("T_m = %6.1f us  F = %s" % (tm * 1e6, analytic_fidelity(cfg.with_(measurement_window=tm), det)))

for scheme in ("rate_selective", "broken_midgap_ef", "broken_both_below_ef", "broken_unselective"):
    batch = simulate_shots(0.5, ReadoutConfig(scheme, gamma_down_out=1e5), det, seed=3, shots=100_000)
    print(f"{scheme:22s} MI = {outcome_spin_mutual_information(batch):.4f} bit")
