"""
Energy scales and spin initialization
=====================================

How big is the Zeeman splitting of a GaAs dot electron, and how well does
waiting (or loading from polarized leads) prepare it in the up state?
"""

import numpy as np

from qdotspin import constants as c
from qdotspin.initialization import InitMethod, initialize, thermal_init
from qdotspin.state import pure_down

dev = c.paper_device()
dot, leads = dev.dots[0], dev.leads

print("Zeeman splitting at 1 T: %.2f ueV" % c.to_micro_ev(c.zeeman_splitting(0.44, 1.0)))
print("Larmor frequency at 5 T: %.2f GHz" % c.to_ghz(dot.larmor_frequency))

# thermal polarization against temperature at 5 T
for T in (0.05, 0.1, 0.3, 1.0):
    p = c.thermal_up_probability(dot.g_d, dot.B0, T)
    ok = c.polarization_condition_met(dot.g_d, dot.B0, T)
    print(f"T = {T * 1e3:5.0f} mK   Pr[up] = {p:.5f}   dE > 5kT: {ok}")

# relaxing from down: about five T1 to get within 1% of equilibrium
warm = dot.with_(temperature=0.3)
for n in (1, 2, 5, 10):
    s, _ = thermal_init(warm, pure_down(), n * warm.T1)
    print(f"{n:2d} T1: Pr[up] = {s.prob_up():.4f} (equilibrium {warm.p_up_eq:.4f})")

# tunnelling in from nu = 1 leads is much faster
s, t = initialize(InitMethod("polarized_leads"), dot, leads)
print("polarized leads: Pr[up] = %.6f after %.1f us" % (s.prob_up(), t * 1e6))

s, t = initialize(InitMethod("partially_polarized_leads", lead_polarization=0.7), dot, leads)
print("partially polarized leads:", np.round(s.rho.real, 3).tolist())
