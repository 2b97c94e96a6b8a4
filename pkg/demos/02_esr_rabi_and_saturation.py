"""
Driving the spin: Rabi oscillations and CW saturation
=====================================================
"""

import math

import numpy as np

from qdotspin.constants import DotParams
from qdotspin.esr import (
    b1_for_rabi_frequency,
    bloch_trajectory,
    cw_saturation_probability,
    evolve_bloch,
    min_observable_f1,
    rabi_frequency,
    resonant_pulse,
)
from qdotspin.state import pure_up

dot = DotParams()
f1 = rabi_frequency(dot.g_d, 1e-3)
print("B1 = 1 mT gives f1 = %.2f MHz (period %.0f ns)" % (f1 / 1e6, 1e9 / f1))

# with T2 = 100 ns the oscillation dies out within a couple of periods
times = np.linspace(0, 400e-9, 9)
m = bloch_trajectory(pure_up(), resonant_pulse(dot, 1e-3, 0.0), dot, times)
for t, mz in zip(times, m[:, 2]):
    print(f"t = {t * 1e9:5.0f} ns   Pr[down] = {(1 - mz) / 2:.3f}")

# a weak continuous drive is enough to disturb the spin
print("f1_min = %.1f kHz" % (min_observable_f1(dot.T1, dot.T2) / 1e3))
for f in (10e3, 50e3, 200e3):
    pulse = resonant_pulse(dot, b1_for_rabi_frequency(dot.g_d, f), 30 * dot.T1)
    p_num = evolve_bloch(pure_up(), pulse, dot).prob_up()
    p_cf = cw_saturation_probability(f, dot.T1, dot.T2)
    print(f"f1 = {f / 1e3:5.0f} kHz   integrated {p_num:.5f}   closed form {p_cf:.5f}")

# the pi pulse without damping
free = DotParams(T1=math.inf, T2=math.inf)
s = evolve_bloch(pure_up(), resonant_pulse(free, 1e-3, 1 / (2 * f1)), free)
print("pi pulse: Pr[down] = %.9f" % s.prob_down())
