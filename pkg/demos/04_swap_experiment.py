"""
A SWAP between a pure and a mixed qubit
=======================================

Qubit 1 starts up, qubit 2 is a 50/50 mixture.  Only after the exchange
pulse does qubit 2 always read up.
"""

from qdotspin.exchange import j_energy_from_frequency, swap_time
from qdotspin.harness import swap_demo_experiment

print("SWAP time at J/h = 20 GHz: %.1f ps" % (swap_time(j_energy_from_frequency(20e9)) * 1e12))

demo = swap_demo_experiment(p_up_q2=0.5, shots=10_000, seed=0)
for row, vals in demo.table().items():
    print(f"{row:7s} Pr[q1 up] = {vals['q1_up']:.3f}   Pr[q2 up] = {vals['q2_up']:.3f}")

print(demo.after.to_json()[:400], "...")
