"""
Microwave engineering: wire versus cavity
=========================================
"""

from qdotspin.esr import rabi_frequency
from qdotspin.microwave import (
    ThermalBudget,
    WireGeometry,
    cavity_power_estimate,
    dissipated_power,
    near_field_check,
    required_current,
    thermal_budget_check,
)

wire = WireGeometry(distance_to_dot=200e-9)
for b1 in (1e-5, 1e-4, 1e-3):
    i = required_current(b1, wire)
    p = dissipated_power(i, wire)
    budget = thermal_budget_check(p, ThermalBudget())
    print(f"B1 = {b1 * 1e3:6.3f} mT  f1 = {rabi_frequency(0.44, b1) / 1e6:6.3f} MHz  I = {i * 1e3:.3f} mA  "
          f"P_wire = {p * 1e6:8.3f} uW  P_cavity = {cavity_power_estimate(b1):.1e} W  fits budget: {budget.passed}")

print(near_field_check(wire, 30e9).to_dict())
