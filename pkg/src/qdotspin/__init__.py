"""Simulation and engineering calculators for electron-spin qubits in gated quantum dots."""

__version__ = "0.1.0"

from .constants import (  # noqa: E402
    CONSTANTS,
    DeviceParams,
    DotParams,
    LeadParams,
    larmor_frequency,
    paper_device,
    polarization_condition_met,
    thermal_down_probability,
    thermal_up_probability,
    zeeman_splitting,
)
from .state import SpinState, BlochVector, pure_up, pure_down, mixed, tensor, partial_trace, to_bloch, from_bloch  # noqa: E402
