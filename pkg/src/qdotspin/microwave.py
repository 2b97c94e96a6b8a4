"""Near-field ESR drive through an on-chip wire: field, current, losses, heat.

The series resistance of the wire is an input.  20 ohm reproduces the
quoted ~10 uW of ohmic loss at 1 mA amplitude and is used as the reference
value; no skin-effect model is attempted.  Cavity dissipation is a pure
B1^2 scaling anchored at 1 W for 1 mT, good for order-of-magnitude
comparisons only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import CONSTANTS

__all__ = [
    "WireGeometry",
    "ThermalBudget",
    "NearFieldReport",
    "BudgetReport",
    "REFERENCE_RESISTANCE",
    "GAAS_SURFACE_PERMITTIVITY",
    "wire_field",
    "required_current",
    "ohmic_power",
    "dissipated_power",
    "cavity_power_estimate",
    "near_field_check",
    "thermal_budget_check",
]

REFERENCE_RESISTANCE = 20.0
# average of vacuum and bulk GaAs (12.9) for a line on the substrate surface
GAAS_SURFACE_PERMITTIVITY = 6.9
CAVITY_REFERENCE_POWER = 1.0
CAVITY_REFERENCE_FIELD = 1e-3
DEFAULT_LOSS_OVERHEAD = 2.0
NEAR_FIELD_RATIO = 0.01


@dataclass(frozen=True)
class WireGeometry:
    distance_to_dot: float
    relative_permeability: float = 1.0
    resistance: float = REFERENCE_RESISTANCE

    def __post_init__(self):
        if not self.distance_to_dot > 0:
            raise ValueError("distance_to_dot must be positive")
        if self.resistance < 0:
            raise ValueError("resistance must be non-negative")
        if not self.relative_permeability > 0:
            raise ValueError("relative_permeability must be positive")

    @property
    def permeability(self) -> float:
        return self.relative_permeability * CONSTANTS.mu_0


@dataclass(frozen=True)
class ThermalBudget:
    available_power: float = 300e-6
    duty_cycle: float = 1.0

    def __post_init__(self):
        if not self.available_power > 0:
            raise ValueError("available_power must be positive")
        if not 0 <= self.duty_cycle <= 1:
            raise ValueError("duty_cycle must lie in [0, 1]")


def wire_field(current: float, geometry: WireGeometry) -> float:
    """B1 = mu I / (2 pi r) near a long straight wire."""
    if current < 0:
        raise ValueError("current must be non-negative")
    return geometry.permeability * current / (2 * math.pi * geometry.distance_to_dot)


def required_current(b1: float, geometry: WireGeometry) -> float:
    if b1 < 0:
        raise ValueError("b1 must be non-negative")
    return b1 * 2 * math.pi * geometry.distance_to_dot / geometry.permeability


def ohmic_power(current_amplitude: float, geometry: WireGeometry) -> float:
    """Time-averaged I^2 R / 2 for a sinusoidal current of the given amplitude."""
    if current_amplitude < 0:
        raise ValueError("current must be non-negative")
    return 0.5 * current_amplitude**2 * geometry.resistance


def dissipated_power(current_amplitude: float, geometry: WireGeometry,
                     loss_overhead: float = DEFAULT_LOSS_OVERHEAD) -> float:
    """Ohmic loss times an overhead factor standing in for dielectric and radiation loss."""
    if loss_overhead < 1:
        raise ValueError("loss_overhead must be at least 1")
    return loss_overhead * ohmic_power(current_amplitude, geometry)


def cavity_power_estimate(b1: float) -> float:
    if b1 < 0:
        raise ValueError("b1 must be non-negative")
    return CAVITY_REFERENCE_POWER * (b1 / CAVITY_REFERENCE_FIELD) ** 2


@dataclass(frozen=True)
class NearFieldReport:
    wavelength: float
    ratio: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.ratio < self.threshold

    def to_dict(self) -> dict:
        return {"wavelength": self.wavelength, "ratio": self.ratio,
                "threshold": self.threshold, "passed": self.passed}


def near_field_check(geometry: WireGeometry, frequency: float,
                     effective_permittivity: float = GAAS_SURFACE_PERMITTIVITY,
                     threshold: float = NEAR_FIELD_RATIO) -> NearFieldReport:
    """Is the dot deep in the wire's near field (r / lambda below ``threshold``)?"""
    if not frequency > 0:
        raise ValueError("frequency must be positive")
    if effective_permittivity < 1:
        raise ValueError("effective_permittivity must be at least 1")
    wavelength = CONSTANTS.c / (frequency * math.sqrt(effective_permittivity))
    return NearFieldReport(wavelength, geometry.distance_to_dot / wavelength, threshold)


@dataclass(frozen=True)
class BudgetReport:
    effective_power: float
    available_power: float

    @property
    def passed(self) -> bool:
        return self.effective_power < self.available_power

    @property
    def margin(self) -> float:
        if self.effective_power == 0:
            return math.inf
        return self.available_power / self.effective_power

    def to_dict(self) -> dict:
        return {"effective_power": self.effective_power, "available_power": self.available_power,
                "passed": self.passed, "margin": self.margin}


def thermal_budget_check(power: float, budget: ThermalBudget) -> BudgetReport:
    if power < 0:
        raise ValueError("power must be non-negative")
    return BudgetReport(power * budget.duty_cycle, budget.available_power)
