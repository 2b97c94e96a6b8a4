"""Physical constants, device parameter sets and static spin energetics.

Unit system used throughout the package: energies in eV, times in s,
fields in T, frequencies in Hz, temperatures in K.  Conversion helpers at
the bottom of the module translate to the micro-units people actually quote.

The g-factor sign is ignored everywhere: g values are magnitudes and the
Zeeman ground state is always labelled "up".
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

from scipy import constants as _sc

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "DotParams",
    "LeadParams",
    "DeviceParams",
    "ParameterRegimeWarning",
    "zeeman_splitting",
    "larmor_frequency",
    "thermal_up_probability",
    "thermal_down_probability",
    "polarization_condition_met",
    "paper_device",
    "to_micro_ev",
    "to_ghz",
]


class ParameterRegimeWarning(UserWarning):
    """Parameters are valid but outside the single-spin, orbital-ground-state regime."""


@dataclass(frozen=True)
class PhysicalConstants:
    mu_B: float = _sc.physical_constants["Bohr magneton in eV/T"][0]
    k_B: float = _sc.physical_constants["Boltzmann constant in eV/K"][0]
    h: float = _sc.physical_constants["Planck constant in eV/Hz"][0]
    mu_0: float = _sc.mu_0
    c: float = _sc.c

    @property
    def hbar(self) -> float:
        return self.h / (2 * math.pi)

    @property
    def mu_B_over_h(self) -> float:
        """Bohr magneton in Hz/T (about 13.996 GHz/T)."""
        return self.mu_B / self.h


CONSTANTS = PhysicalConstants()


def _require_positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class DotParams:
    """One gated dot holding a single electron.

    ``T1``/``T2`` may be ``math.inf`` to switch relaxation off.
    ``charging_energy`` and ``level_spacing`` are only used to warn when the
    Zeeman energy stops being the smallest scale.
    """

    g_d: float = 0.44
    B0: float = 5.0
    temperature: float = 0.1
    T1: float = 100e-6
    T2: float = 100e-9
    charging_energy: float = 3e-3
    level_spacing: float = 1e-3

    def __post_init__(self):
        for name in ("g_d", "B0", "temperature", "T1", "T2", "charging_energy", "level_spacing"):
            _require_positive(name, getattr(self, name))
        if self.T2 > 2 * self.T1:
            raise ValueError(f"T2 ({self.T2}) exceeds the physical bound 2*T1 ({2 * self.T1})")
        ez = self.zeeman_splitting
        if not (self.charging_energy > self.level_spacing > ez):
            warnings.warn(
                "expected charging_energy > level_spacing > Zeeman splitting "
                f"({self.charging_energy:.3g} eV, {self.level_spacing:.3g} eV, {ez:.3g} eV)",
                ParameterRegimeWarning,
                stacklevel=3,
            )

    @property
    def zeeman_splitting(self) -> float:
        return zeeman_splitting(self.g_d, self.B0)

    @property
    def larmor_frequency(self) -> float:
        return larmor_frequency(self.g_d, self.B0)

    @property
    def p_up_eq(self) -> float:
        """Thermal equilibrium probability of the ground state."""
        return thermal_up_probability(self.g_d, self.B0, self.temperature)

    def with_(self, **changes) -> "DotParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class LeadParams:
    """2DEG leads in the quantum Hall regime.

    ``g_l_eff`` is the exchange-enhanced g-factor; it may exceed the bare
    ``g_l`` by up to a factor of ten.  ``fermi_level_offset`` is E_F measured
    from the dot's up level (signed, eV).
    """

    g_l: float = 0.5
    g_l_eff: float = 5.0
    filling_factor: int = 1
    fermi_level_offset: float = -0.5e-3

    def __post_init__(self):
        _require_positive("g_l", self.g_l)
        if not self.g_l <= self.g_l_eff <= 10 * self.g_l:
            raise ValueError(
                f"g_l_eff must lie in [g_l, 10*g_l] = [{self.g_l}, {10 * self.g_l}], got {self.g_l_eff}"
            )
        if int(self.filling_factor) != self.filling_factor or self.filling_factor < 1:
            raise ValueError(f"filling_factor must be a positive integer, got {self.filling_factor!r}")


@dataclass(frozen=True)
class DeviceParams:
    """One or two dots sharing a static field, plus their leads."""

    dots: tuple[DotParams, ...] = field(default_factory=lambda: (DotParams(),))
    leads: LeadParams = field(default_factory=LeadParams)

    def __post_init__(self):
        dots = tuple(self.dots)
        object.__setattr__(self, "dots", dots)
        if len(dots) not in (1, 2):
            raise ValueError(f"a device holds one or two dots, got {len(dots)}")
        if len({d.B0 for d in dots}) != 1:
            raise ValueError("all dots of a device must see the same B0")

    @property
    def n_qubits(self) -> int:
        return len(self.dots)

    @property
    def B0(self) -> float:
        return self.dots[0].B0


def zeeman_splitting(g: float, B0: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Energy gap g*mu_B*B0 in eV."""
    if B0 < 0:
        raise ValueError(f"B0 must be non-negative, got {B0}")
    return g * constants.mu_B * B0


def larmor_frequency(g: float, B0: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Spin resonance frequency g*mu_B*B0/h in Hz."""
    return zeeman_splitting(g, B0, constants) / constants.h


def thermal_up_probability(g, B0, temperature, constants: PhysicalConstants = CONSTANTS) -> float:
    """Boltzmann occupation of the Zeeman ground state of an isolated spin."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    x = zeeman_splitting(g, B0, constants) / (constants.k_B * temperature)
    # logistic written to avoid exp overflow at large x
    return 1.0 / (1.0 + math.exp(-x))


def thermal_down_probability(g, B0, temperature, constants: PhysicalConstants = CONSTANTS) -> float:
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    x = zeeman_splitting(g, B0, constants) / (constants.k_B * temperature)
    return 1.0 / (1.0 + math.exp(x)) if x < 700 else 0.0


def polarization_condition_met(g, B0, temperature, constants: PhysicalConstants = CONSTANTS) -> bool:
    """Strict test of g*mu_B*B0 > 5 k_B T.

    Works for the dot (``g_d``) and for the leads (pass ``g_l_eff``).  Note
    that 5 T / 300 mK with g = 0.44 narrowly fails the strict inequality even
    though the resulting polarization is still above 99%.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return zeeman_splitting(g, B0, constants) > 5 * constants.k_B * temperature


def paper_device(n_qubits: int = 1) -> DeviceParams:
    """GaAs reference device: g = 0.44, 5 T, 100 mK, T1 = 100 us, T2 = 100 ns."""
    dot = DotParams(g_d=0.44, B0=5.0, temperature=0.1, T1=100e-6, T2=100e-9,
                    charging_energy=3e-3, level_spacing=1e-3)
    return DeviceParams(dots=(dot,) * n_qubits, leads=LeadParams())


def to_micro_ev(energy_ev: float) -> float:
    return energy_ev * 1e6


def to_ghz(frequency_hz: float) -> float:
    return frequency_hz * 1e-9
