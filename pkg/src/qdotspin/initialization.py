"""Preparing the dot spin: thermal equilibration and tunnelling from the leads."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import (
    CONSTANTS,
    DotParams,
    LeadParams,
    polarization_condition_met,
    zeeman_splitting,
)
from .state import SpinState, StateError, mixed

__all__ = [
    "InitVariant",
    "InitMethod",
    "UnpolarizedLeadsError",
    "DEFAULT_TUNNEL_TIME",
    "relaxation_ptm",
    "thermal_init",
    "lead_polarization",
    "polarized_lead_init",
    "mixed_lead_init",
    "initialize",
]

DEFAULT_TUNNEL_TIME = 0.1e-6


class UnpolarizedLeadsError(ValueError):
    """The nu = 1 leads are not spin polarized at these parameters."""


class InitVariant(str, Enum):
    THERMAL = "thermal"
    POLARIZED_LEADS = "polarized_leads"
    PARTIALLY_POLARIZED_LEADS = "partially_polarized_leads"


@dataclass(frozen=True)
class InitMethod:
    variant: InitVariant
    wait_time: float = 0.0
    lead_polarization: float = 1.0
    tunnel_time: float = DEFAULT_TUNNEL_TIME
    spin_flip_probability: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", InitVariant(self.variant))
        if self.wait_time < 0:
            raise ValueError("wait_time must be non-negative")
        if not 0 <= self.lead_polarization <= 1:
            raise ValueError("lead_polarization must lie in [0, 1]")
        if not self.tunnel_time > 0:
            raise ValueError("tunnel_time must be positive")
        if not 0 <= self.spin_flip_probability <= 1:
            raise ValueError("spin_flip_probability must lie in [0, 1]")

    @property
    def duration(self) -> float:
        return self.wait_time if self.variant is InitVariant.THERMAL else self.tunnel_time


def relaxation_ptm(dot: DotParams, t: float) -> np.ndarray:
    """Pauli transfer matrix of free T1/T2 relaxation for a time ``t``.

    Populations relax to the thermal value, coherences decay with T2.  The
    map is completely positive whenever T2 <= 2 T1.
    """
    e1 = math.exp(-t / dot.T1)
    e2 = math.exp(-t / dot.T2)
    m_eq = 2 * dot.p_up_eq - 1
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, e2, 0.0, 0.0],
            [0.0, 0.0, e2, 0.0],
            [m_eq * (1 - e1), 0.0, 0.0, e1],
        ]
    )


def thermal_init(dot: DotParams, initial: SpinState, wait_time: float) -> tuple[SpinState, float]:
    """Let the spin relax toward thermal equilibrium for ``wait_time``.

    Roughly 5 T1 is needed before the residual distance to equilibrium drops
    to about 1%.
    """
    if initial.dims != 2:
        raise StateError("thermal_init acts on a single spin")
    if wait_time < 0:
        raise ValueError("wait_time must be non-negative")
    if wait_time == 0:
        return initial, 0.0
    p_eq = dot.p_up_eq
    e1 = math.exp(-wait_time / dot.T1)
    e2 = math.exp(-wait_time / dot.T2)
    rho = initial.rho
    p_up = p_eq + (rho[0, 0].real - p_eq) * e1
    coh = rho[0, 1] * e2
    out = np.array([[p_up, coh], [np.conj(coh), 1 - p_up]])
    return SpinState(out), wait_time


def lead_polarization(dot: DotParams, leads: LeadParams) -> float:
    """Up occupation of the lowest spin-split Landau level (two-level Boltzmann)."""
    x = zeeman_splitting(leads.g_l_eff, dot.B0) / (CONSTANTS.k_B * dot.temperature)
    return 1.0 / (1.0 + math.exp(-x))


def _flip(p_up, q):
    return p_up * (1 - q) + (1 - p_up) * q


def polarized_lead_init(
    dot: DotParams,
    leads: LeadParams,
    tunnel_time: float = DEFAULT_TUNNEL_TIME,
    spin_flip_probability: float = 0.0,
) -> tuple[SpinState, float]:
    """Load the empty dot with an electron from nu = 1, spin-polarized leads."""
    if leads.filling_factor != 1:
        raise UnpolarizedLeadsError(
            f"pure-state loading needs filling factor 1, got {leads.filling_factor}"
        )
    if not polarization_condition_met(leads.g_l_eff, dot.B0, dot.temperature):
        raise UnpolarizedLeadsError(
            f"g_l_eff*mu_B*B0 = {zeeman_splitting(leads.g_l_eff, dot.B0):.3e} eV does not exceed "
            f"5 k_B T = {5 * CONSTANTS.k_B * dot.temperature:.3e} eV"
        )
    if not tunnel_time > 0:
        raise ValueError("tunnel_time must be positive")
    p_up = _flip(lead_polarization(dot, leads), spin_flip_probability)
    return mixed(p_up), tunnel_time


def mixed_lead_init(
    dot: DotParams,
    leads: LeadParams,
    p_up_target: float,
    tunnel_time: float = DEFAULT_TUNNEL_TIME,
    spin_flip_probability: float = 0.0,
) -> tuple[SpinState, float]:
    """Load from unpolarized or partially polarized leads.

    The gate-tuned combination of lead polarization, Fermi level and edge
    state distances is summarised by the single knob ``p_up_target``.
    """
    if not 0 <= p_up_target <= 1:
        raise ValueError(f"probability out of range: {p_up_target}")
    if not tunnel_time > 0:
        raise ValueError("tunnel_time must be positive")
    return mixed(_flip(p_up_target, spin_flip_probability)), tunnel_time


def initialize(method: InitMethod, dot: DotParams, leads: LeadParams,
               initial: SpinState | None = None) -> tuple[SpinState, float]:
    """Dispatch on ``method.variant``.

    Thermal equilibration starts from ``initial``, defaulting to a freshly
    loaded electron of unknown spin (maximally mixed).
    """
    if method.variant is InitVariant.THERMAL:
        return thermal_init(dot, initial if initial is not None else mixed(0.5), method.wait_time)
    if method.variant is InitVariant.POLARIZED_LEADS:
        return polarized_lead_init(dot, leads, method.tunnel_time, method.spin_flip_probability)
    return mixed_lead_init(dot, leads, method.lead_polarization, method.tunnel_time,
                           method.spin_flip_probability)
