"""Two-spin exchange dynamics, SWAP / sqrt(SWAP) gates and the barrier model.

Spin operators are dimensionless with eigenvalues +-1/2.  With that
convention ``S1.S2`` has eigenvalue 1/4 on the triplets and -3/4 on the
singlet, so a full SWAP needs a pulse area ``J * t = h / 2`` and a
sqrt(SWAP) needs ``h / 4``.

The Zeeman term is ``-g mu_B B0 S_z`` per spin so that "up" (S_z = +1/2)
is the ground state; with g-factor signs dropped this is only a labelling
choice and does not change any measured probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .constants import CONSTANTS
from .state import SX, SY, SZ, SpinState, StateError, apply_unitary

__all__ = [
    "ExchangePulse",
    "BarrierModel",
    "spin_operators",
    "exchange_hamiltonian",
    "exchange_unitary",
    "exchange_evolve",
    "swap_gate",
    "sqrt_swap_gate",
    "swap_pulse",
    "sqrt_swap_pulse",
    "swap_time",
    "j_from_voltage",
    "j_energy_from_frequency",
    "concurrence",
    "equal_up_to_phase",
]


def spin_operators():
    """(S1, S2): each a tuple (Sx, Sy, Sz) of 4x4 operators."""
    eye = np.eye(2)
    s1 = tuple(np.kron(0.5 * p, eye) for p in (SX, SY, SZ))
    s2 = tuple(np.kron(eye, 0.5 * p) for p in (SX, SY, SZ))
    return s1, s2


_S1, _S2 = spin_operators()
S_DOT_S = sum(a @ b for a, b in zip(_S1, _S2))


def j_energy_from_frequency(j_over_h: float) -> float:
    return j_over_h * CONSTANTS.h


@dataclass(frozen=True)
class ExchangePulse:
    """Constant exchange ``J`` (eV) switched on for ``duration`` (s)."""

    J: float
    duration: float

    def __post_init__(self):
        if self.J < 0 or self.duration < 0:
            raise ValueError("J and duration must be non-negative")

    @classmethod
    def from_frequency(cls, j_over_h: float, duration: float) -> "ExchangePulse":
        return cls(j_energy_from_frequency(j_over_h), duration)

    @property
    def area(self) -> float:
        """Integrated exchange in units of h (0.5 for SWAP)."""
        return self.J * self.duration / CONSTANTS.h


def swap_time(J: float) -> float:
    """Duration of a SWAP at constant exchange energy ``J``: h / (2J)."""
    if not J > 0:
        raise ValueError("J must be positive")
    return CONSTANTS.h / (2 * J)


def swap_pulse(J: float) -> ExchangePulse:
    return ExchangePulse(J, swap_time(J))


def sqrt_swap_pulse(J: float) -> ExchangePulse:
    return ExchangePulse(J, swap_time(J) / 2)


@dataclass(frozen=True)
class BarrierModel:
    """Exchange that falls off exponentially with barrier-gate voltage."""

    J0: float
    V0: float
    v_ref: float = 0.0

    def __post_init__(self):
        if not (self.J0 > 0 and self.V0 > 0):
            raise ValueError("J0 and V0 must be positive")


def j_from_voltage(model: BarrierModel, v: float) -> float:
    return model.J0 * math.exp(-(v - model.v_ref) / model.V0)


def exchange_hamiltonian(J: float, g1: float, g2: float, B0: float) -> np.ndarray:
    """4x4 Hamiltonian in eV."""
    ez1 = g1 * CONSTANTS.mu_B * B0
    ez2 = g2 * CONSTANTS.mu_B * B0
    return -ez1 * _S1[2] - ez2 * _S2[2] + J * S_DOT_S


def exchange_unitary(pulse: ExchangePulse, g1: float, g2: float, B0: float) -> np.ndarray:
    h = exchange_hamiltonian(pulse.J, g1, g2, B0)
    return expm(-1j * h * pulse.duration / CONSTANTS.hbar)


def exchange_evolve(state: SpinState, pulse: ExchangePulse, g1: float, g2: float,
                    B0: float) -> SpinState:
    if state.dims != 4:
        raise StateError("exchange_evolve needs a two-spin state")
    return apply_unitary(state, exchange_unitary(pulse, g1, g2, B0))


def swap_gate() -> np.ndarray:
    """Textbook SWAP; exchange produces it up to a global phase."""
    return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def sqrt_swap_gate() -> np.ndarray:
    a, b = (1 + 1j) / 2, (1 - 1j) / 2
    return np.array([[1, 0, 0, 0], [0, a, b, 0], [0, b, a, 0], [0, 0, 0, 1]], dtype=complex)


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, atol: float = 1e-12) -> bool:
    """True if u = e^{i phi} v for some phase."""
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(u[k]) < 1e-15:
        return False
    phase = u[k] / v[k]
    phase /= abs(phase)
    return bool(np.max(np.abs(u - phase * v)) <= atol)


def concurrence(state: SpinState) -> float:
    """Wootters concurrence of a two-spin density matrix."""
    if state.dims != 4:
        raise StateError("concurrence needs a two-spin state")
    yy = np.kron(SY, SY)
    rho = state.rho
    rho_tilde = yy @ rho.conj() @ yy
    ev = np.linalg.eigvals(rho @ rho_tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))
