"""Driven, damped single-spin dynamics (Bloch equations) and ESR formulas.

Conventions
-----------
* ``b1_amplitude`` is the rotating-frame drive amplitude, so the Rabi
  frequency is ``f1 = g mu_B b1 / h``.  The equivalent lab-frame linear field
  has amplitude ``2 b1``.
* Detuning is ``larmor - carrier``.  In the rotating frame the precession
  vector is ``2 pi (f1 cos(phase), f1 sin(phase), detuning)`` and the
  magnetization obeys ``dM/dt = Omega x M - (Mx/T2, My/T2, (Mz - M_eq)/T1)``
  with ``M_eq = 2 p_up_eq - 1``.
* Integration uses classic fixed-step RK4.  For the (default) rotating-wave
  case the generator is constant, so one RK4 step is a fixed 4x4 matrix
  (the degree-4 Taylor polynomial of ``exp(h A)``) and ``n`` steps are its
  ``n``-th power.  This is the same arithmetic as stepping, evaluated by
  repeated squaring, which makes long CW drives cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import CONSTANTS, DotParams, larmor_frequency
from .state import SpinState, StateError, apply_ptm

__all__ = [
    "EsrPulse",
    "Frame",
    "BlochSettings",
    "StepSizeError",
    "rabi_frequency",
    "b1_for_rabi_frequency",
    "bloch_generator",
    "bloch_ptm",
    "evolve_bloch",
    "bloch_trajectory",
    "steady_state_bloch",
    "cw_saturation_probability",
    "min_observable_f1",
    "detuning_for_addressing",
    "resonant_pulse",
]

# steps per fastest period when the caller leaves the step size to us
_AUTO_STEPS_PER_PERIOD = 1000
_AUTO_STEPS_PER_DECAY = 200
MAX_STEP_FRACTION = 1 / 20


class StepSizeError(ValueError):
    pass


class Frame(str, Enum):
    ROTATING = "rotating"
    LAB = "lab"


@dataclass(frozen=True)
class EsrPulse:
    """Rectangular microwave burst."""

    carrier_frequency: float
    b1_amplitude: float
    duration: float
    phase: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("pulse duration must be non-negative")
        if self.b1_amplitude < 0:
            raise ValueError("b1_amplitude must be non-negative")
        if self.carrier_frequency < 0:
            raise ValueError("carrier_frequency must be non-negative")


@dataclass(frozen=True)
class BlochSettings:
    """Integrator options.  ``integrator_step=None`` picks a step automatically."""

    integrator_step: float | None = None
    frame: Frame = Frame.ROTATING
    rwa_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame(self.frame))
        if self.integrator_step is not None and not self.integrator_step > 0:
            raise StepSizeError("integrator_step must be positive")


def rabi_frequency(g: float, b1: float) -> float:
    """Rabi frequency in Hz for rotating-frame amplitude ``b1`` (T)."""
    if b1 < 0:
        raise ValueError("b1 must be non-negative")
    return g * CONSTANTS.mu_B * b1 / CONSTANTS.h


def b1_for_rabi_frequency(g: float, f1: float) -> float:
    if f1 < 0:
        raise ValueError("f1 must be non-negative")
    return f1 * CONSTANTS.h / (g * CONSTANTS.mu_B)


def resonant_pulse(dot: DotParams, b1: float, duration: float, phase: float = 0.0) -> EsrPulse:
    """Pulse whose carrier sits exactly on the dot's Larmor frequency."""
    return EsrPulse(dot.larmor_frequency, b1, duration, phase)


def _rate(t):
    return 0.0 if math.isinf(t) else 1.0 / t


def bloch_generator(f1: float, detuning: float, phase: float, T1: float, T2: float,
                    m_eq: float) -> np.ndarray:
    """Generator A of d/dt (1, Mx, My, Mz) = A (1, Mx, My, Mz)."""
    wx = 2 * math.pi * f1 * math.cos(phase)
    wy = 2 * math.pi * f1 * math.sin(phase)
    wz = 2 * math.pi * detuning
    r1, r2 = _rate(T1), _rate(T2)
    return np.array(
        [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, -r2, -wz, wy],
            [0.0, wz, -r2, -wx],
            [m_eq * r1, -wy, wx, -r1],
        ]
    )


def _rk4_matrix(a: np.ndarray, h: float) -> np.ndarray:
    ha = h * a
    out = np.eye(4)
    term = np.eye(4)
    for k in range(1, 5):
        term = term @ ha / k
        out = out + term
    return out


def _pulse_rates(pulse: EsrPulse, dot: DotParams):
    f1 = rabi_frequency(dot.g_d, pulse.b1_amplitude)
    detuning = larmor_frequency(dot.g_d, dot.B0) - pulse.carrier_frequency
    return f1, detuning


def _choose_steps(duration, fastest, dot, settings):
    """Number of equal RK4 steps covering ``duration``."""
    if settings.integrator_step is not None:
        if fastest > 0 and settings.integrator_step > MAX_STEP_FRACTION / fastest:
            raise StepSizeError(
                f"integrator_step {settings.integrator_step:.3e} s exceeds 1/(20 * {fastest:.3e} Hz)"
            )
        h = settings.integrator_step
    else:
        candidates = []
        if fastest > 0:
            candidates.append(1.0 / (_AUTO_STEPS_PER_PERIOD * fastest))
        shortest = min(dot.T1, dot.T2)
        if not math.isinf(shortest):
            candidates.append(shortest / _AUTO_STEPS_PER_DECAY)
        h = min(candidates) if candidates else duration
    if duration == 0:
        return 0, 0.0
    n = max(1, math.ceil(duration / h - 1e-9))
    return n, duration / n


def _lab_rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    r = np.eye(4)
    r[1:3, 1:3] = [[c, -s], [s, c]]
    return r


def bloch_ptm(pulse: EsrPulse, dot: DotParams, settings: BlochSettings | None = None) -> np.ndarray:
    """Pauli transfer matrix of the pulse (dissipation included)."""
    settings = settings or BlochSettings()
    f1, detuning = _pulse_rates(pulse, dot)
    m_eq = 2 * dot.p_up_eq - 1
    if settings.rwa_enabled:
        fastest = max(f1, abs(detuning))
        n, h = _choose_steps(pulse.duration, fastest, dot, settings)
        if n == 0:
            ptm = np.eye(4)
        else:
            a = bloch_generator(f1, detuning, pulse.phase, dot.T1, dot.T2, m_eq)
            ptm = np.linalg.matrix_power(_rk4_matrix(a, h), n)
    else:
        ptm = _counter_rotating_ptm(pulse, dot, settings, f1, detuning, m_eq)
    if settings.frame is Frame.LAB:
        ptm = _lab_rotation(2 * math.pi * pulse.carrier_frequency * pulse.duration) @ ptm
    return ptm


def _counter_rotating_ptm(pulse, dot, settings, f1, detuning, m_eq):
    # rotating-frame equation with the counter-rotating half of the linear drive kept
    wc = 2 * math.pi * pulse.carrier_frequency
    fastest = max(f1, abs(detuning), 2 * pulse.carrier_frequency)
    n, h = _choose_steps(pulse.duration, fastest, dot, settings)
    base = bloch_generator(f1, detuning, pulse.phase, dot.T1, dot.T2, m_eq)
    w1 = 2 * math.pi * f1
    phi = pulse.phase

    def gen(t):
        a = base.copy()
        cx = w1 * math.cos(2 * wc * t + phi)
        cy = -w1 * math.sin(2 * wc * t + phi)
        a[1, 3] += cy
        a[2, 3] -= cx
        a[3, 1] -= cy
        a[3, 2] += cx
        return a

    y = np.eye(4)
    t = 0.0
    for _ in range(n):
        a0, am, a1 = gen(t), gen(t + h / 2), gen(t + h)
        k1 = a0 @ y
        k2 = am @ (y + h / 2 * k1)
        k3 = am @ (y + h / 2 * k2)
        k4 = a1 @ (y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def evolve_bloch(state: SpinState, pulse: EsrPulse, dot: DotParams,
                 settings: BlochSettings | None = None) -> SpinState:
    """Propagate a single spin through ``pulse`` including T1/T2 damping."""
    if state.dims != 2:
        raise StateError("evolve_bloch acts on a single spin")
    return apply_ptm(state, bloch_ptm(pulse, dot, settings))


def bloch_trajectory(state: SpinState, pulse: EsrPulse, dot: DotParams, times,
                     settings: BlochSettings | None = None) -> np.ndarray:
    """Bloch vectors after pulses of the given durations, shape (len(times), 3)."""
    out = []
    for t in np.asarray(times, dtype=float):
        p = EsrPulse(pulse.carrier_frequency, pulse.b1_amplitude, float(t), pulse.phase)
        s = evolve_bloch(state, p, dot, settings)
        out.append([2 * s.rho[0, 1].real, -2 * s.rho[0, 1].imag, (s.rho[0, 0] - s.rho[1, 1]).real])
    return np.array(out)


def steady_state_bloch(f1: float, detuning: float, dot: DotParams) -> np.ndarray:
    """Fixed point of the damped Bloch equations under a continuous drive."""
    if math.isinf(dot.T1) or math.isinf(dot.T2):
        raise ValueError("steady state needs finite T1 and T2")
    a = bloch_generator(f1, detuning, 0.0, dot.T1, dot.T2, 2 * dot.p_up_eq - 1)
    return np.linalg.solve(a[1:, 1:], -a[1:, 0])


def cw_saturation_probability(f1: float, T1: float, T2: float, p_eq: float = 1.0) -> float:
    """Steady-state up probability under resonant CW drive.

    ``[1 + 1/(1 + (2 pi f1)^2 T1 T2)] / 2`` for a fully polarized spin; a
    thermal ``p_eq < 1`` scales the polarization term accordingly.
    """
    if not (f1 >= 0 and T1 > 0 and T2 > 0):
        raise ValueError("f1 must be non-negative and T1, T2 positive")
    s = (2 * math.pi * f1) ** 2 * T1 * T2
    return 0.5 + (p_eq - 0.5) / (1 + s)


def min_observable_f1(T1: float, T2: float) -> float:
    """Rabi frequency at which CW saturation becomes appreciable, 1/(2 pi sqrt(T1 T2))."""
    if not (T1 > 0 and T2 > 0):
        raise ValueError("T1 and T2 must be positive")
    return 1.0 / (2 * math.pi * math.sqrt(T1 * T2))


def detuning_for_addressing(g_base: float, g_shifted: float, B0: float,
                            mode: str = "signed") -> float:
    """Resonance shift available by moving one electron to a different g.

    ``mode="signed"`` uses ``|g_base - g_shifted|`` with the signs as given
    (-0.44 to +0.4 gives 0.84); ``mode="magnitude"`` uses ``||g_base| - |g_shifted||``
    (the same pair gives 0.04).
    """
    if B0 < 0:
        raise ValueError("B0 must be non-negative")
    if mode == "signed":
        dg = abs(g_base - g_shifted)
    elif mode == "magnitude":
        dg = abs(abs(g_base) - abs(g_shifted))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return dg * CONSTANTS.mu_B * B0 / CONSTANTS.h
