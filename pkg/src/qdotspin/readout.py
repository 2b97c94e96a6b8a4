"""Single-shot spin-to-charge readout.

A shot draws the true spin, samples memoryless tunnelling events inside the
measurement window ``T_m``, averages the detector signal over the window,
adds white Gaussian noise and thresholds.  Besides the two working
spin-selective schemes (rate-selective and energy-threshold tunnelling out,
and singlet-triplet tunnelling in) the module models the configurations
that do *not* yield spin information, plus the Coulomb-blockade "off" state.

Every shot consumes four uniform draws with fixed roles (slot 0: spin,
slot 1: first tunnel event, slot 2: reload, slot 3: detector noise), so a
shot simulated on its own and the same shot inside a vectorised batch give
identical results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from .constants import DotParams
from .rng import ShotStream, counter_uniform

__all__ = [
    "ReadoutScheme",
    "Spin",
    "ReadoutConfig",
    "DetectorModel",
    "ReadoutRecord",
    "ShotBatch",
    "InsufficientSamplesError",
    "TimingLink",
    "TimingReport",
    "ROBUST_SPLITTING",
    "NOISE_ASSUMPTION",
    "rate_ratio_from_tunnel_distance",
    "simulate_shot",
    "simulate_singlet_triplet_shot",
    "simulate_shots",
    "analytic_fidelity",
    "timing_chain_check",
    "outcome_spin_mutual_information",
]

N_SLOTS = 4
# singlet-triplet splittings from about half a meV up count as "of order a meV"
ROBUST_SPLITTING = 0.5e-3
NOISE_ASSUMPTION = "detector noise_sigma_at_1us is an assumed value, not a measured one"


class ReadoutScheme(str, Enum):
    RATE_SELECTIVE = "rate_selective"
    ENERGY_THRESHOLD = "energy_threshold"
    SINGLET_TRIPLET = "singlet_triplet"
    BROKEN_BOTH_BELOW_EF = "broken_both_below_ef"
    BROKEN_MIDGAP_EF = "broken_midgap_ef"
    BROKEN_UNSELECTIVE = "broken_unselective"
    OFF = "off"


class Spin(str, Enum):
    UP = "up"
    DOWN = "down"


class InsufficientSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class ReadoutConfig:
    """Tunnel rates (Hz), window length (s) and scheme.

    ``ENERGY_THRESHOLD`` forces ``gamma_down_out`` to zero (the down exit is
    energetically closed) and ``BROKEN_UNSELECTIVE`` forces it equal to
    ``gamma_up_out``.  ``gamma_in`` is the loading rate wherever loading is
    energetically allowed (reload in the mid-gap configuration, second
    electron in the singlet-triplet scheme).
    """

    scheme: ReadoutScheme = ReadoutScheme.RATE_SELECTIVE
    gamma_up_out: float = 1e7
    gamma_down_out: float = 1e2
    gamma_in: float = 1e7
    measurement_window: float = 5e-6
    singlet_triplet_splitting: float = 1e-3

    def __post_init__(self):
        scheme = ReadoutScheme(self.scheme)
        object.__setattr__(self, "scheme", scheme)
        for name in ("gamma_up_out", "gamma_down_out", "gamma_in"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.measurement_window > 0:
            raise ValueError("measurement_window must be positive")
        if scheme is ReadoutScheme.ENERGY_THRESHOLD:
            object.__setattr__(self, "gamma_down_out", 0.0)
        elif scheme is ReadoutScheme.BROKEN_UNSELECTIVE:
            object.__setattr__(self, "gamma_down_out", self.gamma_up_out)
        elif scheme is ReadoutScheme.RATE_SELECTIVE and not self.gamma_up_out > self.gamma_down_out:
            raise ValueError("rate-selective readout needs gamma_up_out > gamma_down_out")
        if scheme is ReadoutScheme.SINGLET_TRIPLET and not self.singlet_triplet_splitting > 0:
            raise ValueError("singlet-triplet readout needs a positive splitting")

    @property
    def tunnel_time(self) -> float:
        """T_t: mean time for the electron that is supposed to tunnel."""
        rate = self.gamma_in if self.scheme is ReadoutScheme.SINGLET_TRIPLET else self.gamma_up_out
        return math.inf if rate == 0 else 1.0 / rate

    @property
    def no_tunnel_time(self) -> float:
        """T_nt: mean dwell time of the electron that is not supposed to tunnel."""
        if self.scheme is ReadoutScheme.SINGLET_TRIPLET:
            return math.inf
        return math.inf if self.gamma_down_out == 0 else 1.0 / self.gamma_down_out

    @property
    def robust(self) -> bool:
        return (self.scheme is ReadoutScheme.SINGLET_TRIPLET
                and self.singlet_triplet_splitting >= ROBUST_SPLITTING)

    def with_(self, **changes) -> "ReadoutConfig":
        return replace(self, **changes)

    @classmethod
    def ideal(cls, measurement_window: float = 5e-6) -> "ReadoutConfig":
        """Energy-threshold readout with an essentially instantaneous up exit."""
        return cls(ReadoutScheme.ENERGY_THRESHOLD, gamma_up_out=1e12,
                   measurement_window=measurement_window)

    @classmethod
    def from_tunnel_distances(cls, gamma_up_out: float, distance_offset: float,
                              decay_length: float, **kwargs) -> "ReadoutConfig":
        """Rate-selective config whose down rate is suppressed by a longer tunnel distance."""
        ratio = rate_ratio_from_tunnel_distance(distance_offset, decay_length)
        return cls(ReadoutScheme.RATE_SELECTIVE, gamma_up_out=gamma_up_out,
                   gamma_down_out=gamma_up_out * ratio, **kwargs)


def rate_ratio_from_tunnel_distance(distance_offset: float, decay_length: float) -> float:
    """gamma_down / gamma_up = exp(-offset / decay_length) for a rate decay length."""
    if distance_offset < 0 or not decay_length > 0:
        raise ValueError("need distance_offset >= 0 and decay_length > 0")
    return math.exp(-distance_offset / decay_length)


@dataclass(frozen=True)
class DetectorModel:
    """Charge detector: signal per charge state plus white noise.

    The standard deviation of the window-averaged signal is
    ``noise_sigma_at_1us * sqrt(1 us / T_m)``.
    """

    charge_levels: tuple[float, float, float] = (0.0, 1.0, 2.0)
    noise_sigma_at_1us: float = 0.0
    threshold: float = 0.5

    def __post_init__(self):
        levels = tuple(float(x) for x in self.charge_levels)
        object.__setattr__(self, "charge_levels", levels)
        if len(levels) != 3 or not np.allclose(np.diff(levels), 1.0, rtol=0, atol=1e-12):
            raise ValueError("charge_levels must be three values one unit apart")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie strictly between 0 and 1")
        if self.noise_sigma_at_1us < 0:
            raise ValueError("noise_sigma_at_1us must be non-negative")

    def sigma(self, window: float) -> float:
        return self.noise_sigma_at_1us * math.sqrt(1e-6 / window)


@dataclass(frozen=True)
class ReadoutRecord:
    true_spin: Spin
    tunnel_out_time: float | None
    reload_time: float | None
    window_avg_signal: float
    declared: Spin | None
    charge_trajectory: tuple[tuple[float, int], ...]
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def final_charge(self) -> int:
        return self.charge_trajectory[-1][1]


_DECLARED = {0: Spin.UP, 1: Spin.DOWN, -1: None}


@dataclass(frozen=True)
class ShotBatch:
    """Vectorised shot results; ``declared`` is 0 (up), 1 (down) or -1 (no result).

    ``event_time`` is the tunnel-out time (or, for singlet-triplet, the
    tunnel-in time of the second electron); ``inf`` when nothing happened
    inside the window.
    """

    config: ReadoutConfig
    true_up: np.ndarray
    event_time: np.ndarray
    reload_time: np.ndarray
    signal: np.ndarray
    declared: np.ndarray
    final_charge: np.ndarray

    def __len__(self):
        return len(self.true_up)

    def record(self, i: int) -> ReadoutRecord:
        cfg = self.config
        t_ev = float(self.event_time[i])
        t_re = float(self.reload_time[i])
        singlet = cfg.scheme is ReadoutScheme.SINGLET_TRIPLET
        traj = [(0.0, 1)]
        if math.isfinite(t_ev):
            traj.append((t_ev, 2 if singlet else 0))
        if math.isfinite(t_re):
            traj.append((t_re, 1))
        meta = {"scheme": cfg.scheme.value}
        if singlet:
            meta["robust"] = cfg.robust
        return ReadoutRecord(
            true_spin=Spin.UP if self.true_up[i] else Spin.DOWN,
            tunnel_out_time=None if singlet or not math.isfinite(t_ev) else t_ev,
            reload_time=t_re if math.isfinite(t_re) else None,
            window_avg_signal=float(self.signal[i]),
            declared=_DECLARED[int(self.declared[i])],
            charge_trajectory=tuple(traj),
            metadata=meta,
        )

    def records(self) -> list[ReadoutRecord]:
        return [self.record(i) for i in range(len(self))]


def _exp_time(u, rate):
    rate = np.broadcast_to(np.asarray(rate, dtype=float), u.shape)
    out = np.full(u.shape, np.inf)
    ok = rate > 0
    out[ok] = -np.log1p(-u[ok]) / rate[ok]
    return out


def _simulate_core(p_up, config: ReadoutConfig, detector: DetectorModel, u: np.ndarray) -> ShotBatch:
    """All schemes, vectorised over the columns of ``u`` (shape (4, n))."""
    scheme = config.scheme
    tm = config.measurement_window
    n = u.shape[1]
    true_up = u[0] < np.asarray(p_up, dtype=float)
    never = np.full(n, np.inf)
    reload = never

    if scheme in (ReadoutScheme.RATE_SELECTIVE, ReadoutScheme.ENERGY_THRESHOLD,
                  ReadoutScheme.BROKEN_UNSELECTIVE):
        t = _exp_time(u[1], np.where(true_up, config.gamma_up_out, config.gamma_down_out))
        t = np.where(t < tm, t, np.inf)
        avg_charge = np.minimum(t, tm) / tm  # fraction of the window still occupied
        final = np.where(np.isfinite(t), 0, 1)
    elif scheme is ReadoutScheme.BROKEN_MIDGAP_EF:
        t = _exp_time(u[1], np.where(true_up, 0.0, config.gamma_down_out))
        t = np.where(t < tm, t, np.inf)
        reload = np.where(np.isfinite(t), t + _exp_time(u[2], config.gamma_in), np.inf)
        empty = np.where(np.isfinite(t), np.minimum(reload, tm) - t, 0.0)
        avg_charge = 1.0 - empty / tm
        final = np.ones(n, dtype=int)
    elif scheme is ReadoutScheme.SINGLET_TRIPLET:
        t = _exp_time(u[1], np.where(true_up, 0.0, config.gamma_in))
        t = np.where(t < tm, t, np.inf)
        avg_charge = 1.0 + (tm - np.minimum(t, tm)) / tm
        final = np.where(np.isfinite(t), 2, 1)
    else:  # OFF and BROKEN_BOTH_BELOW_EF: the electron is stuck
        t = never
        avg_charge = np.ones(n)
        final = np.ones(n, dtype=int)

    level0 = detector.charge_levels[0]
    signal = level0 + avg_charge
    sigma = detector.sigma(tm)
    if sigma > 0:
        signal = signal + sigma * ndtri(np.clip(u[3], 2.0**-54, None))

    if scheme is ReadoutScheme.OFF:
        declared = np.full(n, -1, dtype=np.int8)
    elif scheme is ReadoutScheme.SINGLET_TRIPLET:
        declared = np.where(signal > level0 + 1 + detector.threshold, 1, 0).astype(np.int8)
    else:
        declared = np.where(signal < level0 + detector.threshold, 0, 1).astype(np.int8)

    return ShotBatch(config, true_up, t, reload, signal, declared, final.astype(np.int8))


def simulate_shots(p_up, config: ReadoutConfig, detector: DetectorModel, seed: int,
                   shots, step: int = 0) -> ShotBatch:
    """Vectorised shots.  ``shots`` is a count or an array of shot indices."""
    idx = np.arange(shots, dtype=np.uint64) if np.ndim(shots) == 0 else np.asarray(shots, dtype=np.uint64)
    slots = np.arange(N_SLOTS, dtype=np.uint64)[:, None]
    u = counter_uniform(seed, idx[None, :], step, slots)
    return _simulate_core(p_up, config, detector, u)


def _stream_uniforms(rng_stream):
    if isinstance(rng_stream, ShotStream):
        return rng_stream.uniforms(N_SLOTS)
    if isinstance(rng_stream, np.random.Generator):
        return rng_stream.random(N_SLOTS)
    raise TypeError("rng_stream must be a ShotStream or numpy Generator")


def _check_probability(p):
    if not 0 <= p <= 1:
        raise ValueError(f"probability out of range: {p}")


def simulate_shot(state_probability_up: float, config: ReadoutConfig, detector: DetectorModel,
                  rng_stream) -> ReadoutRecord:
    """One readout shot for a spin that is up with the given probability."""
    _check_probability(state_probability_up)
    if config.scheme is ReadoutScheme.SINGLET_TRIPLET:
        return simulate_singlet_triplet_shot(state_probability_up, config, detector, rng_stream)
    u = _stream_uniforms(rng_stream)[:, None]
    return _simulate_core(state_probability_up, config, detector, u).record(0)


def simulate_singlet_triplet_shot(state_probability_up: float, config: ReadoutConfig,
                                  detector: DetectorModel, rng_stream) -> ReadoutRecord:
    """Second electron enters from up-polarized leads only if it can form a singlet."""
    _check_probability(state_probability_up)
    if config.scheme is not ReadoutScheme.SINGLET_TRIPLET:
        raise ValueError("config.scheme must be SINGLET_TRIPLET")
    u = _stream_uniforms(rng_stream)[:, None]
    return _simulate_core(state_probability_up, config, detector, u).record(0)


def _prob_declared_up(rate: float, tm: float, sigma: float, thr: float) -> float:
    """Pr[window-average < thr] when the electron leaves at an Exp(rate) time."""
    if sigma == 0:
        return -math.expm1(-rate * thr * tm) if rate > 0 else 0.0
    stay = ndtr((thr - 1.0) / sigma)
    if rate == 0:
        return float(stay)
    x = rate * tm
    w_max = -math.expm1(-x)  # probability of leaving inside the window

    def integrand(w):
        frac = -math.log1p(-w) / x
        return ndtr((thr - frac) / sigma)

    w_thr = -math.expm1(-x * thr)
    pts = [w_thr] if 0 < w_thr < w_max else None
    val, _ = integrate.quad(integrand, 0.0, w_max, points=pts, epsabs=1e-13, epsrel=1e-12, limit=500)
    return float(val + math.exp(-x) * stay)


def analytic_fidelity(config: ReadoutConfig, detector: DetectorModel) -> tuple[float, float]:
    """Closed-form (F_up, F_down) for tunnel-out readout.

    The window-average of a shot whose electron leaves at time tau is
    ``min(tau, T_m) / T_m``; the exponential tau density is integrated
    against the Gaussian decision boundary.
    """
    if config.scheme not in (ReadoutScheme.RATE_SELECTIVE, ReadoutScheme.ENERGY_THRESHOLD):
        raise ValueError(f"no closed form for scheme {config.scheme.value}")
    tm = config.measurement_window
    sigma = detector.sigma(tm)
    thr = detector.threshold
    f_up = _prob_declared_up(config.gamma_up_out, tm, sigma, thr)
    f_down = 1.0 - _prob_declared_up(config.gamma_down_out, tm, sigma, thr)
    return f_up, f_down


@dataclass(frozen=True)
class TimingLink:
    name: str
    shorter: float
    longer: float

    @property
    def passed(self) -> bool:
        return self.shorter < self.longer

    @property
    def margin(self) -> float:
        """longer / shorter; above 1 means the link holds."""
        if self.shorter == 0:
            return math.inf
        return self.longer / self.shorter


@dataclass(frozen=True)
class TimingReport:
    links: tuple[TimingLink, ...]

    @property
    def passed(self) -> bool:
        return all(link.passed for link in self.links)

    def failed(self) -> list[str]:
        return [link.name for link in self.links if not link.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "links": [
                {"name": l.name, "shorter": l.shorter, "longer": l.longer,
                 "passed": l.passed, "margin": l.margin}
                for l in self.links
            ],
        }


def timing_chain_check(config: ReadoutConfig, dot: DotParams) -> TimingReport:
    """Evaluate T_t < T_m < T_1 and T_m < T_nt link by link."""
    tm = config.measurement_window
    return TimingReport((
        TimingLink("T_t < T_m", config.tunnel_time, tm),
        TimingLink("T_m < T_1", tm, dot.T1),
        TimingLink("T_m < T_nt", tm, config.no_tunnel_time),
    ))


def _spin_outcome_arrays(records):
    if isinstance(records, ShotBatch):
        return records.true_up.astype(int), records.declared.astype(int)
    spins = np.array([r.true_spin is Spin.UP for r in records], dtype=int)
    code = {Spin.UP: 0, Spin.DOWN: 1, None: -1}
    declared = np.array([code[r.declared] for r in records], dtype=int)
    return spins, declared


def outcome_spin_mutual_information(records, min_samples: int = 1000) -> float:
    """Plug-in estimate (bits) of I(true spin; declared outcome)."""
    spins, declared = _spin_outcome_arrays(records)
    n = len(spins)
    if n < min_samples:
        raise InsufficientSamplesError(f"need at least {min_samples} records, got {n}")
    _, s_idx = np.unique(spins, return_inverse=True)
    _, d_idx = np.unique(declared, return_inverse=True)
    joint = np.zeros((s_idx.max() + 1, d_idx.max() + 1))
    np.add.at(joint, (s_idx, d_idx), 1)
    joint /= n
    ps = joint.sum(axis=1, keepdims=True)
    pd = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = np.sum(joint[nz] * np.log2(joint[nz] / (ps @ pd)[nz]))
    return float(max(mi, 0.0))
