"""Protocol execution, Monte Carlo aggregation and parameter sweeps.

A protocol is a list of steps (`Init`, `Wait`, `EsrBurst`, `Exchange`,
`Measure`).  Everything between measurements is deterministic density-matrix
evolution, so `run_protocol` first walks the protocol once per measurement
branch (at most four for two qubits) and only then draws shots.  Shot ``i``
uses counter-based draws keyed by ``(master_seed, i, step_index)``; results
are therefore identical for any worker count or chunking.

Steps take zero time beyond their own durations; there is no dead time
between steps.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np
from scipy.stats import norm

from . import __version__
from .constants import DeviceParams, paper_device
from .esr import BlochSettings, EsrPulse, bloch_ptm
from .exchange import ExchangePulse, exchange_unitary, j_energy_from_frequency, swap_pulse
from .initialization import InitMethod, InitVariant, initialize, relaxation_ptm
from .readout import NOISE_ASSUMPTION, DetectorModel, ReadoutConfig, ReadoutScheme, simulate_shots
from .rng import derive_seed
from .state import (
    SpinState,
    StateError,
    apply_ptm,
    apply_unitary,
    mixed,
    partial_trace,
    project,
    pure_down,
    pure_up,
    tensor,
)

__all__ = [
    "Init",
    "Wait",
    "EsrBurst",
    "Exchange",
    "Measure",
    "ProtocolStep",
    "ProtocolError",
    "NumericError",
    "RunResult",
    "SweepSpec",
    "SwapDemoResult",
    "validate_protocol",
    "run_protocol",
    "run_sweep",
    "write_sweep_csv",
    "wilson_interval",
    "error_per_gate_budget",
    "swap_demo_experiment",
    "OUTCOME_LABELS",
]

BLOCK_SIZE = 1 << 15
OUTCOME_LABELS = {0: "up", 1: "down", -1: "none"}


class ProtocolError(ValueError):
    """The protocol is malformed; the message names the offending step."""


class NumericError(RuntimeError):
    def __init__(self, message, shot=None, step=None):
        super().__init__(message)
        self.shot = shot
        self.step = step


@dataclass(frozen=True)
class Init:
    qubit: int
    method: InitMethod


@dataclass(frozen=True)
class Wait:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("wait duration must be non-negative")


@dataclass(frozen=True)
class EsrBurst:
    """Global microwave burst; every active qubit sees it at its own detuning."""

    pulse: EsrPulse
    settings: BlochSettings = field(default_factory=BlochSettings)


@dataclass(frozen=True)
class Exchange:
    pulse: ExchangePulse


@dataclass(frozen=True)
class Measure:
    qubit: int
    readout: ReadoutConfig = field(default_factory=ReadoutConfig.ideal)
    detector: DetectorModel = field(default_factory=DetectorModel)


ProtocolStep = Union[Init, Wait, EsrBurst, Exchange, Measure]


def _step_duration(step) -> float:
    if isinstance(step, Init):
        return step.method.duration
    if isinstance(step, Wait):
        return step.duration
    if isinstance(step, (EsrBurst, Exchange)):
        return step.pulse.duration
    return step.readout.measurement_window


def validate_protocol(steps: Sequence[ProtocolStep], device: DeviceParams) -> None:
    n = device.n_qubits
    initialized, finished = set(), set()
    if not steps:
        raise ProtocolError("protocol is empty")

    def check_qubit(i, q, what):
        if not isinstance(q, (int, np.integer)) or not 0 <= q < n:
            raise ProtocolError(f"step {i} ({what}): qubit {q!r} not in device with {n} qubit(s)")
        if q in finished:
            raise ProtocolError(f"step {i} ({what}): qubit {q} was already measured")

    for i, step in enumerate(steps):
        kind = type(step).__name__
        if isinstance(step, Init):
            check_qubit(i, step.qubit, kind)
            initialized.add(step.qubit)
        elif isinstance(step, Measure):
            check_qubit(i, step.qubit, kind)
            if step.qubit not in initialized:
                raise ProtocolError(f"step {i} (Measure): qubit {step.qubit} is measured before Init")
            if step.readout.scheme is ReadoutScheme.SINGLET_TRIPLET and n > 1:
                # the extra electron would sit next to the partner qubit; not modelled
                raise ProtocolError(f"step {i} (Measure): singlet-triplet readout needs a one-qubit device")
            if step.readout.scheme is not ReadoutScheme.OFF:
                finished.add(step.qubit)
        elif isinstance(step, Exchange):
            if n != 2:
                raise ProtocolError(f"step {i} (Exchange): needs a two-qubit device")
            for q in (0, 1):
                check_qubit(i, q, kind)
                if q not in initialized:
                    raise ProtocolError(f"step {i} (Exchange): qubit {q} not initialized")
        elif isinstance(step, EsrBurst):
            if not initialized - finished:
                raise ProtocolError(f"step {i} (EsrBurst): no initialized qubit to drive")
        elif isinstance(step, Wait):
            pass
        else:
            raise ProtocolError(f"step {i}: unknown step type {kind}")


# --- deterministic evolution -------------------------------------------------

def _replace_qubit(state: SpinState, q: int, new: SpinState, n: int) -> SpinState:
    if n == 1:
        return new
    other = partial_trace(state, keep=1 - q)
    return tensor(new, other) if q == 0 else tensor(other, new)


class _Plan:
    """Branch tree of the protocol: up-probability at every (measure step, path)."""

    def __init__(self, steps, device):
        self.steps = list(steps)
        self.device = device
        self.n = device.n_qubits
        self.p_up = {}
        start = mixed(0.5) if self.n == 1 else tensor(mixed(0.5), mixed(0.5))
        self._walk(0, (), start, frozenset(), frozenset())

    def _apply(self, i, step, state, active):
        dev = self.device
        if isinstance(step, Init):
            dot = dev.dots[step.qubit]
            new, _ = initialize(step.method, dot, dev.leads)
            return _replace_qubit(state, step.qubit, new, self.n)
        if isinstance(step, Wait):
            for q in sorted(active):
                state = apply_ptm(state, relaxation_ptm(dev.dots[q], step.duration), q)
            return state
        if isinstance(step, EsrBurst):
            for q in sorted(active):
                state = apply_ptm(state, bloch_ptm(step.pulse, dev.dots[q], step.settings), q)
            return state
        if isinstance(step, Exchange):
            u = exchange_unitary(step.pulse, dev.dots[0].g_d, dev.dots[1].g_d, dev.B0)
            return apply_unitary(state, u)
        raise ProtocolError(f"step {i}: cannot apply {type(step).__name__}")

    def _walk(self, i, path, state, initialized, finished):
        if i == len(self.steps):
            return
        step = self.steps[i]
        active = initialized - finished
        if isinstance(step, Measure) and step.readout.scheme is not ReadoutScheme.OFF:
            q = step.qubit
            p_up = state.prob_up(q)
            self.p_up[(i, path)] = p_up
            for up in (True, False):
                prob, post = project(state, q, up)
                if prob <= 0:
                    continue
                basis = pure_up() if up else pure_down()
                if self.n == 1:
                    new = basis
                else:
                    new = tensor(basis, post) if q == 0 else tensor(post, basis)
                self._walk(i + 1, path + (up,), new, initialized, finished | {q})
            return
        if isinstance(step, Measure):  # switched off: no tunnelling, no back-action
            self.p_up[(i, path)] = state.prob_up(step.qubit)
            self._walk(i + 1, path, state, initialized, finished)
            return
        try:
            state = self._apply(i, step, state, active)
        except (StateError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise NumericError(f"step {i} ({type(step).__name__}): {exc}", step=i) from exc
        if isinstance(step, Init):
            initialized = initialized | {step.qubit}
        self._walk(i + 1, path, state, initialized, finished)


def _run_block(plan: _Plan, seed: int, idx: np.ndarray, keep_shots: bool):
    n_shots = len(idx)
    declared = np.full((n_shots, plan.n), -2, dtype=np.int8)
    # branch path of each shot packed into bits: bit j is the j-th true outcome (1 = up)
    codes = np.zeros(n_shots, dtype=np.int64)
    depth = 0
    shot_rows = []
    for i, step in enumerate(plan.steps):
        if not isinstance(step, Measure):
            continue
        branching = step.readout.scheme is not ReadoutScheme.OFF
        for code in np.unique(codes):
            members = np.flatnonzero(codes == code)
            path = tuple(bool((code >> j) & 1) for j in range(depth))
            p_up = plan.p_up[(i, path)]
            try:
                batch = simulate_shots(p_up, step.readout, step.detector, seed, idx[members], step=i)
            except (ValueError, FloatingPointError) as exc:
                raise NumericError(f"step {i} (Measure): {exc}", shot=int(idx[members[0]]), step=i) from exc
            declared[members, step.qubit] = batch.declared
            if branching:
                codes[members] |= batch.true_up.astype(np.int64) << depth
            if keep_shots:
                for j, k in enumerate(members):
                    t = batch.event_time[j]
                    shot_rows.append((int(idx[k]), "up" if batch.true_up[j] else "down",
                                      float(t) if np.isfinite(t) else None,
                                      float(batch.signal[j]), OUTCOME_LABELS[int(batch.declared[j])],
                                      step.qubit, i))
        if branching:
            depth += 1
    return declared, shot_rows


# --- results -----------------------------------------------------------------

def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("need at least one trial")
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def _jsonable(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _step_echo(step) -> dict:
    d = asdict(step)
    d["type"] = type(step).__name__
    return _jsonable(d)


@dataclass(frozen=True)
class RunResult:
    shots: int
    measured_qubits: tuple[int, ...]
    outcome_counts: dict
    metadata: dict
    shot_rows: list | None = field(default=None, compare=False, repr=False)

    def probability(self, outcome: tuple[str, ...]) -> float:
        return self.outcome_counts.get(tuple(outcome), 0) / self.shots

    def count_declared(self, qubit: int, label: str) -> int:
        pos = self.measured_qubits.index(qubit)
        return sum(c for k, c in self.outcome_counts.items() if k[pos] == label)

    def marginal(self, qubit: int, label: str = "up") -> float:
        return self.count_declared(qubit, label) / self.shots

    def interval(self, qubit: int, label: str = "up") -> tuple[float, float]:
        return wilson_interval(self.count_declared(qubit, label), self.shots)

    @property
    def estimated_probabilities(self) -> dict:
        out = {}
        for key, c in sorted(self.outcome_counts.items()):
            lo, hi = wilson_interval(c, self.shots)
            out[",".join(key)] = {"p": c / self.shots, "ci_low": lo, "ci_high": hi}
        return out

    def marginals(self) -> dict:
        out = {}
        for q in self.measured_qubits:
            for label in ("up", "down"):
                c = self.count_declared(q, label)
                lo, hi = wilson_interval(c, self.shots)
                out[f"q{q}={label}"] = {"p": c / self.shots, "ci_low": lo, "ci_high": hi}
        return out

    def to_dict(self) -> dict:
        return {
            "shots": self.shots,
            "measured_qubits": list(self.measured_qubits),
            "outcome_counts": {",".join(k): v for k, v in sorted(self.outcome_counts.items())},
            "estimated_probabilities": self.estimated_probabilities,
            "marginals": self.marginals(),
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_shots_csv(self, fh) -> None:
        if self.shot_rows is None:
            raise ValueError("run was executed without keep_shots=True")
        w = csv.writer(fh)
        w.writerow(["shot", "true_spin", "tunnel_out_time", "signal", "declared", "qubit", "step"])
        for row in sorted(self.shot_rows, key=lambda r: (r[0], r[6])):
            w.writerow(["" if v is None else v for v in row])


def run_protocol(steps: Sequence[ProtocolStep], device: DeviceParams, shots: int,
                 master_seed: int, workers: int = 1, keep_shots: bool = False) -> RunResult:
    """Execute ``shots`` independent repetitions of the protocol."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    steps = list(steps)
    validate_protocol(steps, device)
    plan = _Plan(steps, device)
    measured = tuple(sorted({s.qubit for s in steps if isinstance(s, Measure)}))

    blocks = [np.arange(a, min(a + BLOCK_SIZE, shots), dtype=np.int64)
              for a in range(0, shots, BLOCK_SIZE)]

    def job(idx):
        return _run_block(plan, master_seed, idx, keep_shots)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]

    declared = np.concatenate([p[0] for p in parts])[:, list(measured)]
    codes, counts = np.unique(declared, axis=0, return_counts=True)
    outcome_counts = {tuple(OUTCOME_LABELS[int(c)] for c in row): int(k) for row, k in zip(codes, counts)}
    rows = [r for p in parts for r in p[1]] if keep_shots else None

    metadata = {
        "code_version": __version__,
        "master_seed": int(master_seed),
        "device": _jsonable(asdict(device)),
        "protocol": [_step_echo(s) for s in steps],
        "protocol_duration": sum(_step_duration(s) for s in steps),
        "assumptions": ["zero latency between protocol steps", NOISE_ASSUMPTION],
    }
    return RunResult(shots, measured, outcome_counts, metadata, rows)


# --- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """Vary one entry of a config document.

    ``path`` is dot-separated into the config tree, list positions as
    integers (``"protocol.2.duration"``).  ``observable`` names the
    estimated quantity as ``"q<qubit>=<up|down>"``.
    """

    path: str
    values: tuple
    shots: int = 1000
    observable: str = "q0=down"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.shots < 1:
            raise ValueError("shots must be at least 1")

    def parse_observable(self) -> tuple[int, str]:
        q, label = self.observable.split("=")
        return int(q.lstrip("q")), label


def _set_path(doc, path: str, value):
    keys = path.split(".")
    node = doc
    for k in keys[:-1]:
        node = _descend(node, k, path)
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    elif isinstance(node, dict):
        node[last] = value
    else:
        raise ProtocolError(f"parameter path {path!r} does not resolve")


def _descend(node, key, path):
    try:
        if isinstance(node, list):
            return node[int(key)]
        return node[key]
    except (KeyError, IndexError, ValueError, TypeError):
        raise ProtocolError(f"parameter path {path!r} does not resolve at {key!r}") from None


def run_sweep(config: dict, sweep: SweepSpec, master_seed: int | None = None,
              workers: int = 1) -> list[tuple[object, RunResult]]:
    """One run per sweep value, each with its own derived seed."""
    import copy

    from .config import load_config

    load_config(config)  # base must be valid
    probe = copy.deepcopy(config)
    keys = sweep.path.split(".")
    node = probe
    for k in keys:
        node = _descend(node, k, sweep.path)
    seed = master_seed if master_seed is not None else int(config.get("run", {}).get("seed", 0))
    out = []
    for i, value in enumerate(sweep.values):
        doc = copy.deepcopy(config)
        _set_path(doc, sweep.path, value)
        exp = load_config(doc)
        result = run_protocol(exp.protocol, exp.device, sweep.shots, derive_seed(seed, i), workers)
        out.append((value, result))
    return out


def write_sweep_csv(results, sweep: SweepSpec, fh) -> None:
    q, label = sweep.parse_observable()
    w = csv.writer(fh)
    w.writerow(["parameter", "value", "p_estimate", "ci_low", "ci_high", "shots"])
    for value, res in results:
        lo, hi = res.interval(q, label)
        w.writerow([sweep.path, value, res.marginal(q, label), lo, hi, res.shots])


# --- experiment-level helpers ------------------------------------------------

def error_per_gate_budget(gate_duration: float, T2: float) -> float:
    """First-order dephasing error of one gate: gate_duration / T2."""
    if not (gate_duration > 0 and T2 > 0):
        raise ValueError("gate_duration and T2 must be positive")
    return gate_duration / T2


@dataclass(frozen=True)
class SwapDemoResult:
    before: RunResult
    after: RunResult

    def table(self) -> dict:
        return {
            "before": {"q1_up": self.before.marginal(0), "q2_up": self.before.marginal(1)},
            "after": {"q1_up": self.after.marginal(0), "q2_up": self.after.marginal(1)},
        }


def swap_demo_experiment(p_up_q2: float, shots: int, readout: ReadoutConfig | None = None,
                         seed: int = 0, detector: DetectorModel | None = None,
                         device: DeviceParams | None = None, j_over_h: float = 20e9,
                         workers: int = 1) -> SwapDemoResult:
    """Pure up on qubit 1, mixture on qubit 2, measure both with and without a SWAP."""
    readout = readout or ReadoutConfig.ideal()
    detector = detector or DetectorModel()
    device = device or paper_device(2)
    inits = [
        Init(0, InitMethod(InitVariant.POLARIZED_LEADS)),
        Init(1, InitMethod(InitVariant.PARTIALLY_POLARIZED_LEADS, lead_polarization=p_up_q2)),
    ]
    measures = [Measure(0, readout, detector), Measure(1, readout, detector)]
    swap = Exchange(swap_pulse(j_energy_from_frequency(j_over_h)))
    before = run_protocol(inits + measures, device, shots, seed, workers)
    # separate stream so the two conditions are statistically independent
    after = run_protocol(inits + [swap] + measures, device, shots, derive_seed(seed, 1), workers)
    return SwapDemoResult(before, after)
