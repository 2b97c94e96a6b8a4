"""Density-matrix states of one or two spin-1/2 particles.

Basis ordering is (up, down) for a single spin and (uu, ud, du, dd) for two
spins, with qubit 0 the left tensor factor.  "up" is the Zeeman ground state
and corresponds to Bloch vector (0, 0, +1).

Single-qubit channels are handled as 4x4 real Pauli transfer matrices (PTMs)
acting on the vector (1, mx, my, mz); `apply_ptm` applies one to a single
spin or to either half of a two-spin state.
"""
from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

__all__ = [
    "SpinState",
    "BlochVector",
    "StateError",
    "pure_up",
    "pure_down",
    "mixed",
    "tensor",
    "partial_trace",
    "to_bloch",
    "from_bloch",
    "apply_unitary",
    "apply_ptm",
    "project",
    "PAULI",
    "ket",
]

HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-10
TRACE_RENORM_TOL = 1e-12
TRACE_REJECT_TOL = 1e-6

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (I2, SX, SY, SZ)

_PAULI_STACK = np.stack(PAULI)  # (4, 2, 2)
_PAULI2 = np.einsum("aij,bkl->abikjl", _PAULI_STACK, _PAULI_STACK).reshape(4, 4, 4, 4)


class StateError(ValueError):
    """A matrix that is not a valid density operator."""


@dataclass(frozen=True, eq=False)
class SpinState:
    """Immutable density matrix of one (dims=2) or two (dims=4) spins.

    Construction checks Hermiticity, trace and positivity.  Trace drift up
    to 1e-6 is renormalised away; anything larger is treated as a bug
    upstream and rejected.
    """

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex, copy=True)
        if rho.shape not in ((2, 2), (4, 4)):
            raise StateError(f"density matrix must be 2x2 or 4x4, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise StateError("density matrix has non-finite entries")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise StateError("density matrix is not Hermitian")
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1) > TRACE_REJECT_TOL:
            raise StateError(f"trace {tr!r} deviates from 1")
        if abs(tr - 1) > TRACE_RENORM_TOL:
            rho = rho / tr
        if np.linalg.eigvalsh(rho)[0] < -POSITIVITY_TOL:
            raise StateError("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dims(self) -> int:
        return self.rho.shape[0]

    @property
    def n_qubits(self) -> int:
        return 1 if self.dims == 2 else 2

    def prob_up(self, qubit: int = 0) -> float:
        """Probability that ``qubit`` is found in the up state."""
        s = self if self.dims == 2 else partial_trace(self, keep=qubit)
        return float(min(max(s.rho[0, 0].real, 0.0), 1.0))

    def prob_down(self, qubit: int = 0) -> float:
        return 1.0 - self.prob_up(qubit)

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)

    def allclose(self, other: "SpinState", atol: float = 1e-12) -> bool:
        return self.dims == other.dims and np.allclose(self.rho, other.rho, rtol=0, atol=atol)

    def to_dict(self) -> dict:
        """Row-major real/imag entries, for golden files and debugging."""
        return {
            "dims": self.dims,
            "real": self.rho.real.tolist(),
            "imag": self.rho.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpinState":
        rho = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data["imag"], dtype=float)
        if rho.shape[0] != data["dims"]:
            raise StateError("dims field does not match matrix size")
        return cls(rho)

    def __repr__(self):
        return f"SpinState(dims={self.dims}, rho={np.array2string(self.rho, precision=4)})"


@dataclass(frozen=True)
class BlochVector:
    mx: float
    my: float
    mz: float

    def __post_init__(self):
        if not math.isfinite(self.norm) or self.norm > 1 + 1e-10:
            raise StateError(f"Bloch vector norm {self.norm} exceeds 1")

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.mx**2 + self.my**2 + self.mz**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.mx, self.my, self.mz])

    def is_pure(self, tol: float = 1e-10) -> bool:
        return abs(self.norm - 1) <= tol


def ket(*labels: str) -> np.ndarray:
    """State vector for a product of basis labels, e.g. ``ket("u", "d")``."""
    basis = {"u": np.array([1, 0], dtype=complex), "d": np.array([0, 1], dtype=complex)}
    vec = np.ones(1, dtype=complex)
    for label in labels:
        vec = np.kron(vec, basis[label])
    return vec


def _from_ket(psi) -> SpinState:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return SpinState(np.outer(psi, psi.conj()))


def pure_up() -> SpinState:
    return SpinState(np.diag([1.0, 0.0]))


def pure_down() -> SpinState:
    return SpinState(np.diag([0.0, 1.0]))


def mixed(p_up: float) -> SpinState:
    """Incoherent mixture diag(p_up, 1 - p_up)."""
    if not 0.0 <= p_up <= 1.0:
        raise ValueError(f"probability out of range: {p_up}")
    return SpinState(np.diag([p_up, 1.0 - p_up]))


def tensor(a: SpinState, b: SpinState) -> SpinState:
    if a.dims != 2 or b.dims != 2:
        raise StateError("tensor expects two single-spin states")
    return SpinState(np.kron(a.rho, b.rho))


def partial_trace(state: SpinState, keep: int) -> SpinState:
    """Reduced state of qubit ``keep`` (0 or 1) of a two-spin state."""
    if state.dims != 4:
        raise StateError("partial_trace needs a two-spin state")
    if keep not in (0, 1):
        raise IndexError(f"qubit index must be 0 or 1, got {keep}")
    r = state.rho.reshape(2, 2, 2, 2)
    red = np.einsum("ijkj->ik", r) if keep == 0 else np.einsum("ijil->jl", r)
    return SpinState(red)


def to_bloch(state: SpinState) -> BlochVector:
    if state.dims != 2:
        raise StateError("Bloch vectors exist only for single spins")
    rho = state.rho
    return BlochVector(
        mx=float(2 * rho[0, 1].real),
        my=float(-2 * rho[0, 1].imag),
        mz=float((rho[0, 0] - rho[1, 1]).real),
    )


def from_bloch(v) -> SpinState:
    if not isinstance(v, BlochVector):
        v = BlochVector(*map(float, v))
    rho = 0.5 * (I2 + v.mx * SX + v.my * SY + v.mz * SZ)
    return SpinState(rho)


def apply_unitary(state: SpinState, u: np.ndarray) -> SpinState:
    u = np.asarray(u, dtype=complex)
    if u.shape != state.rho.shape:
        raise StateError(f"unitary shape {u.shape} does not match state dims {state.dims}")
    return SpinState(u @ state.rho @ u.conj().T)


def apply_ptm(state: SpinState, ptm: np.ndarray, target: int = 0) -> SpinState:
    """Apply a single-qubit Pauli transfer matrix to qubit ``target``."""
    ptm = np.asarray(ptm, dtype=float)
    if state.dims == 2:
        c = np.einsum("aij,ji->a", _PAULI_STACK, state.rho).real
        c = ptm @ c
        return SpinState(0.5 * np.einsum("a,aij->ij", c, _PAULI_STACK))
    if target not in (0, 1):
        raise IndexError(f"qubit index must be 0 or 1, got {target}")
    c = np.einsum("abij,ji->ab", _PAULI2, state.rho).real
    c = ptm @ c if target == 0 else c @ ptm.T
    return SpinState(0.25 * np.einsum("ab,abij->ij", c, _PAULI2))


def project(state: SpinState, qubit: int, up: bool) -> tuple[float, SpinState]:
    """Projective z measurement outcome on ``qubit``.

    Returns the outcome probability and the post-measurement state of the
    *other* qubit (two spins) or of the measured spin itself (one spin).
    """
    idx = 0 if up else 1
    if state.dims == 2:
        p = float(state.rho[idx, idx].real)
        return p, (pure_up() if up else pure_down())
    r = state.rho.reshape(2, 2, 2, 2)
    if qubit == 0:
        block = r[idx, :, idx, :]
    elif qubit == 1:
        block = r[:, idx, :, idx]
    else:
        raise IndexError(f"qubit index must be 0 or 1, got {qubit}")
    p = float(np.trace(block).real)
    if p <= 0:
        return 0.0, mixed(0.5)
    return p, SpinState(block / p)
