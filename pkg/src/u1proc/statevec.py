"""Dense state vectors over small qubit registers.

Bit convention: qubit 0 is the least significant bit of a basis index.  In a
tensor product ``a (x) b`` the qubits of ``a`` occupy the most significant
bits, so "leftmost" qubits in ket notation are the high-index qubits here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ATOL = 1e-12
DROP_PROBABILITY = 1e-15
MAX_QUBITS = 20


@dataclass(frozen=True)
class StateVector:
    """Immutable amplitude vector of ``2**num_qubits`` complex entries."""

    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [0, {MAX_QUBITS}], got {self.num_qubits}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2 ** self.num_qubits:
            raise ValueError(
                f"expected {2 ** self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got {amps.shape[0]}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(amps.shape[0]).bit_length() - 1
        if amps.shape[0] != 2 ** n:
            raise ValueError(f"length {amps.shape[0]} is not a power of two")
        return cls(n, amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> StateVector:
        amps = np.zeros(2 ** num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, atol: float = ATOL) -> bool:
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0) <= atol

    def __len__(self):
        return self.dim


@dataclass(frozen=True)
class MeasurementBranch:
    outcome: int
    probability: float
    residual: StateVector


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product; ``a`` takes the most significant bits."""
    return StateVector(a.num_qubits + b.num_qubits, np.kron(a.amplitudes, b.amplitudes))


def tensor_all(states: Sequence[StateVector]) -> StateVector:
    out = StateVector(0, np.ones(1, dtype=complex))
    for s in states:
        out = tensor(out, s)
    return out


def _tensor_axis(num_qubits: int, qubit: int) -> int:
    # reshape([2]*n) puts the most significant qubit on axis 0
    return num_qubits - 1 - qubit


def measure_subregister(s: StateVector, qubit_positions: Sequence[int]) -> list[MeasurementBranch]:
    """Projectively measure the listed qubits in the computational basis.

    Bit ``i`` of each branch's ``outcome`` is the result on
    ``qubit_positions[i]``.  The residual lives on the unmeasured qubits,
    which keep their relative order.  Branches come back sorted by outcome;
    those with probability below 1e-15 are dropped.
    """
    positions = [int(q) for q in qubit_positions]
    n = s.num_qubits
    if len(set(positions)) != len(positions):
        raise ValueError(f"duplicate qubit positions: {positions}")
    for q in positions:
        if not 0 <= q < n:
            raise ValueError(f"qubit position {q} out of range for {n} qubits")

    rest = [q for q in range(n) if q not in positions]
    # order axes: measured qubits (MSB first), then remaining qubits (MSB first)
    axes = [_tensor_axis(n, q) for q in reversed(positions)] + [
        _tensor_axis(n, q) for q in reversed(rest)
    ]
    blocks = np.transpose(s.amplitudes.reshape([2] * n), axes).reshape(
        2 ** len(positions), 2 ** len(rest)
    )
    probs = np.einsum("ij,ij->i", blocks.conj(), blocks).real

    branches = []
    for outcome in range(blocks.shape[0]):
        p = float(probs[outcome])
        if p < DROP_PROBABILITY:
            continue
        residual = StateVector(len(rest), blocks[outcome] / np.sqrt(p))
        branches.append(MeasurementBranch(outcome, p, residual))
    return branches


def u1_matrix(theta: float) -> np.ndarray:
    """``exp(i theta sigma_z / 2)`` as a 2x2 diagonal matrix."""
    return np.diag([np.exp(0.5j * theta), np.exp(-0.5j * theta)])


def apply_u1(s: StateVector, qubit: int, theta: float) -> StateVector:
    if not 0 <= qubit < s.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {s.num_qubits} qubits")
    idx = np.arange(s.dim)
    bit = (idx >> qubit) & 1
    phase = np.where(bit == 0, np.exp(0.5j * theta), np.exp(-0.5j * theta))
    return StateVector(s.num_qubits, s.amplitudes * phase)


def apply_matrix(s: StateVector, matrix: np.ndarray) -> StateVector:
    """Apply a full ``dim x dim`` operator to the whole register."""
    matrix = np.asarray(matrix)
    if matrix.shape != (s.dim, s.dim):
        raise ValueError(f"operator shape {matrix.shape} does not match dimension {s.dim}")
    return StateVector(s.num_qubits, matrix @ s.amplitudes)


def permute_basis(s: StateVector, forward: np.ndarray) -> StateVector:
    """Move the amplitude at index ``j`` to index ``forward[j]``."""
    forward = np.asarray(forward)
    if forward.shape != (s.dim,):
        raise ValueError("permutation size does not match state dimension")
    out = np.empty_like(s.amplitudes)
    out[forward] = s.amplitudes
    return StateVector(s.num_qubits, out)


def overlap(a: StateVector, b: StateVector) -> complex:
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity_up_to_global_phase(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|`` clipped to [0, 1]."""
    return float(min(1.0, abs(overlap(a, b))))


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-ish random pure state (normalised complex Gaussian)."""
    v = rng.normal(size=2 ** num_qubits) + 1j * rng.normal(size=2 ** num_qubits)
    return StateVector(num_qubits, v / np.linalg.norm(v))


def qubit_state(alpha: complex, beta: complex) -> StateVector:
    return StateVector(1, np.array([alpha, beta], dtype=complex))
