"""Program-state constructors.

All program states carry phases ``exp(-i k theta)`` on basis states; theta is
used as given and never reduced modulo 2 pi.
"""
from __future__ import annotations

import numpy as np

from .statevec import StateVector

THETA_GRID = (0.0, 0.7, np.pi / 3, np.pi, 2.31)


def hamming_weights(num_qubits: int) -> np.ndarray:
    idx = np.arange(2 ** num_qubits, dtype=np.int64)
    weights = np.zeros_like(idx)
    for bit in range(num_qubits):
        weights += (idx >> bit) & 1
    return weights


def phase_state(theta: float, exponents: np.ndarray) -> StateVector:
    """Uniform-magnitude state with amplitude ``exp(-i e_j theta)`` at index j."""
    exponents = np.asarray(exponents)
    n = int(exponents.shape[0]).bit_length() - 1
    amps = np.exp(-1j * theta * exponents) / np.sqrt(exponents.shape[0])
    return StateVector(n, amps)


def basic_program(theta: float) -> StateVector:
    """The one-qubit program ``(|0> + exp(-i theta)|1>) / sqrt(2)``."""
    return phase_state(theta, np.arange(2))


def vmc_program(theta: float, n: int) -> StateVector:
    """N-qubit geometric phase ramp, amplitude ``exp(-i j theta) / sqrt(2**N)``.

    Equal to the tensor product of one-qubit programs at angles
    ``2**(N-1) theta, ..., 2 theta, theta`` (most significant first).
    """
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    return phase_state(theta, np.arange(2 ** n))


def copies_program(theta: float, n: int) -> StateVector:
    """N copies of the basic program; the phase exponent is the Hamming weight."""
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    return phase_state(theta, hamming_weights(n))
