"""Programmable processors whose operator blocks are data-space projectors.

Every processor here has the block form ``G = sum_jk A_jk (x) |j><k|`` with
each ``A_jk`` one of ``0``, ``|0><0|``, ``|1><1|`` or their sum.  Such a
processor is fully described by two maps on program basis indices: for row
``j``, ``zero_map[j]`` is the column carrying ``|0><0|`` and ``one_map[j]`` the
column carrying ``|1><1|``.  The block unitarity conditions then reduce to
both maps being bijections.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .programs import hamming_weights
from .statevec import ATOL, StateVector


@dataclass(frozen=True)
class ProcessorSpec:
    num_program_qubits: int
    zero_map: np.ndarray = field(repr=False)
    one_map: np.ndarray = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        dim = 2 ** self.num_program_qubits
        for attr in ("zero_map", "one_map"):
            arr = np.array(getattr(self, attr), dtype=np.int64).reshape(-1)
            if arr.shape[0] != dim:
                raise ValueError(f"{attr} must have {dim} entries, got {arr.shape[0]}")
            if arr.min(initial=0) < 0 or arr.max(initial=0) >= dim:
                raise ValueError(f"{attr} has entries outside [0, {dim})")
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

    @property
    def program_dim(self) -> int:
        return 2 ** self.num_program_qubits

    def matrix(self) -> np.ndarray:
        """Dense ``G`` on data (x) program, data qubit most significant."""
        dim = self.program_dim
        g = np.zeros((2 * dim, 2 * dim), dtype=complex)
        rows = np.arange(dim)
        np.add.at(g, (rows, self.zero_map), 1.0)
        np.add.at(g, (dim + rows, dim + self.one_map), 1.0)
        return g


@dataclass(frozen=True)
class ProgramOperator:
    """Diagonal data operator ``coeff0 |0><0| + coeff1 |1><1|`` heralded by ``outcome``."""

    coeff0: complex
    coeff1: complex
    outcome: int

    def matrix(self) -> np.ndarray:
        return np.diag([self.coeff0, self.coeff1])


@dataclass(frozen=True)
class ProcessorBranch:
    operator: ProgramOperator
    probability: float
    residual: StateVector


def cnot_processor() -> ProcessorSpec:
    """CNOT with the data qubit as control and the program qubit as target."""
    return ProcessorSpec(1, np.arange(2), np.array([1, 0]), name="cnot")


def hzb_u1_processor(n: int) -> ProcessorSpec:
    """``A_jk = delta_jk |0><0| + delta_{j+1 mod 2^N, k} |1><1|``."""
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    dim = 2 ** n
    rows = np.arange(dim)
    return ProcessorSpec(n, rows, (rows + 1) % dim, name=f"hzb_u1({n})")


def weight_raising_map(n: int) -> np.ndarray:
    """Permutation maximising the rows with ``|sigma(j)| = |j| + 1``.

    Weight levels are processed bottom-up; rows within a level in increasing
    order take the smallest unused index one weight higher.  Unmatched rows
    are then paired with unused columns, both lists in increasing order.
    """
    dim = 2 ** n
    weights = hamming_weights(n)
    by_weight = [np.flatnonzero(weights == w) for w in range(n + 1)]
    sigma = np.full(dim, -1, dtype=np.int64)
    used = np.zeros(dim, dtype=bool)
    for w in range(n):
        rows, cols = by_weight[w], by_weight[w + 1]
        k = min(len(rows), len(cols))
        sigma[rows[:k]] = cols[:k]
        used[cols[:k]] = True
    leftover_rows = np.flatnonzero(sigma < 0)
    leftover_cols = np.flatnonzero(~used)
    sigma[leftover_rows] = leftover_cols
    return sigma


def single_shot_processor(n: int) -> ProcessorSpec:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    if n % 2 == 0:
        warnings.warn(
            f"single-shot processor with even N={n} succeeds no more often than N={n - 1}",
            stacklevel=2,
        )
    return ProcessorSpec(n, np.arange(2 ** n), weight_raising_map(n), name=f"single_shot({n})")


def deficit_rows(spec: ProcessorSpec) -> np.ndarray:
    """Rows of ``one_map`` that fail to raise the Hamming weight by exactly one."""
    w = hamming_weights(spec.num_program_qubits)
    return np.flatnonzero(w[spec.one_map] != w + 1)


def expected_deficit(n: int) -> int:
    return comb(n, (n - 1) // 2) if n % 2 else comb(n, n // 2)


def program_operators(spec: ProcessorSpec, program: StateVector) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``A_j(Xi)`` coefficients for every outcome ``j``."""
    if program.num_qubits != spec.num_program_qubits:
        raise ValueError(
            f"program has {program.num_qubits} qubits, processor expects {spec.num_program_qubits}"
        )
    amps = program.amplitudes
    return amps[spec.zero_map], amps[spec.one_map]


def run_processor(spec: ProcessorSpec, data: StateVector, program: StateVector) -> list[ProcessorBranch]:
    """Run ``G`` on ``data (x) program`` and measure the whole program register.

    Returns one branch per outcome with nonzero probability, sorted by outcome.
    """
    if data.num_qubits != 1:
        raise ValueError(f"data register must be one qubit, got {data.num_qubits}")
    c0, c1 = program_operators(spec, program)
    alpha, beta = data.amplitudes
    a0, a1 = c0 * alpha, c1 * beta
    probs = np.abs(a0) ** 2 + np.abs(a1) ** 2

    branches = []
    for j in np.flatnonzero(probs >= 1e-15):
        p = float(probs[j])
        residual = StateVector(1, np.array([a0[j], a1[j]]) / np.sqrt(p))
        op = ProgramOperator(complex(c0[j]), complex(c1[j]), int(j))
        branches.append(ProcessorBranch(op, p, residual))
    return branches


def is_bijection(mapping: np.ndarray) -> bool:
    mapping = np.asarray(mapping)
    return bool(np.array_equal(np.sort(mapping), np.arange(mapping.shape[0])))


def verify_unitarity(spec: ProcessorSpec, dense_limit: int = 4) -> bool:
    """Check the block unitarity conditions.

    Structurally this is bijectivity of both maps.  For up to ``dense_limit``
    program qubits the full matrix is also assembled and ``G^dag G = I``
    checked to 1e-12.
    """
    ok = is_bijection(spec.zero_map) and is_bijection(spec.one_map)
    if spec.num_program_qubits <= dense_limit:
        g = spec.matrix()
        eye = np.eye(g.shape[0])
        dense_ok = np.allclose(g.conj().T @ g, eye, atol=ATOL, rtol=0) and np.allclose(
            g @ g.conj().T, eye, atol=ATOL, rtol=0
        )
        if dense_ok != ok:
            raise AssertionError("structural and dense unitarity checks disagree")
    return ok
