"""Turning ``2**X - 1`` basic program copies into a phase-ramp program.

The product state ``|Xi_theta>^{(x) N}`` with ``N = 2**X - 1`` has phase
exponent ``|j|`` (Hamming weight) on basis state ``j``.  We regroup those
terms into runs of consecutive exponents ``c, c+1, ..., c + 2**s - 1``; a run
of length ``2**s`` laid out on ``s`` qubits is ``exp(-i c theta)`` times the
``s``-qubit ramp program.  A basis permutation puts every run into its own
measurement branch, so measuring the ``M = N - X`` leftmost qubits and then a
few more leaves one of the ramp programs behind.

Allocation is greedy: one full run for level ``X``, then for each lower level
mirrored pairs of runs sliding inward from the outermost admissible start.
Every run straddles the two middle exponents ``2**(X-1) - 1`` and
``2**(X-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterator

import numpy as np

from .analysis import to_dyadic
from .programs import hamming_weights, vmc_program
from .statevec import StateVector, measure_subregister

MAX_STATE_X = 4
MAX_PLAN_X = 6


class CascadeError(RuntimeError):
    """A cascade residual did not match the program state the plan promised."""


@dataclass(frozen=True)
class PhaseRun:
    level: int
    start: int

    @property
    def length(self) -> int:
        return 2 ** self.level

    @property
    def stop(self) -> int:
        return self.start + self.length

    @property
    def global_phase_exponent(self) -> int:
        return self.start

    def straddles(self, x: int) -> bool:
        return self.start <= 2 ** (x - 1) - 1 and self.stop - 1 >= 2 ** (x - 1)


@dataclass(frozen=True)
class GroupBatch:
    """``repeats`` rounds of the runs in ``starts``, emitted interleaved."""

    level: int
    starts: tuple[int, ...]
    repeats: int

    def runs(self) -> list[PhaseRun]:
        return [PhaseRun(self.level, c) for c in self.starts]

    @property
    def num_groups(self) -> int:
        return self.repeats * len(self.starts)


@dataclass(frozen=True)
class PlannedGroup:
    run: PhaseRun
    block: int
    sub_outcome: int
    offset: int

    @property
    def level(self) -> int:
        return self.run.level


@dataclass(frozen=True)
class AllocationPlan:
    x: int
    batches: tuple[GroupBatch, ...]

    @property
    def num_copies(self) -> int:
        return 2 ** self.x - 1

    @property
    def num_measured(self) -> int:
        return self.num_copies - self.x

    @property
    def group_counts(self) -> dict[int, int]:
        counts = {s: 0 for s in range(self.x, 0, -1)}
        for b in self.batches:
            counts[b.level] += b.num_groups
        return counts

    @property
    def num_groups(self) -> int:
        return sum(self.group_counts.values())

    def runs(self) -> Iterator[PhaseRun]:
        for b in self.batches:
            runs = b.runs()
            for _ in range(b.repeats):
                yield from runs

    def groups(self) -> Iterator[PlannedGroup]:
        """Expand batches into groups with their measurement labels.

        Runs are packed back to back in allocation order.  Levels never
        increase along that order, so each run of ``2**s`` slots is aligned
        and stays inside one ``2**X``-slot block.
        """
        block_size = 2 ** self.x
        offset = 0
        for run in self.runs():
            block, local = divmod(offset, block_size)
            yield PlannedGroup(run, block, local // run.length, offset)
            offset += run.length

    def path_label(self, group: PlannedGroup) -> str:
        m = self.num_measured
        block = format(group.block, f"0{m}b") if m else ""
        tail = self.x - group.level
        sub = format(group.sub_outcome, f"0{tail}b") if tail else ""
        return f"{block}|{sub}"

    def table(self) -> list[dict]:
        return [
            {
                "level": g.level,
                "run_start": g.run.start,
                "global_phase_exponent": g.run.global_phase_exponent,
                "block": g.block,
                "sub_outcome": g.sub_outcome,
                "path": self.path_label(g),
            }
            for g in self.groups()
        ]


def _check_x(x: int, limit: int) -> None:
    if not 1 <= x <= limit:
        raise ValueError(f"X must be in [1, {limit}], got {x}")


@lru_cache(maxsize=None)
def build_allocation(x: int) -> AllocationPlan:
    _check_x(x, MAX_PLAN_X)
    n = 2 ** x - 1
    counts = [comb(n, w) for w in range(n + 1)]
    mid_hi = 2 ** (x - 1)

    def take(starts: tuple[int, ...], length: int) -> int:
        need: dict[int, int] = {}
        for c in starts:
            for e in range(c, c + length):
                need[e] = need.get(e, 0) + 1
        reps = min(counts[e] // k for e, k in need.items())
        for e, k in need.items():
            counts[e] -= k * reps
        return reps

    batches = [GroupBatch(x, (0,), take((0,), 2 ** x))]
    for s in range(x - 1, 0, -1):
        length = 2 ** s
        lo = mid_hi - length + 1
        while True:
            hi = n - length + 1 - lo
            if lo > hi:
                break
            starts = (lo,) if lo == hi else (lo, hi)
            reps = take(starts, length)
            if reps:
                batches.append(GroupBatch(s, starts, reps))
            lo += 1

    if any(counts):
        raise RuntimeError(f"allocation for X={x} left phases unassigned: {counts}")
    plan = AllocationPlan(x, tuple(batches))
    check_plan(plan)
    return plan


def check_plan(plan: AllocationPlan) -> None:
    x, n = plan.x, plan.num_copies
    for b in plan.batches:
        for run in b.runs():
            if not run.straddles(x):
                raise ValueError(f"run {run} misses a middle exponent")
    w = plan.group_counts
    if sum(w.values()) != comb(n, 2 ** (x - 1) - 1):
        raise ValueError("group count differs from the number of middle-phase terms")
    if sum(2 ** s * ws for s, ws in w.items()) != 2 ** n:
        raise ValueError("groups do not cover every term")


def q_distribution(plan: AllocationPlan) -> dict[int, Fraction]:
    total = 2 ** plan.num_copies
    return {s: Fraction(2 ** s * ws, total) for s, ws in plan.group_counts.items() if ws}


def slot_exponents(plan: AllocationPlan) -> np.ndarray:
    """Phase exponent the plan assigns to each basis index of the permuted state."""
    _check_x(plan.x, MAX_STATE_X)
    out = np.empty(2 ** plan.num_copies, dtype=np.int64)
    for g in plan.groups():
        out[g.offset : g.offset + g.run.length] = np.arange(g.run.start, g.run.stop)
    return out


@dataclass(frozen=True)
class BasisPermutation:
    forward: np.ndarray = field(repr=False)

    def __post_init__(self):
        fwd = np.array(self.forward, dtype=np.int64)
        if not np.array_equal(np.sort(fwd), np.arange(fwd.shape[0])):
            raise ValueError("forward map is not a bijection")
        fwd.setflags(write=False)
        object.__setattr__(self, "forward", fwd)

    @property
    def size(self) -> int:
        return self.forward.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.forward)
        inv[self.forward] = np.arange(self.size)
        return inv

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.size, self.size))
        m[self.forward, np.arange(self.size)] = 1.0
        return m

    def apply(self, state: StateVector) -> StateVector:
        if state.dim != self.size:
            raise ValueError(f"state has dimension {state.dim}, permutation has size {self.size}")
        out = np.empty_like(state.amplitudes)
        out[self.forward] = state.amplitudes
        return StateVector(state.num_qubits, out)


def _assign_class(sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Pair equal-exponent sources and slots with as few bit flips as possible.

    Shared indices stay put.  Every other source, in increasing order, takes
    the free slot nearest in Hamming distance; ties go to the slot reached by
    flipping higher (leftmost, later measured) qubits.
    """
    dest = np.full(sources.shape[0], -1, dtype=np.int64)
    fixed = np.isin(sources, targets)
    dest[fixed] = sources[fixed]
    free = targets[~np.isin(targets, sources)]
    taken = np.zeros(free.shape[0], dtype=bool)
    for i in np.flatnonzero(~fixed):
        diff = np.bitwise_xor(free, sources[i])
        dist = np.bitwise_count(diff).astype(np.int64)
        # lexicographic (distance asc, xor desc) packed into one key
        key = dist * (1 << 32) - diff
        key[taken] = np.iinfo(np.int64).max
        k = int(np.argmin(key))
        taken[k] = True
        dest[i] = free[k]
    return dest


def _permutation_from_plan(plan: AllocationPlan) -> BasisPermutation:
    n = plan.num_copies
    target_exp = slot_exponents(plan)
    source_exp = hamming_weights(n)
    forward = np.empty(2 ** n, dtype=np.int64)
    for e in range(n + 1):
        sources = np.flatnonzero(source_exp == e)
        targets = np.flatnonzero(target_exp == e)
        if sources.shape != targets.shape:
            raise ValueError(f"exponent {e}: {len(sources)} terms but {len(targets)} slots")
        forward[sources] = _assign_class(sources, targets)
    return BasisPermutation(forward)


@lru_cache(maxsize=None)
def _permutation_for(x: int) -> BasisPermutation:
    return _permutation_from_plan(build_allocation(x))


def synthesize_permutation(plan: AllocationPlan) -> BasisPermutation:
    """Basis permutation realising ``plan`` on ``2**X - 1`` program copies."""
    _check_x(plan.x, MAX_STATE_X)
    check_plan(plan)
    if plan == build_allocation(plan.x):
        return _permutation_for(plan.x)
    return _permutation_from_plan(plan)


@dataclass(frozen=True)
class CascadeBranch:
    path: tuple[int, ...]
    level: int
    global_phase_exponent: int
    probability: Fraction
    program: StateVector


@dataclass
class CascadeNode:
    """One measurement step; leaves carry the resulting program branch."""

    children: list[tuple[int, Fraction, CascadeNode]] = field(default_factory=list)
    branch: CascadeBranch | None = None


def _block_layouts(plan: AllocationPlan) -> dict[int, dict[tuple[int, int], PlannedGroup]]:
    # block -> {(level, sub_outcome): group}
    layouts: dict[int, dict[tuple[int, int], PlannedGroup]] = {}
    for g in plan.groups():
        layouts.setdefault(g.block, {})[(g.level, g.sub_outcome)] = g
    return layouts


def _check_residual(program: StateVector, group: PlannedGroup, theta: float) -> None:
    target = vmc_program(theta, group.level)
    ov = complex(np.vdot(target.amplitudes, program.amplitudes))
    expected = np.exp(-1j * group.run.global_phase_exponent * theta)
    if abs(ov) < 1 - 1e-12 or abs(ov - expected) > 1e-9:
        raise CascadeError(
            f"residual at block {group.block}, sub-outcome {group.sub_outcome} is not "
            f"exp(-i {group.run.global_phase_exponent} theta) |Xi^({group.level})>"
        )


def cascade_tree(permuted: StateVector, plan: AllocationPlan, theta: float) -> CascadeNode:
    """Full branch tree of the measurement cascade, every leaf verified."""
    x, n, m = plan.x, plan.num_copies, plan.num_measured
    if permuted.num_qubits != n:
        raise ValueError(f"permuted state must have {n} qubits, got {permuted.num_qubits}")
    layouts = _block_layouts(plan)

    def descend(state: StateVector, block: int, depth: int, pos: int, path: tuple, prob: Fraction):
        level = x - depth
        group = layouts[block].get((level, pos))
        if group is not None:
            _check_residual(state, group, theta)
            branch = CascadeBranch(path, level, group.run.global_phase_exponent, prob, state)
            return CascadeNode(branch=branch)
        if level == 0:
            raise CascadeError(f"block {block} has no group covering sub-outcome {pos}")
        node = CascadeNode()
        for br in measure_subregister(state, [state.num_qubits - 1]):
            p = to_dyadic(br.probability, n)
            child = descend(br.residual, block, depth + 1, 2 * pos + br.outcome, path + (br.outcome,), prob * p)
            node.children.append((br.outcome, p, child))
        return node

    if m == 0:
        return descend(permuted, 0, 0, 0, (), Fraction(1))
    root = CascadeNode()
    for br in measure_subregister(permuted, list(range(x, n))):
        p = to_dyadic(br.probability, n)
        root.children.append((br.outcome, p, descend(br.residual, br.outcome, 0, 0, (br.outcome,), p)))
    return root


def cascade_leaves(node: CascadeNode) -> Iterator[CascadeBranch]:
    if node.branch is not None:
        yield node.branch
    for _, _, child in node.children:
        yield from cascade_leaves(child)


def measurement_cascade(permuted: StateVector, plan: AllocationPlan, theta: float, mode: str = "exact", rng=None):
    """Measure the permuted copies down to a ramp program.

    ``mode="exact"`` returns every branch; ``mode="montecarlo"`` samples one
    outcome per measurement step with ``rng`` and returns that single branch.
    The path starts with the M-qubit outcome, then one entry per extra qubit.
    """
    tree = cascade_tree(permuted, plan, theta)
    if mode == "exact":
        return list(cascade_leaves(tree))
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        raise ValueError("montecarlo mode needs an rng")
    node = tree
    while node.branch is None:
        k = rng.choose([float(p) for _, p, _ in node.children])
        node = node.children[k][2]
    return node.branch


def level_distribution(branches) -> dict[int, Fraction]:
    dist: dict[int, Fraction] = {}
    for b in branches:
        dist[b.level] = dist.get(b.level, Fraction(0)) + b.probability
    return dict(sorted(dist.items(), reverse=True))
