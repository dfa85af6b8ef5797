"""Protocol runners: every scheme becomes a branch tree of measurement steps.

Each tree is built by simulating the actual state evolution.  Exact mode
sums dyadic branch probabilities over the leaves.  Monte-Carlo mode walks
the same tree, drawing one branch per step by inverse CDF.  Leaves are
labelled success/failure from the classical measurement record alone, and
the residual data state is then checked against ``U(m theta)|psi>`` for the
rotation ``m`` the record implies.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Optional

import numpy as np

from . import analysis
from .analysis import to_dyadic
from .preprocess import (
    MAX_STATE_X,
    CascadeNode,
    build_allocation,
    cascade_tree,
    cascade_leaves,
    level_distribution,
    synthesize_permutation,
)
from .processor import (
    cnot_processor,
    hzb_u1_processor,
    run_processor,
    single_shot_processor,
)
from .programs import basic_program, copies_program, hamming_weights, vmc_program
from .statevec import StateVector, apply_u1, fidelity_up_to_global_phase

MODES = ("exact", "montecarlo")


class InvariantError(RuntimeError):
    """A residual state disagrees with the rotation its measurement record implies."""


class TrialRng:
    """Seeded PCG64 stream; the same seed replays the same trial transcript."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def random(self) -> float:
        return float(self._gen.random())

    def choose(self, probabilities) -> int:
        """Inverse-CDF draw of an index from ``probabilities``."""
        cdf = list(accumulate(probabilities))
        return min(bisect.bisect_right(cdf, self.random() * cdf[-1]), len(cdf) - 1)

    def spawn(self, n: int) -> list[TrialRng]:
        seq = np.random.SeedSequence(self.seed)
        return [TrialRng(int(s.generate_state(1, dtype=np.uint64)[0])) for s in seq.spawn(n)]


@dataclass
class Node:
    children: list[tuple[Fraction, Node]] = field(default_factory=list)
    success: bool = False
    rotation: Optional[int] = None
    fidelity: Optional[float] = None
    _cdf: Optional[list[float]] = field(default=None, repr=False)

    def cdf(self) -> list[float]:
        if self._cdf is None:
            self._cdf = list(accumulate(float(p) for p, _ in self.children))
        return self._cdf


@dataclass(frozen=True)
class ProtocolResult:
    scheme: str
    num_copies: int
    success_probability_exact: Fraction
    residual_fidelity_on_success: float
    failure_rotation_histogram: dict[int, Fraction]
    empirical_rate: Optional[float] = None
    trials: int = 0
    level_distribution: Optional[dict[int, Fraction]] = None

    @property
    def failure_probability(self) -> Fraction:
        return sum(self.failure_rotation_histogram.values(), Fraction(0))


def _leaf(data: StateVector, residual: StateVector, theta: float, rotation: int, success: bool) -> Node:
    target = apply_u1(data, 0, rotation * theta)
    fid = fidelity_up_to_global_phase(target, residual)
    if fid < 1 - 1e-9:
        raise InvariantError(f"residual does not match U({rotation} theta)|psi> (fidelity {fid})")
    return Node(success=success, rotation=rotation, fidelity=fid)


def _summarise(root: Node) -> tuple[Fraction, float, dict[int, Fraction]]:
    success = Fraction(0)
    worst = 1.0
    hist: dict[int, Fraction] = {}
    stack = [(root, Fraction(1))]
    while stack:
        node, p = stack.pop()
        if node.children:
            stack.extend((child, p * q) for q, child in node.children)
        elif node.success:
            success += p
            worst = min(worst, node.fidelity)
        else:
            hist[node.rotation] = hist.get(node.rotation, Fraction(0)) + p
    return success, worst, dict(sorted(hist.items()))


def _sample(root: Node, trials: int, rng: TrialRng) -> float:
    hits = 0
    for _ in range(trials):
        node = root
        while node.children:
            cdf = node.cdf()
            k = min(bisect.bisect_right(cdf, rng.random() * cdf[-1]), len(cdf) - 1)
            node = node.children[k][1]
        hits += node.success
    return hits / trials


def _finish(scheme: str, n: int, root: Node, mode: str, rng, trials: int, **extra) -> ProtocolResult:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    success, worst, hist = _summarise(root)
    empirical = None
    if mode == "montecarlo":
        if trials < 1:
            raise ValueError("montecarlo mode needs trials >= 1")
        rng = rng if rng is not None else TrialRng(0)
        empirical = _sample(root, trials, rng)
    else:
        trials = 0
    return ProtocolResult(
        scheme=scheme,
        num_copies=n,
        success_probability_exact=success,
        residual_fidelity_on_success=worst,
        failure_rotation_histogram=hist,
        empirical_rate=empirical,
        trials=trials,
        **extra,
    )


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")


def iterative_tree(theta: float, n: int, data: StateVector, step_angle) -> Node:
    """Repeated CNOT passes, program angle ``step_angle(m) * theta`` at step m.

    Outcome 0 adds ``+step_angle(m)`` to the net rotation, outcome 1
    subtracts it.  The run stops as soon as the net rotation is +1 or after
    ``n`` steps.
    """
    _check_n(n)
    spec = cnot_processor()

    def step(m: int, state: StateVector, net: int) -> Node:
        angle = step_angle(m)
        node = Node()
        for br in run_processor(spec, state, basic_program(angle * theta)):
            p = to_dyadic(br.probability, 1)
            new_net = net + angle if br.operator.outcome == 0 else net - angle
            if new_net == 1 or m == n:
                child = _leaf(data, br.residual, theta, new_net, success=new_net == 1)
            else:
                child = step(m + 1, br.residual, new_net)
            node.children.append((p, child))
        return node

    return step(1, data, 0)


def vmc_tree(theta: float, n: int, data: StateVector) -> Node:
    """Step ``m`` consumes one program qubit at angle ``2**(m-1) theta``."""
    return iterative_tree(theta, n, data, lambda m: 2 ** (m - 1))


def multicopy_tree(theta: float, n: int, data: StateVector) -> Node:
    """Every step consumes a fresh copy of the basic program."""
    return iterative_tree(theta, n, data, lambda m: 1)


def _processor_node(spec, data, program, theta, success_of, rotation_of) -> Node:
    node = Node()
    bits = spec.num_program_qubits
    for br in run_processor(spec, data, program):
        j = br.operator.outcome
        m = rotation_of(j)
        p = to_dyadic(br.probability, bits)
        node.children.append((p, _leaf(data, br.residual, theta, m, success_of(j))))
    return node


def single_shot_tree(theta: float, n: int, data: StateVector) -> Node:
    _check_n(n)
    spec = single_shot_processor(n)
    w = hamming_weights(n)
    raised = w[spec.one_map] - w[spec.zero_map]
    return _processor_node(
        spec,
        data,
        copies_program(theta, n),
        theta,
        success_of=lambda j: bool(raised[j] == 1),
        rotation_of=lambda j: int(raised[j]),
    )


def hzb_tree(theta: float, n: int, data: StateVector, program: StateVector) -> Node:
    """Single pass of the N-qubit HZB processor; only the top outcome fails."""
    spec = hzb_u1_processor(n)
    top = 2 ** n - 1
    return _processor_node(
        spec,
        data,
        program,
        theta,
        success_of=lambda j: j != top,
        rotation_of=lambda j: 1 if j != top else -top,
    )


def pipeline_tree(theta: float, x: int, data: StateVector) -> tuple[Node, dict[int, Fraction]]:
    if not 1 <= x <= MAX_STATE_X:
        raise ValueError(f"X must be in [1, {MAX_STATE_X}], got {x}")
    plan = build_allocation(x)
    permuted = synthesize_permutation(plan).apply(copies_program(theta, plan.num_copies))
    cascade = cascade_tree(permuted, plan, theta)

    def convert(c: CascadeNode) -> Node:
        if c.branch is not None:
            return hzb_tree(theta, c.branch.level, data, c.branch.program)
        return Node(children=[(p, convert(child)) for _, p, child in c.children])

    return convert(cascade), level_distribution(cascade_leaves(cascade))


def run_vmc_iterative(theta: float, n: int, data: StateVector, mode: str = "exact", rng=None, trials: int = 100_000) -> ProtocolResult:
    return _finish("vmc", n, vmc_tree(theta, n, data), mode, rng, trials)


def run_hzb(theta: float, n: int, data: StateVector, mode: str = "exact", rng=None, trials: int = 100_000) -> ProtocolResult:
    _check_n(n)
    root = hzb_tree(theta, n, data, vmc_program(theta, n))
    return _finish("hzb", n, root, mode, rng, trials)


def run_multicopy_iterative(theta: float, n: int, data: StateVector, mode: str = "exact", rng=None, trials: int = 100_000) -> ProtocolResult:
    return _finish("multicopy-iterative", n, multicopy_tree(theta, n, data), mode, rng, trials)


def run_single_shot(theta: float, n: int, data: StateVector, mode: str = "exact", rng=None, trials: int = 100_000) -> ProtocolResult:
    return _finish("single-shot", n, single_shot_tree(theta, n, data), mode, rng, trials)


def run_cnot(theta: float, data: StateVector, mode: str = "exact", rng=None, trials: int = 100_000) -> ProtocolResult:
    return _finish("cnot", 1, multicopy_tree(theta, 1, data), mode, rng, trials)


def run_preprocess_pipeline(theta: float, x: int, data: StateVector, mode: str = "exact", rng=None, trials: int = 100_000) -> ProtocolResult:
    root, levels = pipeline_tree(theta, x, data)
    return _finish("preprocess", 2 ** x - 1, root, mode, rng, trials, level_distribution=levels)


@dataclass(frozen=True)
class EquivalenceRow:
    n: int
    p_iterative: Fraction
    p_single_shot: Fraction
    p_pipeline: Optional[Fraction]
    p_formula: Fraction

    @property
    def consistent(self) -> bool:
        values = {self.p_iterative, self.p_single_shot, self.p_formula}
        if self.p_pipeline is not None:
            values.add(self.p_pipeline)
        return len(values) == 1


def pipeline_x(n: int) -> Optional[int]:
    """``X`` with ``n == 2**X - 1``, or None."""
    x = (n + 1).bit_length() - 1
    return x if n >= 1 and 2 ** x - 1 == n else None


def scheme_equivalence_table(theta: float, n_list, data: Optional[StateVector] = None) -> list[EquivalenceRow]:
    data = data if data is not None else StateVector(1, np.array([1, 1]) / np.sqrt(2))
    rows = []
    for n in n_list:
        if n < 1 or n % 2 == 0:
            raise ValueError(f"equivalence rows need odd N >= 1, got {n}")
        x = pipeline_x(n)
        pipeline = None
        if x is not None and x <= MAX_STATE_X:
            pipeline = run_preprocess_pipeline(theta, x, data).success_probability_exact
        rows.append(
            EquivalenceRow(
                n=n,
                p_iterative=run_multicopy_iterative(theta, n, data).success_probability_exact,
                p_single_shot=run_single_shot(theta, n, data).success_probability_exact,
                p_pipeline=pipeline,
                p_formula=analysis.p_multicopy(n),
            )
        )
    return rows
