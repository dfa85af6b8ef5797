import warnings
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from u1proc.analysis import matching_deficit_oracle
from u1proc.processor import (
    ProcessorSpec,
    cnot_processor,
    deficit_rows,
    hzb_u1_processor,
    run_processor,
    single_shot_processor,
    verify_unitarity,
)
from u1proc.programs import basic_program, copies_program, hamming_weights, vmc_program
from u1proc.statevec import StateVector, apply_u1, fidelity_up_to_global_phase, measure_subregister, random_state, tensor


def dense_branches(spec, data, program):
    """Independent route: build G, apply to data (x) program, measure program."""
    joint = StateVector(1 + program.num_qubits, spec.matrix() @ tensor(data, program).amplitudes)
    return measure_subregister(joint, list(range(program.num_qubits)))


def rotation_of(residual, data, theta, span):
    """Every integer m in [-span, span] with U(m theta)|psi> matching the residual."""
    return [
        m for m in range(-span, span + 1)
        if fidelity_up_to_global_phase(apply_u1(data, 0, m * theta), residual) > 1 - 1e-12
    ]


class TestCnot:
    def test_maps(self):
        spec = cnot_processor()
        assert spec.zero_map.tolist() == [0, 1]
        assert spec.one_map.tolist() == [1, 0]

    def test_matrix_is_cnot(self):
        cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
        np.testing.assert_array_equal(cnot_processor().matrix(), cnot)

    def test_eigenstate_data_unchanged(self):
        data = StateVector(1, [1, 0])
        branches = run_processor(cnot_processor(), data, basic_program(0.7))
        assert [b.probability for b in branches] == pytest.approx([0.5, 0.5], abs=1e-12)
        for b in branches:
            assert fidelity_up_to_global_phase(b.residual, data) == pytest.approx(1, abs=1e-12)

    def test_outcomes_rotate_forward_and_back(self):
        data = StateVector(1, np.array([1, 1]) / np.sqrt(2))
        b0, b1 = run_processor(cnot_processor(), data, basic_program(0.7))
        assert fidelity_up_to_global_phase(b0.residual, apply_u1(data, 0, 0.7)) == pytest.approx(1, abs=1e-12)
        assert fidelity_up_to_global_phase(b1.residual, apply_u1(data, 0, -0.7)) == pytest.approx(1, abs=1e-12)
        # and not the other way round
        assert fidelity_up_to_global_phase(b0.residual, apply_u1(data, 0, -0.7)) < 0.99

    def test_matches_dense_route(self, data_states, theta):
        for data in data_states:
            fast = run_processor(cnot_processor(), data, basic_program(theta))
            dense = dense_branches(cnot_processor(), data, basic_program(theta))
            assert [b.operator.outcome for b in fast] == [b.outcome for b in dense]
            for f, d in zip(fast, dense):
                assert f.probability == pytest.approx(d.probability, abs=1e-12)
                assert fidelity_up_to_global_phase(f.residual, d.residual) == pytest.approx(1, abs=1e-12)


class TestHzb:
    def test_n1_reduces_to_cnot(self):
        h, c = hzb_u1_processor(1), cnot_processor()
        np.testing.assert_array_equal(h.zero_map, c.zero_map)
        np.testing.assert_array_equal(h.one_map, c.one_map)

    def test_maps(self):
        spec = hzb_u1_processor(3)
        assert spec.zero_map.tolist() == list(range(8))
        assert spec.one_map.tolist() == [1, 2, 3, 4, 5, 6, 7, 0]

    def test_three_qubit_outcomes(self, data_states):
        theta = 0.7
        for data in data_states:
            branches = run_processor(hzb_u1_processor(3), data, vmc_program(theta, 3))
            assert len(branches) == 8
            ok = [b for b in branches if rotation_of(b.residual, data, theta, 8) == [1]]
            bad = [b for b in branches if rotation_of(b.residual, data, theta, 8) == [-7]]
            if abs(data.amplitudes[0]) > 1e-9 and abs(data.amplitudes[1]) > 1e-9:
                assert [b.operator.outcome for b in ok] == list(range(7))
                assert [b.operator.outcome for b in bad] == [7]
            assert sum(b.probability for b in branches[:7]) == pytest.approx(7 / 8, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_outcomes_uniform_and_match_dense(self, n, data_states):
        for data in data_states:
            program = vmc_program(0.7, n)
            fast = run_processor(hzb_u1_processor(n), data, program)
            dense = dense_branches(hzb_u1_processor(n), data, program)
            assert [b.probability for b in dense] == pytest.approx([2.0**-n] * 2**n, abs=1e-12)
            assert [b.probability for b in fast] == pytest.approx([2.0**-n] * 2**n, abs=1e-12)
            for f, d in zip(fast, dense):
                assert fidelity_up_to_global_phase(f.residual, d.residual) == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("n", range(1, 8))
    def test_success_branches_rotate_by_theta(self, n, theta, data_states):
        for data in data_states:
            branches = run_processor(hzb_u1_processor(n), data, vmc_program(theta, n))
            target = apply_u1(data, 0, theta)
            for b in branches[:-1]:
                assert fidelity_up_to_global_phase(b.residual, target) >= 1 - 1e-12
            wrong = apply_u1(data, 0, -(2**n - 1) * theta)
            assert fidelity_up_to_global_phase(branches[-1].residual, wrong) >= 1 - 1e-12


class TestSingleShot:
    def test_n1_is_swap(self):
        assert single_shot_processor(1).one_map.tolist() == [1, 0]
        assert len(deficit_rows(single_shot_processor(1))) == 1

    @pytest.mark.parametrize("n, r", [(1, 1), (3, 3), (5, 10), (7, 35), (9, 126), (11, 462)])
    def test_deficit(self, n, r):
        assert len(deficit_rows(single_shot_processor(n))) == r == comb(n, (n - 1) // 2)

    @pytest.mark.parametrize("n", [1, 3, 5, 7, 9, 11])
    def test_success_fraction(self, n):
        spec = single_shot_processor(n)
        successes = 2**n - len(deficit_rows(spec))
        assert Fraction(successes, 2**n) == 1 - Fraction(comb(n, (n - 1) // 2), 2**n)

    def test_three_copies_five_of_eight_by_residual(self, data_states):
        theta = 0.7
        for data in data_states[3:]:
            branches = run_processor(single_shot_processor(3), data, copies_program(theta, 3))
            rotations = [rotation_of(b.residual, data, theta, 4) for b in branches]
            assert sum(r == [1] for r in rotations) == 5
            # the other three rotate by a negative multiple of theta
            assert all(len(r) == 1 and r[0] < 0 for r in rotations if r != [1])

    @pytest.mark.parametrize("n", [3, 5, 7, 9, 11])
    def test_failures_are_negative_rotations(self, n):
        spec = single_shot_processor(n)
        w = hamming_weights(n)
        m = w[spec.one_map] - w[spec.zero_map]
        assert set(m[deficit_rows(spec)]) <= set(range(-n, 0))

    @pytest.mark.parametrize("n", [3, 5, 7, 9, 11])
    def test_greedy_reaches_matching_optimum(self, n):
        assert len(deficit_rows(single_shot_processor(n))) == matching_deficit_oracle(n)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_even_n_warns(self, n):
        with pytest.warns(UserWarning):
            spec = single_shot_processor(n)
        assert len(deficit_rows(spec)) == comb(n, n // 2)


class TestUnitarity:
    @pytest.mark.parametrize(
        "spec",
        [cnot_processor()]
        + [hzb_u1_processor(n) for n in range(1, 7)]
        + [single_shot_processor(n) for n in (1, 3, 5, 7)],
        ids=lambda s: s.name,
    )
    def test_constructed_processors_are_unitary(self, spec):
        assert verify_unitarity(spec)

    def test_non_bijective_one_map(self):
        spec = ProcessorSpec(2, np.arange(4), np.array([1, 1, 2, 3]))
        assert not verify_unitarity(spec)

    def test_non_bijective_zero_map_large(self):
        spec = ProcessorSpec(6, np.zeros(64, dtype=int), np.arange(64))
        assert not verify_unitarity(spec)

    def test_dense_matrix_unitary(self):
        g = hzb_u1_processor(4).matrix()
        np.testing.assert_allclose(g.conj().T @ g, np.eye(32), atol=1e-12)


def test_run_processor_dimension_mismatch():
    with pytest.raises(ValueError):
        run_processor(hzb_u1_processor(2), StateVector(1, [1, 0]), vmc_program(0.7, 3))


def test_random_data_outcome_statistics_are_data_independent():
    rng = np.random.default_rng(7)
    for _ in range(20):
        data = random_state(1, rng)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            branches = run_processor(single_shot_processor(5), data, copies_program(2.31, 5))
        assert [b.probability for b in branches] == pytest.approx([1 / 32] * 32, abs=1e-12)
