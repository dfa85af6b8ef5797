import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from u1proc.programs import basic_program
from u1proc.statevec import (
    StateVector,
    apply_u1,
    fidelity_up_to_global_phase,
    measure_subregister,
    random_state,
    tensor,
)

SQ = 1 / np.sqrt(2)


def states(max_qubits=5):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_qubits))
        seed = draw(st.integers(0, 2**32 - 1))
        return random_state(n, np.random.default_rng(seed))

    return build()


class TestConstruction:
    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            StateVector(2, [1, 0, 0])

    def test_amplitudes_are_read_only(self):
        s = StateVector(1, [1, 0])
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0

    def test_too_many_qubits(self):
        with pytest.raises(ValueError):
            StateVector(21, np.zeros(1))


class TestTensor:
    def test_basis_product(self):
        z = StateVector(1, [1, 0])
        np.testing.assert_array_equal(tensor(z, z).amplitudes, [1, 0, 0, 0])

    def test_first_factor_is_most_significant(self):
        one = StateVector(1, [0, 1])
        plus = StateVector(1, [SQ, SQ])
        np.testing.assert_allclose(tensor(one, plus).amplitudes, [0, 0, SQ, SQ], atol=1e-15)

    def test_data_times_basic_program(self):
        alpha, beta, theta = 0.6, 0.8j, 0.7
        data = StateVector(1, [alpha, beta])
        # direct expansion of the product
        expected = np.array([alpha, alpha * np.exp(-1j * theta), beta, beta * np.exp(-1j * theta)]) * SQ
        np.testing.assert_allclose(tensor(data, basic_program(theta)).amplitudes, expected, atol=1e-15)

    @given(states(3), states(3), states(3))
    @settings(max_examples=30, deadline=None)
    def test_associative(self, a, b, c):
        left = tensor(tensor(a, b), c).amplitudes
        right = tensor(a, tensor(b, c)).amplitudes
        np.testing.assert_allclose(left, right, atol=1e-15)

    @given(states(3), states(3))
    @settings(max_examples=30, deadline=None)
    def test_preserves_norm(self, a, b):
        assert tensor(a, b).is_normalized()


class TestMeasurement:
    def test_bell_state(self):
        bell = StateVector(2, np.array([1, 0, 0, 1]) * SQ)
        branches = measure_subregister(bell, [0, 1])
        assert [b.outcome for b in branches] == [0, 3]
        for b in branches:
            assert b.probability == pytest.approx(0.5, abs=1e-12)
            assert b.residual.num_qubits == 0

    def test_basic_program_uniform(self):
        branches = measure_subregister(basic_program(0.7), [0])
        assert [b.outcome for b in branches] == [0, 1]
        assert [b.probability for b in branches] == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_outcome_bit_order_follows_positions(self):
        # |q2 q1 q0> = |1 0 0>; measuring [2, 0] puts q2 in bit 0
        s = StateVector.basis(3, 0b100)
        (branch,) = measure_subregister(s, [2, 0])
        assert branch.outcome == 0b01
        (branch,) = measure_subregister(s, [0, 2])
        assert branch.outcome == 0b10

    def test_residual_keeps_relative_order(self):
        s = StateVector.basis(3, 0b110)
        (branch,) = measure_subregister(s, [1])
        # remaining qubits q0, q2 -> q2 becomes bit 1
        np.testing.assert_array_equal(branch.residual.amplitudes, [0, 0, 1, 0])

    @pytest.mark.parametrize("positions", [[0, 0], [3], [-1]])
    def test_invalid_positions(self, positions):
        with pytest.raises(ValueError):
            measure_subregister(random_state(3, np.random.default_rng(0)), positions)

    @given(states(5), st.data())
    @settings(max_examples=60, deadline=None)
    def test_completeness_and_normalised_residuals(self, s, data):
        k = data.draw(st.integers(1, s.num_qubits))
        positions = data.draw(st.permutations(range(s.num_qubits)))[:k]
        branches = measure_subregister(s, positions)
        assert sum(b.probability for b in branches) == pytest.approx(1, abs=1e-12)
        assert [b.outcome for b in branches] == sorted(b.outcome for b in branches)
        for b in branches:
            assert b.residual.is_normalized()

    @given(states(4), st.floats(-10, 10), st.data())
    @settings(max_examples=40, deadline=None)
    def test_u1_commutes_with_measuring_other_qubits(self, s, theta, data):
        if s.num_qubits < 2:
            return
        q = data.draw(st.integers(0, s.num_qubits - 1))
        others = [p for p in range(s.num_qubits) if p != q]
        before = measure_subregister(apply_u1(s, q, theta), others)
        after = measure_subregister(s, others)
        assert [b.outcome for b in before] == [b.outcome for b in after]
        for b1, b2 in zip(before, after):
            assert b1.probability == pytest.approx(b2.probability, abs=1e-12)
            np.testing.assert_allclose(b1.residual.amplitudes, apply_u1(b2.residual, 0, theta).amplitudes, atol=1e-12)


class TestU1:
    def test_zero_angle_is_identity(self):
        s = random_state(2, np.random.default_rng(1))
        np.testing.assert_allclose(apply_u1(s, 1, 0.0).amplitudes, s.amplitudes, atol=1e-15)

    def test_phases(self):
        s = StateVector(1, np.array([1, 1]) * SQ)
        out = apply_u1(s, 0, 0.7)
        np.testing.assert_allclose(out.amplitudes, np.array([np.exp(0.35j), np.exp(-0.35j)]) * SQ)

    @given(states(4), st.floats(-10, 10), st.data())
    @settings(max_examples=40, deadline=None)
    def test_group_law_and_inverse(self, s, theta, data):
        q = data.draw(st.integers(0, s.num_qubits - 1))
        twice = apply_u1(apply_u1(s, q, theta), q, theta)
        np.testing.assert_allclose(twice.amplitudes, apply_u1(s, q, 2 * theta).amplitudes, atol=1e-12)
        back = apply_u1(apply_u1(s, q, theta), q, -theta)
        np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-12)
        assert twice.is_normalized()


class TestFidelity:
    def test_self(self):
        s = random_state(3, np.random.default_rng(2))
        assert fidelity_up_to_global_phase(s, s) == pytest.approx(1, abs=1e-12)

    def test_global_phase_invisible(self):
        s = random_state(3, np.random.default_rng(3))
        t = StateVector(3, np.exp(1.234j) * s.amplitudes)
        assert fidelity_up_to_global_phase(s, t) == pytest.approx(1, abs=1e-12)

    def test_orthogonal(self):
        assert fidelity_up_to_global_phase(StateVector(1, [1, 0]), StateVector(1, [0, 1])) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity_up_to_global_phase(StateVector(1, [1, 0]), StateVector(2, [1, 0, 0, 0]))
