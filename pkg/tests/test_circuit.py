import json

import numpy as np
import pytest

from oracles import apply_circuit_oracle, random_circuit
from rotcert.circuit import (
    CircuitSpec,
    GateOp,
    Povm,
    apply_circuit,
    class_probabilities,
    gate_matrix,
    op_unitary,
    sample_shots,
    spec_from_json,
    spec_to_json,
)
from rotcert.qla import DensityMatrix, random_density_matrix

X = np.array([[0, 1], [1, 0]], dtype=complex)


class TestGateMatrix:
    def test_rx_zero_is_identity(self):
        op = GateOp("RX", target=0, param_slot=0)
        np.testing.assert_allclose(gate_matrix(op, 0.0), np.eye(2), atol=1e-15)

    def test_rx_pi_is_minus_i_x(self):
        op = GateOp("RX", target=0, param_slot=0)
        np.testing.assert_allclose(gate_matrix(op, np.pi), -1j * X, atol=1e-15)

    def test_pauli_x(self):
        np.testing.assert_array_equal(gate_matrix(GateOp("X", target=0)), X)

    def test_fixed_angle_rotation(self):
        op = GateOp("RZ", target=0, fixed_angle=0.7)
        m = gate_matrix(op)
        np.testing.assert_allclose(m, np.diag([np.exp(-0.35j), np.exp(0.35j)]), atol=1e-15)

    def test_every_gate_is_unitary(self):
        rng = np.random.default_rng(2)
        ops = [
            (GateOp("RX", 0, param_slot=0), float(rng.uniform(-np.pi, np.pi))),
            (GateOp("RY", 0, param_slot=0), float(rng.uniform(-np.pi, np.pi))),
            (GateOp("RZ", 0, param_slot=0), float(rng.uniform(-np.pi, np.pi))),
            (GateOp("X", 0), None),
            (GateOp("Y", 0), None),
            (GateOp("Z", 0), None),
            (GateOp("H", 0), None),
            (GateOp("CNOT", 1, control=0), None),
        ]
        for op, angle in ops:
            u = gate_matrix(op, angle)
            np.testing.assert_allclose(
                u.conj().T @ u, np.eye(len(u)), atol=1e-12, err_msg=op.kind
            )

    def test_angle_argument_contract(self):
        slot = GateOp("RX", target=0, param_slot=0)
        fixed = GateOp("RX", target=0, fixed_angle=0.3)
        plain = GateOp("H", target=0)
        with pytest.raises(ValueError, match="requires an angle"):
            gate_matrix(slot)
        with pytest.raises(ValueError, match="no angle"):
            gate_matrix(fixed, 0.5)
        with pytest.raises(ValueError, match="no angle"):
            gate_matrix(plain, 0.5)


class TestGateOpValidation:
    def test_rotation_needs_exactly_one_binding(self):
        with pytest.raises(ValueError, match="exactly one"):
            GateOp("RY", target=0)
        with pytest.raises(ValueError, match="exactly one"):
            GateOp("RY", target=0, param_slot=0, fixed_angle=1.0)

    def test_cnot_needs_distinct_control(self):
        with pytest.raises(ValueError, match="control"):
            GateOp("CNOT", target=1)
        with pytest.raises(ValueError, match="differ"):
            GateOp("CNOT", target=1, control=1)

    def test_spec_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            CircuitSpec(1, (GateOp("X", target=1),), 0)
        with pytest.raises(ValueError, match="out of range"):
            CircuitSpec(1, (GateOp("RX", target=0, param_slot=2),), 1)


class TestApplyCircuit:
    def test_empty_circuit_is_identity(self):
        rho = random_density_matrix(2, np.random.default_rng(1))
        out = apply_circuit(CircuitSpec(2, (), 0), [], rho)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)

    def test_single_x_flips_basis_state(self):
        spec = CircuitSpec(1, (GateOp("X", target=0),), 0)
        out = apply_circuit(spec, [], DensityMatrix.basis(1, 0))
        np.testing.assert_allclose(out.matrix, np.diag([0, 1]).astype(complex), atol=1e-15)

    @pytest.mark.parametrize("num_qubits", [1, 2, 3])
    def test_matches_full_unitary_oracle(self, num_qubits):
        rng = np.random.default_rng(40 + num_qubits)
        for _ in range(20):
            spec, params = random_circuit(rng, num_qubits, int(rng.integers(1, 12)))
            rho = random_density_matrix(num_qubits, rng)
            got = apply_circuit(spec, params, rho)
            want = apply_circuit_oracle(spec, params, rho.matrix)
            np.testing.assert_allclose(got.matrix, want, atol=1e-10)

    def test_preserves_trace_and_hermiticity(self):
        rng = np.random.default_rng(50)
        spec, params = random_circuit(rng, 3, 15)
        rho = random_density_matrix(3, rng)
        out = apply_circuit(spec, params, rho)
        assert abs(np.trace(out.matrix) - 1.0) < 1e-10
        assert np.abs(out.matrix - out.matrix.conj().T).max() < 1e-10

    def test_inverse_circuit_recovers_input(self):
        rng = np.random.default_rng(60)
        for _ in range(8):
            spec, params = random_circuit(rng, 3, 10)
            rho = random_density_matrix(3, rng)
            mid = apply_circuit(spec, params, rho)
            inv_ops = []
            for op in reversed(spec.ops):
                if op.is_rotation and op.param_slot is not None:
                    inv_ops.append(GateOp(op.kind, op.target, param_slot=op.param_slot))
                elif op.is_rotation:
                    inv_ops.append(GateOp(op.kind, op.target, fixed_angle=-op.fixed_angle))
                else:
                    inv_ops.append(op)  # X, Y, Z, H, CNOT are self-inverse
            inv = CircuitSpec(3, tuple(inv_ops), spec.num_params)
            back = apply_circuit(inv, -np.asarray(params), mid)
            np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-9)

    def test_param_count_mismatch(self):
        spec = CircuitSpec(1, (GateOp("RX", target=0, param_slot=0),), 1)
        with pytest.raises(ValueError, match="parameter"):
            apply_circuit(spec, [], DensityMatrix.basis(1, 0))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="qubit"):
            apply_circuit(CircuitSpec(2, (), 0), [], DensityMatrix.basis(1, 0))

    def test_cnot_orientation(self):
        # Control on qubit 1 (least significant), target on qubit 0.
        spec = CircuitSpec(2, (GateOp("CNOT", target=0, control=1),), 0)
        out = apply_circuit(spec, [], DensityMatrix.basis(2, 0b01))
        np.testing.assert_allclose(out.matrix, DensityMatrix.basis(2, 0b11).matrix, atol=1e-15)


class TestClassProbabilities:
    def _basis_povm(self):
        return Povm((np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)))

    def test_projective_on_basis_state(self):
        p = class_probabilities(DensityMatrix.basis(1, 0), self._basis_povm())
        np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-15)

    def test_maximally_mixed(self):
        p = class_probabilities(DensityMatrix.maximally_mixed(1), self._basis_povm())
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-15)

    def test_random_states_match_trace_oracle(self):
        rng = np.random.default_rng(70)
        for _ in range(10):
            rho = random_density_matrix(2, rng)
            # Random two-effect POVM: E and I - E with E PSD and bounded.
            g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            h = g @ g.conj().T
            e = h / (np.linalg.eigvalsh(h).max() * 1.25)
            povm = Povm((e, np.eye(4) - e))
            p = class_probabilities(rho, povm)
            want = [float(np.trace(eff @ rho.matrix).real) for eff in povm.effects]
            np.testing.assert_allclose(p, want, atol=1e-10)
            assert p.sum() == pytest.approx(1.0, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="match"):
            class_probabilities(DensityMatrix.basis(2, 0), self._basis_povm())


class TestPovmValidation:
    def test_rejects_incomplete(self):
        with pytest.raises(ValueError, match="identity"):
            Povm((np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 0.5]).astype(complex)))

    def test_rejects_non_psd(self):
        with pytest.raises(ValueError, match="PSD"):
            Povm((np.diag([1.5, 0.0]).astype(complex), np.diag([-0.5, 1.0]).astype(complex)))


class TestSampleShots:
    def test_degenerate_distribution(self):
        counts = sample_shots([1.0, 0.0], 1000, seed=4)
        assert counts.tolist() == [1000, 0]

    def test_fair_coin_concentration(self):
        counts = sample_shots([0.5, 0.5], 10**6, seed=5)
        assert abs(counts[0] / 10**6 - 0.5) < 0.005

    def test_deterministic_per_seed(self):
        a = sample_shots([0.3, 0.7], 1000, seed=6)
        b = sample_shots([0.3, 0.7], 1000, seed=6)
        assert a.tolist() == b.tolist()
        c = sample_shots([0.3, 0.7], 1000, seed=7)
        assert a.tolist() != c.tolist()

    def test_counts_sum(self):
        counts = sample_shots([0.2, 0.5, 0.3], 12345, seed=8)
        assert counts.sum() == 12345

    def test_invalid_probs(self):
        with pytest.raises(ValueError, match="invalid"):
            sample_shots([0.7, 0.7], 10, seed=0)
        with pytest.raises(ValueError, match="n_shots"):
            sample_shots([1.0, 0.0], 0, seed=0)


class TestSpecSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(90)
        spec, _ = random_circuit(rng, 3, 12)
        text = spec_to_json(spec)
        assert spec_from_json(text) == spec

    def test_json_shape(self):
        spec = CircuitSpec(2, (GateOp("RY", target=1, param_slot=0),), 1)
        doc = json.loads(spec_to_json(spec))
        assert doc["num_qubits"] == 2 and doc["num_params"] == 1
        assert doc["ops"][0] == {
            "kind": "RY", "target": 1, "control": None, "param_slot": 0, "fixed_angle": None,
        }


def test_op_unitary_cnot_matches_oracle():
    from oracles import embed_cnot_oracle

    for n, c, t in [(2, 0, 1), (2, 1, 0), (3, 0, 2), (3, 2, 0), (3, 1, 2)]:
        got = op_unitary(GateOp("CNOT", target=t, control=c), (), n)
        np.testing.assert_array_equal(got, embed_cnot_oracle(c, t, n))
