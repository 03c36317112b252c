import numpy as np
import pytest

from oracles import charpoly_root_eigs, kron_oracle
from rotcert.qla import (
    DensityMatrix,
    StateVector,
    hermitian_eigenvalues,
    partial_trace,
    random_density_matrix,
    random_statevector,
    tensor,
    trace_distance,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def random_hermitian(rng, dim):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2


class TestTensor:
    def test_identity_times_identity(self):
        np.testing.assert_array_equal(tensor(I2, I2), np.eye(4))

    def test_basis_projectors(self):
        np.testing.assert_array_equal(tensor(P0, P1), np.diag([0, 1, 0, 0]).astype(complex))

    def test_x_tensor_z_matches_index_oracle(self):
        np.testing.assert_array_equal(tensor(X, Z), kron_oracle(X, Z))

    def test_random_matrices_match_index_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
            b = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
            np.testing.assert_allclose(tensor(a, b), kron_oracle(a, b), atol=1e-14)

    def test_associative_on_integer_matrices(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            a, b, c = (rng.integers(-3, 4, size=(2, 2)).astype(complex) for _ in range(3))
            np.testing.assert_array_equal(tensor(tensor(a, b), c), tensor(a, tensor(b, c)))

    def test_dimension_cap(self):
        big = np.eye(2**6)
        with pytest.raises(ValueError, match="cap"):
            tensor(big, np.eye(2**5))

    def test_rejects_non_finite(self):
        bad = np.array([[np.nan, 0], [0, 1]])
        with pytest.raises(ValueError, match="finite"):
            tensor(bad, I2)


class TestTraceDistance:
    def test_identical_states(self):
        s = DensityMatrix.basis(1, 0)
        assert trace_distance(s, s) == 0.0

    def test_orthogonal_pure_states(self):
        assert trace_distance(DensityMatrix.basis(1, 0), DensityMatrix.basis(1, 1)) == pytest.approx(1.0)

    def test_pure_vs_maximally_mixed(self):
        tau = trace_distance(DensityMatrix.basis(1, 0), DensityMatrix.maximally_mixed(1))
        assert tau == pytest.approx(0.5)

    def test_symmetry_bounds_triangle(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            a = random_density_matrix(2, rng)
            b = random_density_matrix(2, rng)
            c = random_density_matrix(2, rng)
            tab, tba = trace_distance(a, b), trace_distance(b, a)
            assert tab == pytest.approx(tba, abs=1e-12)
            assert -1e-12 <= tab <= 1 + 1e-12
            assert tab <= trace_distance(a, c) + trace_distance(c, b) + 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            trace_distance(DensityMatrix.basis(1, 0), DensityMatrix.basis(2, 0))


class TestHermitianEigenvalues:
    def test_diagonal(self):
        np.testing.assert_allclose(hermitian_eigenvalues(np.diag([0.7, 0.3])), [0.3, 0.7])

    def test_pauli_x_spectrum(self):
        np.testing.assert_allclose(hermitian_eigenvalues(X), [-1.0, 1.0], atol=1e-12)

    def test_random_matches_charpoly_roots(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            h = random_hermitian(rng, 4)
            np.testing.assert_allclose(
                hermitian_eigenvalues(h), charpoly_root_eigs(h), atol=1e-8
            )

    def test_ascending_and_sum_equals_trace(self):
        rng = np.random.default_rng(6)
        for dim in (2, 3, 4, 8):
            h = random_hermitian(rng, dim)
            evals = hermitian_eigenvalues(h)
            assert np.all(np.diff(evals) >= -1e-14)
            assert np.sum(evals) == pytest.approx(float(np.trace(h).real), abs=1e-8)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            hermitian_eigenvalues(np.array([[0, 1], [0, 0]], dtype=complex))


class TestPartialTrace:
    def test_product_basis_state(self):
        rho = DensityMatrix.basis(2, 0)  # |00><00|
        np.testing.assert_allclose(partial_trace(rho, {0}).matrix, P0, atol=1e-14)

    def test_bell_state_marginal(self):
        amps = np.zeros(4, dtype=complex)
        amps[0] = amps[3] = 1 / np.sqrt(2)
        bell = StateVector(2, amps).density_matrix()
        np.testing.assert_allclose(partial_trace(bell, {0}).matrix, np.eye(2) / 2, atol=1e-12)

    def test_product_state_factor_recovery(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            rho_a = random_density_matrix(2, rng)
            rho_b = random_density_matrix(1, rng)
            joint = DensityMatrix(3, tensor(rho_a.matrix, rho_b.matrix))
            np.testing.assert_allclose(
                partial_trace(joint, {0, 1}).matrix, rho_a.matrix, atol=1e-10
            )
            np.testing.assert_allclose(
                partial_trace(joint, {2}).matrix, rho_b.matrix, atol=1e-10
            )

    def test_keep_everything_is_identity(self):
        rng = np.random.default_rng(12)
        rho = random_density_matrix(2, rng)
        np.testing.assert_allclose(partial_trace(rho, {0, 1}).matrix, rho.matrix, atol=1e-14)

    def test_trace_preserved(self):
        rng = np.random.default_rng(13)
        rho = random_density_matrix(3, rng)
        reduced = partial_trace(rho, {1})
        assert float(np.trace(reduced.matrix).real) == pytest.approx(1.0, abs=1e-12)

    def test_errors(self):
        rho = DensityMatrix.basis(2, 0)
        with pytest.raises(ValueError, match="empty"):
            partial_trace(rho, set())
        with pytest.raises(ValueError, match="range"):
            partial_trace(rho, {5})


class TestStateTypes:
    def test_statevector_rejects_bad_norm(self):
        with pytest.raises(ValueError, match="normalized"):
            StateVector(1, np.array([1.0, 1.0]))

    def test_statevector_of_infers_qubits(self):
        sv = StateVector.of([0, 0, 0, 1])
        assert sv.num_qubits == 2

    def test_density_matrix_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(1, np.array([[1, 1], [0, 0]], dtype=complex))

    def test_density_matrix_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(1, np.eye(2, dtype=complex))

    def test_density_matrix_rejects_negative_eigenvalue(self):
        m = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(ValueError, match="negative eigenvalue"):
            DensityMatrix(1, m)

    def test_values_are_immutable(self):
        rho = DensityMatrix.basis(1, 0)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 5.0
        sv = random_statevector(2, np.random.default_rng(0))
        with pytest.raises(ValueError):
            sv.amplitudes[0] = 1.0

    def test_random_states_are_valid(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            random_density_matrix(3, rng)
            random_statevector(3, rng)
