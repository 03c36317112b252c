"""Dense complex linear algebra for small multi-qubit systems.

Matrices are plain numpy ``complex128`` arrays in row-major order. Quantum
states get thin frozen wrappers (:class:`StateVector`, :class:`DensityMatrix`)
that validate the physicality invariants once, at construction, and are
immutable and safe to share afterwards. Every operation in this module is a
pure function.

The simulator is intentionally dense: at the target scale (a handful of
qubits) dense storage is both the simplest and the fastest option.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_QUBITS",
    "StateVector",
    "DensityMatrix",
    "as_matrix",
    "tensor",
    "trace_distance",
    "hermitian_eigenvalues",
    "partial_trace",
    "random_statevector",
    "random_density_matrix",
]

# Hard cap on system size so a stray tensor product cannot allocate gigabytes.
# Reassignable by callers that really want more.
MAX_QUBITS = 10

_HERM_ATOL = 1e-10
_TRACE_ATOL = 1e-10
_EIG_SLACK = -1e-9
_NORM_ATOL = 1e-10


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a finite 2-d complex array.

    Raises ``ValueError`` for non-matrix shapes or NaN/Inf entries.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {a.ndim}")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    return a


def _qubit_count(dim: int, what: str) -> int:
    n = max(dim, 1).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"{what} dimension {dim} is not a power of two")
    return n


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state on ``num_qubits`` qubits, unit norm within 1e-10."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if not np.isfinite(amps).all():
            raise ValueError("amplitudes must be finite")
        if len(amps) != 2**self.num_qubits:
            raise ValueError(
                f"expected {2 ** self.num_qubits} amplitudes for "
                f"{self.num_qubits} qubit(s), got {len(amps)}"
            )
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > _NORM_ATOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm_sq!r}")
        object.__setattr__(self, "amplitudes", _freeze(amps))

    @classmethod
    def of(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(_qubit_count(len(amps), "state vector"), amps)

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.num_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state: Hermitian, unit trace, PSD up to a small numerical slack."""

    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        dim = 2**self.num_qubits
        if m.shape != (dim, dim):
            raise ValueError(
                f"expected a {dim}x{dim} matrix for {self.num_qubits} qubit(s), got {m.shape}"
            )
        if np.abs(m - m.conj().T).max() > _HERM_ATOL:
            raise ValueError("density matrix is not Hermitian within 1e-10")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > _TRACE_ATOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        evals = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
        if evals.min() < _EIG_SLACK:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min()!r}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    @classmethod
    def of(cls, matrix) -> "DensityMatrix":
        m = as_matrix(matrix)
        return cls(_qubit_count(m.shape[0], "density matrix"), m)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "DensityMatrix":
        """Projector onto the computational basis state ``|index>``."""
        dim = 2**num_qubits
        if not 0 <= index < dim:
            raise ValueError(f"basis index {index} out of range for {num_qubits} qubit(s)")
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(num_qubits, m)

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        dim = 2**num_qubits
        return cls(num_qubits, np.eye(dim, dtype=complex) / dim)


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two matrices.

    Refuses products whose dimensions exceed the ``2**MAX_QUBITS`` cap; this
    signals an instance too large for the dense simulator rather than an
    algorithmic error.
    """
    am, bm = as_matrix(a), as_matrix(b)
    max_dim = 2**MAX_QUBITS
    if am.shape[0] * bm.shape[0] > max_dim or am.shape[1] * bm.shape[1] > max_dim:
        raise ValueError(
            f"tensor product dimension {am.shape[0] * bm.shape[0]} exceeds the "
            f"{max_dim} cap ({MAX_QUBITS} qubits)"
        )
    return np.kron(am, bm)


def hermitian_eigenvalues(m, atol: float = 1e-8) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, ascending.

    Raises ``ValueError`` if ``m`` deviates from Hermitian by more than
    ``atol`` in any entry.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix is not square: {a.shape}")
    if np.abs(a - a.conj().T).max() > atol:
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh((a + a.conj().T) / 2.0)


def trace_distance(sigma: DensityMatrix, rho: DensityMatrix) -> float:
    """Trace distance: half the absolute eigenvalue sum of the difference."""
    if sigma.num_qubits != rho.num_qubits:
        raise ValueError(
            f"dimension mismatch: {sigma.num_qubits} vs {rho.num_qubits} qubit(s)"
        )
    evals = hermitian_eigenvalues(sigma.matrix - rho.matrix)
    return float(0.5 * np.sum(np.abs(evals)))


def partial_trace(state: DensityMatrix, keep) -> DensityMatrix:
    """Reduced density matrix over the qubits in ``keep`` (ascending order)."""
    n = state.num_qubits
    kept = sorted(set(int(q) for q in keep))
    if not kept:
        raise ValueError("keep set must not be empty")
    if kept[0] < 0 or kept[-1] >= n:
        raise ValueError(f"keep indices {kept} out of range for {n} qubit(s)")

    t = state.matrix.reshape([2] * (2 * n))
    # Row axis of qubit q is q, column axis is n + q. Traced qubits share one
    # einsum label between row and column; kept qubits keep distinct labels.
    row_labels = []
    col_labels = []
    for q in range(n):
        if q in kept:
            row_labels.append(2 * q)
            col_labels.append(2 * q + 1)
        else:
            row_labels.append(2 * q)
            col_labels.append(2 * q)
    out_labels = [2 * q for q in kept] + [2 * q + 1 for q in kept]
    reduced = np.einsum(t, row_labels + col_labels, out_labels)
    dim = 2 ** len(kept)
    return DensityMatrix(len(kept), reduced.reshape(dim, dim))


def random_statevector(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    dim = 2**num_qubits
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(num_qubits, z / np.linalg.norm(z))


def random_density_matrix(
    num_qubits: int, rng: np.random.Generator, rank: int | None = None
) -> DensityMatrix:
    """Random mixed state from the Ginibre (Hilbert-Schmidt) ensemble."""
    dim = 2**num_qubits
    r = dim if rank is None else max(1, min(int(rank), dim))
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    m = g @ g.conj().T
    return DensityMatrix(num_qubits, m / np.trace(m))
