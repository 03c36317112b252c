"""Independent reference implementations used to check the library.

Everything here is written from first principles (index arithmetic, textbook
recursions, brute-force enumeration) and deliberately avoids the library's
own code paths, so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def kron_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product by explicit index arithmetic:
    out[ir*rb + jr, ic*cb + jc] = a[ir, ic] * b[jr, jc]."""
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for ir in range(ra):
        for ic in range(ca):
            for jr in range(rb):
                for jc in range(cb):
                    out[ir * rb + jr, ic * cb + jc] = a[ir, ic] * b[jr, jc]
    return out


def charpoly_root_eigs(a: np.ndarray) -> np.ndarray:
    """Eigenvalues via Faddeev-LeVerrier characteristic-polynomial
    coefficients and companion-matrix root finding, sorted ascending."""
    n = a.shape[0]
    coeffs = np.empty(n + 1, dtype=complex)
    coeffs[0] = 1.0
    mk = np.zeros((n, n), dtype=complex)
    c = 1.0 + 0.0j
    for k in range(1, n + 1):
        mk = a @ (mk + c * np.eye(n))
        c = -np.trace(mk) / k
        coeffs[k] = c
    return np.sort(np.roots(coeffs).real)


# --- from-scratch gate algebra -------------------------------------------

def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex
    )


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def embed_single_oracle(u2: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Single-qubit embedding with qubit 0 as the most significant bit."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = kron_oracle(out, u2 if q == qubit else np.eye(2, dtype=complex))
    return out


def embed_cnot_oracle(control: int, target: int, n: int) -> np.ndarray:
    dim = 2**n
    u = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        bits = [(b >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        out = 0
        for bit in bits:
            out = (out << 1) | bit
        u[out, b] = 1.0
    return u


def gate_unitary_oracle(op, params, n: int) -> np.ndarray:
    if op.kind == "CNOT":
        return embed_cnot_oracle(op.control, op.target, n)
    if op.kind in ("RX", "RY", "RZ"):
        angle = params[op.param_slot] if op.param_slot is not None else op.fixed_angle
        base = {"RX": rx, "RY": ry, "RZ": rz}[op.kind](float(angle))
    else:
        base = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z, "H": HADAMARD}[op.kind]
    return embed_single_oracle(base, op.target, n)


def full_unitary_oracle(spec, params) -> np.ndarray:
    """Whole-circuit unitary: multiply embedded gates, first op rightmost."""
    u = np.eye(2**spec.num_qubits, dtype=complex)
    for op in spec.ops:
        u = gate_unitary_oracle(op, params, spec.num_qubits) @ u
    return u


def apply_circuit_oracle(spec, params, rho: np.ndarray) -> np.ndarray:
    """One-shot conjugation by the full product unitary."""
    u = full_unitary_oracle(spec, params)
    return u @ rho @ u.conj().T


def random_circuit(rng: np.random.Generator, num_qubits: int, num_ops: int):
    """Random mixed circuit over all supported gate kinds."""
    from rotcert.circuit import CircuitSpec, GateOp

    kinds = ["RX", "RY", "RZ", "X", "Y", "Z", "H", "CNOT"]
    ops = []
    slot = 0
    for _ in range(num_ops):
        kind = kinds[int(rng.integers(len(kinds)))]
        target = int(rng.integers(num_qubits))
        if kind == "CNOT":
            if num_qubits < 2:
                kind = "X"
                ops.append(GateOp("X", target=target))
                continue
            control = int(rng.integers(num_qubits - 1))
            if control >= target:
                control += 1
            ops.append(GateOp("CNOT", target=target, control=control))
        elif kind in ("RX", "RY", "RZ"):
            if rng.random() < 0.5:
                ops.append(GateOp(kind, target=target, param_slot=slot))
                slot += 1
            else:
                ops.append(GateOp(kind, target=target, fixed_angle=float(rng.uniform(-np.pi, np.pi))))
        else:
            ops.append(GateOp(kind, target=target))
    spec = CircuitSpec(num_qubits=num_qubits, ops=tuple(ops), num_params=slot)
    params = rng.uniform(-np.pi, np.pi, size=slot)
    return spec, params


def finite_diff_loss_grad(model, sigma, label: int, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of the cross-entropy loss."""
    from dataclasses import replace

    from rotcert.vqc import cross_entropy, predict_exact

    grad = np.zeros(model.ansatz.num_params)
    for j in range(model.ansatz.num_params):
        theta = np.array(model.params)
        theta[j] += step
        up = cross_entropy(predict_exact(replace(model, params=theta), sigma), label)
        theta[j] -= 2 * step
        down = cross_entropy(predict_exact(replace(model, params=theta), sigma), label)
        grad[j] = (up - down) / (2 * step)
    return grad


def finite_diff_prob_grad(model, sigma, k: int, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of the class-k probability."""
    from dataclasses import replace

    from rotcert.vqc import predict_exact

    grad = np.zeros(model.ansatz.num_params)
    for j in range(model.ansatz.num_params):
        theta = np.array(model.params)
        theta[j] += step
        up = float(predict_exact(replace(model, params=theta), sigma)[k])
        theta[j] -= 2 * step
        down = float(predict_exact(replace(model, params=theta), sigma)[k])
        grad[j] = (up - down) / (2 * step)
    return grad


def eq1_subset_oracle(y_fn, sigma_matrix: np.ndarray, angles, k: int) -> float:
    """Brute-force subset enumeration of the tan-weighted expansion.

    Iterates subset sizes with itertools.combinations, builds the flip
    operators with the index-arithmetic Kronecker product, and sums
    g * prod(tan) * y_k(flipped) over every non-empty subset.
    """
    from rotcert.qla import DensityMatrix

    angles = np.asarray(angles, dtype=float)
    n = len(angles)
    g = float(np.prod(np.cos(angles)))
    total = g * float(y_fn(DensityMatrix(n, sigma_matrix))[k])
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            coeff = 1.0
            flip = np.eye(2**n, dtype=complex)
            for q in subset:
                coeff *= math.tan(angles[q])
                flip = embed_single_oracle(PAULI_X, q, n) @ flip
            flipped = flip @ sigma_matrix @ flip.conj().T
            total += g * coeff * float(y_fn(DensityMatrix(n, flipped))[k])
    return total


def perceptron_separates(features: np.ndarray, labels: np.ndarray, max_epochs: int = 2000) -> bool:
    """Classic perceptron; True when it reaches zero training errors."""
    x = np.hstack([features, np.ones((len(features), 1))])
    y = np.where(labels == 1, 1.0, -1.0)
    w = np.zeros(x.shape[1])
    for _ in range(max_epochs):
        errors = 0
        for xi, yi in zip(x, y):
            if yi * float(w @ xi) <= 0:
                w = w + yi * xi
                errors += 1
        if errors == 0:
            return True
    return False
