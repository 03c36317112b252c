"""Gate-level circuits on density matrices.

Convention notes, fixed once for the whole package:

* Rotation gates follow ``R(theta) = cos(theta/2) I - i sin(theta/2) P``
  for Pauli generator ``P``.
* Qubit 0 is the most significant bit of the computational basis index,
  so the full-system operator for a gate on qubit ``q`` is
  ``I_(2^q) (x) U (x) I_(2^(n-1-q))``.
* Shot sampling uses numpy's PCG64 generator, seeded explicitly, so runs
  reproduce bit-exactly per seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .qla import DensityMatrix, as_matrix

__all__ = [
    "ROTATION_KINDS",
    "FIXED_KINDS",
    "GateOp",
    "CircuitSpec",
    "Povm",
    "gate_matrix",
    "op_unitary",
    "circuit_unitary",
    "apply_circuit",
    "class_probabilities",
    "sample_shots",
    "spec_to_dict",
    "spec_from_dict",
    "spec_to_json",
    "spec_from_json",
]

ROTATION_KINDS = ("RX", "RY", "RZ")
FIXED_KINDS = ("X", "Y", "Z", "H", "CNOT")

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
# Control on the first (most significant) qubit, target on the second.
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

_PAULI_FOR_ROTATION = {"RX": _X, "RY": _Y, "RZ": _Z}
_FIXED_MATRIX = {"X": _X, "Y": _Y, "Z": _Z, "H": _H, "CNOT": _CNOT}


@dataclass(frozen=True)
class GateOp:
    """One gate: a rotation (parameter slot or fixed angle) or a fixed gate."""

    kind: str
    target: int
    control: int | None = None
    param_slot: int | None = None
    fixed_angle: float | None = None

    def __post_init__(self):
        if self.kind not in ROTATION_KINDS + FIXED_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.target < 0:
            raise ValueError("target index must be non-negative")
        if self.kind in ROTATION_KINDS:
            if (self.param_slot is None) == (self.fixed_angle is None):
                raise ValueError(
                    f"{self.kind} needs exactly one of param_slot / fixed_angle"
                )
            if self.control is not None:
                raise ValueError("rotation gates take no control qubit")
        else:
            if self.param_slot is not None or self.fixed_angle is not None:
                raise ValueError(f"{self.kind} takes neither param_slot nor fixed_angle")
            if self.kind == "CNOT":
                if self.control is None:
                    raise ValueError("CNOT requires a control qubit")
                if self.control == self.target:
                    raise ValueError("CNOT control and target must differ")
            elif self.control is not None:
                raise ValueError(f"{self.kind} takes no control qubit")

    @property
    def is_rotation(self) -> bool:
        return self.kind in ROTATION_KINDS


@dataclass(frozen=True)
class CircuitSpec:
    """Ordered gate program over ``num_qubits`` qubits with ``num_params`` slots."""

    num_qubits: int
    ops: tuple
    num_params: int

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        if self.num_params < 0:
            raise ValueError("num_params must be non-negative")
        for op in self.ops:
            if not isinstance(op, GateOp):
                raise TypeError(f"ops must be GateOp instances, got {type(op)}")
            qubits = [op.target] if op.control is None else [op.target, op.control]
            for q in qubits:
                if q >= self.num_qubits:
                    raise ValueError(f"qubit index {q} out of range (num_qubits={self.num_qubits})")
            if op.param_slot is not None and op.param_slot >= self.num_params:
                raise ValueError(
                    f"param slot {op.param_slot} out of range (num_params={self.num_params})"
                )


@dataclass(frozen=True, eq=False)
class Povm:
    """Measurement effects, one per class: PSD and summing to the identity."""

    effects: tuple

    def __post_init__(self):
        effects = tuple(as_matrix(e) for e in self.effects)
        if not effects:
            raise ValueError("POVM needs at least one effect")
        dim = effects[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for e in effects:
            if e.shape != (dim, dim):
                raise ValueError("POVM effects must be square and equally sized")
            if np.abs(e - e.conj().T).max() > 1e-9:
                raise ValueError("POVM effect is not Hermitian")
            if np.linalg.eigvalsh((e + e.conj().T) / 2.0).min() < -1e-9:
                raise ValueError("POVM effect is not PSD within 1e-9")
            total += e
        if np.abs(total - np.eye(dim)).max() > 1e-9:
            raise ValueError("POVM effects do not sum to the identity within 1e-9")
        for e in effects:
            e.setflags(write=False)
        object.__setattr__(self, "effects", effects)

    @property
    def num_classes(self) -> int:
        return len(self.effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]


def _rotation_matrix(kind: str, angle: float) -> np.ndarray:
    p = _PAULI_FOR_ROTATION[kind]
    half = 0.5 * float(angle)
    return np.cos(half) * _I2 - 1j * np.sin(half) * p


def gate_matrix(op: GateOp, angle: float | None = None) -> np.ndarray:
    """Base unitary for one gate: 2x2, or the canonical 4x4 for CNOT.

    ``angle`` must be supplied exactly when ``op`` is a rotation bound to a
    parameter slot; fixed-angle rotations and fixed gates reject it.
    """
    if op.is_rotation:
        if op.param_slot is not None:
            if angle is None:
                raise ValueError(f"{op.kind} with a param slot requires an angle")
            return _rotation_matrix(op.kind, angle)
        if angle is not None:
            raise ValueError(f"{op.kind} with a fixed angle takes no angle argument")
        return _rotation_matrix(op.kind, op.fixed_angle)
    if angle is not None:
        raise ValueError(f"{op.kind} takes no angle argument")
    return _FIXED_MATRIX[op.kind].copy()


def _embed_single(u2: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    left = np.eye(2**qubit, dtype=complex)
    right = np.eye(2 ** (num_qubits - qubit - 1), dtype=complex)
    return np.kron(np.kron(left, u2), right)


def _embed_cnot(control: int, target: int, num_qubits: int) -> np.ndarray:
    dim = 2**num_qubits
    control_bit = 1 << (num_qubits - 1 - control)
    target_bit = 1 << (num_qubits - 1 - target)
    u = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        out = b ^ target_bit if b & control_bit else b
        u[out, b] = 1.0
    return u


def op_unitary(op: GateOp, params, num_qubits: int) -> np.ndarray:
    """Full ``2^n x 2^n`` unitary for one gate embedded in an n-qubit register."""
    if op.kind == "CNOT":
        return _embed_cnot(op.control, op.target, num_qubits)
    if op.param_slot is not None:
        base = _rotation_matrix(op.kind, float(params[op.param_slot]))
    elif op.is_rotation:
        base = _rotation_matrix(op.kind, op.fixed_angle)
    else:
        base = _FIXED_MATRIX[op.kind]
    return _embed_single(base, op.target, num_qubits)


def circuit_unitary(spec: CircuitSpec, params) -> np.ndarray:
    """Product of all embedded gate unitaries, first op applied first."""
    params = np.asarray(params, dtype=float)
    u = np.eye(2**spec.num_qubits, dtype=complex)
    for op in spec.ops:
        u = op_unitary(op, params, spec.num_qubits) @ u
    return u


def apply_circuit(spec: CircuitSpec, params, state: DensityMatrix) -> DensityMatrix:
    """Run the circuit: conjugate the state by each gate in program order."""
    params = np.asarray(params, dtype=float).reshape(-1)
    if len(params) != spec.num_params:
        raise ValueError(f"expected {spec.num_params} parameter(s), got {len(params)}")
    if state.num_qubits != spec.num_qubits:
        raise ValueError(
            f"state has {state.num_qubits} qubit(s), circuit needs {spec.num_qubits}"
        )
    rho = state.matrix
    for op in spec.ops:
        u = op_unitary(op, params, spec.num_qubits)
        rho = u @ rho @ u.conj().T
    return DensityMatrix(spec.num_qubits, rho)


def class_probabilities(state: DensityMatrix, povm: Povm) -> np.ndarray:
    """Outcome probabilities ``p_k = Tr(effect_k rho)``, clamped to [0, 1]."""
    if povm.dim != state.dim:
        raise ValueError(f"POVM dimension {povm.dim} does not match state dimension {state.dim}")
    p = np.array([float(np.trace(e @ state.matrix).real) for e in povm.effects])
    if p.min() < -1e-9:
        raise ValueError(f"negative outcome probability {p.min()!r}")
    p = np.clip(p, 0.0, 1.0)
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {p.sum()!r}")
    return p


def sample_shots(probs, n_shots: int, seed: int) -> np.ndarray:
    """Multinomial counts from ``n_shots`` independent measurements."""
    p = np.asarray(probs, dtype=float).reshape(-1)
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    if p.min() < -1e-9 or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"invalid probability vector {p!r}")
    p = np.clip(p, 0.0, None)
    rng = np.random.default_rng(seed)
    return rng.multinomial(n_shots, p / p.sum())


def spec_to_dict(spec: CircuitSpec) -> dict:
    return {
        "num_qubits": spec.num_qubits,
        "num_params": spec.num_params,
        "ops": [asdict(op) for op in spec.ops],
    }


def spec_from_dict(d: dict) -> CircuitSpec:
    ops = tuple(GateOp(**op) for op in d["ops"])
    return CircuitSpec(num_qubits=d["num_qubits"], ops=ops, num_params=d["num_params"])


def spec_to_json(spec: CircuitSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2, sort_keys=True)


def spec_from_json(text: str) -> CircuitSpec:
    return spec_from_dict(json.loads(text))
