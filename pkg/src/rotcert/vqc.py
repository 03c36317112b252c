"""Variational binary classifier on data qubits plus one readout ancilla.

The classifier tensors the encoded input with an ancilla in ``|0>``, runs a
trainable circuit, and reads class probabilities from the ancilla in the
computational basis. Gradients come from the exact parameter-shift identity
for single-qubit rotations; training is plain gradient descent with a
learning-rate halving rule on sustained loss regressions.

For batch work (training, Monte-Carlo smoothing) the model is folded into
"data-space effects": ``E_k = (U^dag Pi_k U)`` contracted with the ancilla
``|0><0|``, so that ``y_k(sigma) = Tr(E_k sigma)`` on the data register
alone. This is algebraically identical to running the circuit and measuring,
just cheaper, and the equality is pinned down by tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .circuit import (
    CircuitSpec,
    GateOp,
    Povm,
    apply_circuit,
    circuit_unitary,
    class_probabilities,
    sample_shots,
    spec_from_dict,
    spec_to_dict,
)
from .encode import Dataset, EncodingScheme, encode_state
from .qla import DensityMatrix, tensor

__all__ = [
    "ClassifierModel",
    "TrainConfig",
    "ancilla_povm",
    "build_ansatz",
    "new_model",
    "predict_exact",
    "predict_shots",
    "data_space_effects",
    "cross_entropy",
    "prob_shift_grad",
    "parameter_shift_grad",
    "train",
    "accuracy",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]

_LOSS_FLOOR = 1e-9
_SHIFT = np.pi / 2.0


def ancilla_povm(num_data_qubits: int) -> Povm:
    """Identity on the data register times ancilla basis projectors."""
    eye = np.eye(2**num_data_qubits, dtype=complex)
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    return Povm((np.kron(eye, p0), np.kron(eye, p1)))


def build_ansatz(num_data_qubits: int, depth: int = 2) -> CircuitSpec:
    """Layered hardware-efficient ansatz over data qubits plus the ancilla.

    Each layer is a per-qubit RY rotation followed by a CNOT ring; a final
    stage of CNOTs folds every data qubit into the ancilla readout.
    """
    if num_data_qubits < 1:
        raise ValueError("need at least one data qubit")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    m = num_data_qubits + 1
    ops = []
    slot = 0
    for _ in range(depth):
        for q in range(m):
            ops.append(GateOp("RY", target=q, param_slot=slot))
            slot += 1
        for q in range(m - 1):
            ops.append(GateOp("CNOT", target=q + 1, control=q))
        if m > 2:
            ops.append(GateOp("CNOT", target=0, control=m - 1))
    ancilla = m - 1
    for q in range(num_data_qubits):
        ops.append(GateOp("CNOT", target=ancilla, control=q))
    return CircuitSpec(num_qubits=m, ops=tuple(ops), num_params=slot)


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    """Ansatz over data + ancilla qubits, parameters, readout POVM, encoding."""

    ansatz: CircuitSpec
    params: np.ndarray
    povm: Povm
    encoding: EncodingScheme

    def __post_init__(self):
        params = np.array(self.params, dtype=float).reshape(-1)
        if len(params) != self.ansatz.num_params:
            raise ValueError(
                f"got {len(params)} parameter(s), ansatz has {self.ansatz.num_params} slot(s)"
            )
        expected = ancilla_povm(self.num_data_qubits)
        for have, want in zip(self.povm.effects, expected.effects):
            if have.shape != want.shape or np.abs(have - want).max() > 1e-12:
                raise ValueError("POVM must be ancilla basis projectors")
        if self.encoding.num_qubits != self.num_data_qubits:
            raise ValueError(
                f"encoding spans {self.encoding.num_qubits} qubit(s), "
                f"model has {self.num_data_qubits} data qubit(s)"
            )
        params.setflags(write=False)
        object.__setattr__(self, "params", params)

    @property
    def num_data_qubits(self) -> int:
        return self.ansatz.num_qubits - 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    epochs: int
    batch_size: int = 0  # 0 means full batch
    seed: int = 0
    loss: str = "cross_entropy"

    def __post_init__(self):
        if not np.isfinite(self.learning_rate) or self.learning_rate <= 0:
            raise ValueError("learning_rate must be finite and positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 0:
            raise ValueError("batch_size must be non-negative")
        if self.loss != "cross_entropy":
            raise ValueError(f"unsupported loss {self.loss!r}")


def new_model(
    num_data_qubits: int,
    depth: int = 2,
    encoding: EncodingScheme | None = None,
    seed: int = 0,
) -> ClassifierModel:
    """Fresh model with near-identity parameters, uniform in (-0.1, 0.1)."""
    ansatz = build_ansatz(num_data_qubits, depth)
    if encoding is None:
        encoding = EncodingScheme("angle", num_data_qubits)
    rng = np.random.default_rng(seed)
    params = rng.uniform(-0.1, 0.1, size=ansatz.num_params)
    return ClassifierModel(ansatz, params, ancilla_povm(num_data_qubits), encoding)


def predict_exact(model: ClassifierModel, sigma: DensityMatrix) -> np.ndarray:
    """Exact class probabilities: tensor the ancilla, run, measure."""
    if sigma.num_qubits != model.num_data_qubits:
        raise ValueError(
            f"input has {sigma.num_qubits} qubit(s), model expects {model.num_data_qubits}"
        )
    ancilla = np.array([[1, 0], [0, 0]], dtype=complex)
    rho_in = DensityMatrix(model.ansatz.num_qubits, tensor(sigma.matrix, ancilla))
    rho_out = apply_circuit(model.ansatz, model.params, rho_in)
    return class_probabilities(rho_out, model.povm)


def predict_shots(
    model: ClassifierModel, sigma: DensityMatrix, n_shots: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Finite-shot estimate ``counts / n_shots`` plus the raw counts."""
    probs = predict_exact(model, sigma)
    counts = sample_shots(probs, n_shots, seed)
    return counts / float(n_shots), counts


def data_space_effects(model: ClassifierModel, params=None) -> list[np.ndarray]:
    """Per-class operators ``E_k`` with ``y_k(sigma) = Tr(E_k sigma)``.

    Heisenberg-picture fold of the ancilla preparation, the circuit, and the
    readout POVM into the data register.
    """
    theta = model.params if params is None else np.asarray(params, dtype=float)
    u = circuit_unitary(model.ansatz, theta)
    effects = []
    for pi_k in model.povm.effects:
        m = u.conj().T @ pi_k @ u
        effects.append(np.ascontiguousarray(m[::2, ::2]))
    return effects


def _batched_probs(effects: list[np.ndarray], sigmas: np.ndarray) -> np.ndarray:
    """Probabilities for stacked data-register states, shape (n, classes)."""
    cols = [np.einsum("ij,nji->n", e, sigmas).real for e in effects]
    return np.clip(np.stack(cols, axis=1), 0.0, 1.0)


def cross_entropy(probs, label: int) -> float:
    """Negative log probability of the true class, floored for stability."""
    return float(-np.log(float(probs[label]) + _LOSS_FLOOR))


def prob_shift_grad(model: ClassifierModel, sigma: DensityMatrix) -> np.ndarray:
    """Probability Jacobian ``dy_k / dtheta_j``, shape (classes, params).

    Each entry is ``(y_k(theta_j + pi/2) - y_k(theta_j - pi/2)) / 2``, which
    is the exact derivative for single-qubit rotation gates.
    """
    for op in model.ansatz.ops:
        if op.param_slot is not None and not op.is_rotation:
            raise ValueError(f"parameter-shift rule does not cover {op.kind}")
    jac = np.zeros((model.povm.num_classes, model.ansatz.num_params))
    for j in range(model.ansatz.num_params):
        theta = np.array(model.params)
        theta[j] += _SHIFT
        plus = predict_exact(replace(model, params=theta), sigma)
        theta[j] -= 2.0 * _SHIFT
        minus = predict_exact(replace(model, params=theta), sigma)
        jac[:, j] = 0.5 * (plus - minus)
    return jac


def parameter_shift_grad(
    model: ClassifierModel, sigma: DensityMatrix, label: int
) -> np.ndarray:
    """Gradient of the cross-entropy loss via the parameter-shift identity."""
    y_label = float(predict_exact(model, sigma)[label])
    jac = prob_shift_grad(model, sigma)
    return -jac[label] / (y_label + _LOSS_FLOOR)


def _batch_loss_grad(
    model: ClassifierModel, params: np.ndarray, sigmas: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    """Mean cross-entropy gradient over a batch, batched over samples."""
    n = len(labels)
    idx = np.arange(n)
    base = _batched_probs(data_space_effects(model, params), sigmas)[idx, labels]
    grad = np.zeros(len(params))
    for j in range(len(params)):
        theta = params.copy()
        theta[j] += _SHIFT
        plus = _batched_probs(data_space_effects(model, theta), sigmas)[idx, labels]
        theta[j] -= 2.0 * _SHIFT
        minus = _batched_probs(data_space_effects(model, theta), sigmas)[idx, labels]
        dy = 0.5 * (plus - minus)
        grad[j] = float(np.mean(-dy / (base + _LOSS_FLOOR)))
    return grad


def _batch_loss(model, params, sigmas, labels) -> float:
    probs = _batched_probs(data_space_effects(model, params), sigmas)
    picked = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(picked + _LOSS_FLOOR)))


def encode_dataset(model: ClassifierModel, data: Dataset) -> np.ndarray:
    """Stacked density matrices of every sample, shape (n, dim, dim)."""
    return np.stack(
        [encode_state(model.encoding, x).density_matrix().matrix for x in data.features]
    )


def train(
    model: ClassifierModel,
    data: Dataset,
    cfg: TrainConfig,
    epoch_log: list | None = None,
) -> ClassifierModel:
    """Gradient-descent training; returns a new model with updated parameters.

    The learning rate halves after 3 consecutive epochs of increasing loss.
    A non-finite loss aborts and returns the last finite parameters.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    sigmas = encode_dataset(model, data)
    labels = data.labels
    rng = np.random.default_rng(cfg.seed)
    params = np.array(model.params)
    last_finite = params.copy()
    lr = cfg.learning_rate
    prev_loss = np.inf
    regressions = 0
    n = len(data)
    batch = cfg.batch_size if 0 < cfg.batch_size < n else n
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for start in range(0, n, batch):
            sel = order[start : start + batch]
            grad = _batch_loss_grad(model, params, sigmas[sel], labels[sel])
            params = params - lr * grad
        loss = _batch_loss(model, params, sigmas, labels)
        if not np.isfinite(loss):
            params = last_finite
            break
        last_finite = params.copy()
        if epoch_log is not None:
            probs = _batched_probs(data_space_effects(model, params), sigmas)
            acc = float(np.mean(np.argmax(probs, axis=1) == labels))
            epoch_log.append({"epoch": epoch, "loss": loss, "accuracy": acc, "lr": lr})
        if loss > prev_loss:
            regressions += 1
            if regressions >= 3:
                lr *= 0.5
                regressions = 0
        else:
            regressions = 0
        prev_loss = loss
    return replace(model, params=params)


def accuracy(
    model: ClassifierModel, data: Dataset, n_shots: int | None = None, seed: int = 0
) -> float:
    """Fraction of correct argmax predictions; ties resolve to class 0."""
    if len(data) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(seed)
    sample_seeds = rng.integers(0, 2**63 - 1, size=len(data))
    hits = 0
    for i, (x, label) in enumerate(zip(data.features, data.labels)):
        sigma = encode_state(model.encoding, x).density_matrix()
        if n_shots is None:
            probs = predict_exact(model, sigma)
        else:
            probs, _ = predict_shots(model, sigma, n_shots, int(sample_seeds[i]))
        hits += int(np.argmax(probs) == label)
    return hits / len(data)


def model_to_dict(model: ClassifierModel) -> dict:
    return {
        "format": "rotcert-model",
        "ansatz": spec_to_dict(model.ansatz),
        "params": [float(v) for v in model.params],
        "encoding": {"kind": model.encoding.kind, "num_qubits": model.encoding.num_qubits},
        "num_classes": model.povm.num_classes,
    }


def model_from_dict(d: dict) -> ClassifierModel:
    if d.get("format") != "rotcert-model":
        raise ValueError("not a rotcert model document")
    ansatz = spec_from_dict(d["ansatz"])
    encoding = EncodingScheme(**d["encoding"])
    if d.get("num_classes", 2) != 2:
        raise ValueError("only binary models are supported")
    return ClassifierModel(
        ansatz, np.array(d["params"], dtype=float), ancilla_povm(ansatz.num_qubits - 1), encoding
    )


def save_model(model: ClassifierModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n")


def load_model(path) -> ClassifierModel:
    return model_from_dict(json.loads(Path(path).read_text()))
