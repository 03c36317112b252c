"""Random X-rotation noise: angle sampling, channel application, smoothing.

The channel puts an ``RX(theta_i)`` in front of every data qubit, with the
angles drawn fresh for each execution. Two sampling modes exist:

* ``tan_bounded``: ``tan(theta_i)`` uniform in ``(h1, h2)``,
* ``uniform_angle``: ``theta_i`` uniform in ``(0, uniform_h)``.

Smoothed predictions are Monte-Carlo averages over independent angle draws,
optionally with finite measurement shots per draw. ``eq1_superposition``
evaluates the closed-form tan-weighted expansion of the smoothed class
probability over bit-flipped variants of the input; it is an algebraic
object in its own right and is not guaranteed to coincide with the
physically simulated channel average (tests report the gap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import GateOp, op_unitary
from .qla import DensityMatrix
from .vqc import ClassifierModel, data_space_effects

__all__ = [
    "ANGLE_MODES",
    "NoiseConfig",
    "NoiseSample",
    "make_sample",
    "sample_noise",
    "apply_rotation_noise",
    "noisy_predict_mc",
    "eq1_superposition",
    "eq1_superposition_prodprob",
    "effective_tan_bounds",
]

ANGLE_MODES = ("tan_bounded", "uniform_angle")

_CHUNK = 8192


@dataclass(frozen=True)
class NoiseConfig:
    """Noise-channel parameters plus the certification floor ``t``."""

    n: int
    h1: float = 0.0
    h2: float = 0.0
    t: float = 0.0
    angle_mode: str = "tan_bounded"
    uniform_h: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("noise acts on at least one qubit")
        if self.angle_mode not in ANGLE_MODES:
            raise ValueError(f"unknown angle_mode {self.angle_mode!r}")
        if self.angle_mode == "tan_bounded":
            if not (0.0 <= self.h1 < self.h2) or not np.isfinite(self.h2):
                raise ValueError(f"need 0 <= h1 < h2 finite, got h1={self.h1}, h2={self.h2}")
        else:
            if not 0.0 < self.uniform_h < np.pi / 2.0:
                raise ValueError(f"uniform_h must lie in (0, pi/2), got {self.uniform_h}")
        if self.t < 0.0 or not np.isfinite(self.t):
            raise ValueError(f"t must be finite and non-negative, got {self.t}")


@dataclass(frozen=True, eq=False)
class NoiseSample:
    """One drawn angle tuple with its cosine-product weight."""

    angles: np.ndarray
    weight_g: float

    def __post_init__(self):
        angles = np.array(self.angles, dtype=float).reshape(-1)
        if len(angles) == 0 or not np.isfinite(angles).all():
            raise ValueError("angles must be a non-empty finite vector")
        g = float(np.prod(np.cos(angles)))
        if abs(g - self.weight_g) > 1e-15 + 1e-12 * abs(g):
            raise ValueError(f"weight_g {self.weight_g!r} does not match angles (want {g!r})")
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "weight_g", g)


def make_sample(angles) -> NoiseSample:
    """Build a sample from raw angles, computing the weight. Testing hook."""
    a = np.asarray(angles, dtype=float).reshape(-1)
    return NoiseSample(a, float(np.prod(np.cos(a))))


def _draw_angles(cfg: NoiseConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    if cfg.angle_mode == "tan_bounded":
        return np.arctan(rng.uniform(cfg.h1, cfg.h2, size=(count, cfg.n)))
    return rng.uniform(0.0, cfg.uniform_h, size=(count, cfg.n))


def sample_noise(cfg: NoiseConfig, seed: int) -> NoiseSample:
    """One angle tuple, deterministic per seed."""
    rng = np.random.default_rng(seed)
    return make_sample(_draw_angles(cfg, rng, 1)[0])


def effective_tan_bounds(cfg: NoiseConfig) -> tuple[float, float]:
    """Tangent-space noise bounds ``(h1, h2)`` consumed by the certification
    formulas; uniform-angle configs convert via ``h := tan(uniform_h)``."""
    if cfg.angle_mode == "tan_bounded":
        return cfg.h1, cfg.h2
    return 0.0, float(np.tan(cfg.uniform_h))


def _rx_batch(angles: np.ndarray) -> np.ndarray:
    """Stacked RX matrices, shape (n_draws, 2, 2)."""
    half = 0.5 * angles
    c, s = np.cos(half), np.sin(half)
    out = np.empty(angles.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 1, 1] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    return out


def _batched_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, p, q = a.shape[0], a.shape[1], b.shape[1]
    return np.einsum("nab,ncd->nacbd", a, b).reshape(n, p * q, p * q)


def _rotation_batch(angles: np.ndarray) -> np.ndarray:
    """Full-register rotation unitaries for a batch of angle rows."""
    u = _rx_batch(angles[:, 0])
    for q in range(1, angles.shape[1]):
        u = _batched_kron(u, _rx_batch(angles[:, q]))
    return u


def apply_rotation_noise(state: DensityMatrix, sample: NoiseSample) -> DensityMatrix:
    """Apply ``RX(theta_i)`` to qubit ``i`` for every angle in the sample."""
    if state.num_qubits != len(sample.angles):
        raise ValueError(
            f"state has {state.num_qubits} qubit(s), sample carries "
            f"{len(sample.angles)} angle(s)"
        )
    r = _rotation_batch(sample.angles[None, :])[0]
    return DensityMatrix(state.num_qubits, r @ state.matrix @ r.conj().T)


def noisy_predict_mc(
    model: ClassifierModel,
    sigma: DensityMatrix,
    cfg: NoiseConfig,
    n_noise: int,
    n_shots: int | None = None,
    seed: int = 0,
    *,
    force_angles=None,
) -> np.ndarray:
    """Monte-Carlo smoothed class probabilities.

    Averages the model prediction over ``n_noise`` independent angle draws;
    with ``n_shots`` set, each draw contributes a finite-shot estimate
    instead of the exact probabilities. ``force_angles`` pins every draw to
    a fixed angle tuple (testing hook). Deterministic per seed.
    """
    if n_noise < 1:
        raise ValueError("n_noise must be at least 1")
    if n_shots is not None and n_shots < 1:
        raise ValueError("n_shots must be at least 1 when given")
    if sigma.num_qubits != cfg.n or sigma.num_qubits != model.num_data_qubits:
        raise ValueError(
            f"qubit mismatch: state {sigma.num_qubits}, noise {cfg.n}, "
            f"model {model.num_data_qubits}"
        )
    rng = np.random.default_rng(seed)
    if force_angles is not None:
        forced = np.asarray(force_angles, dtype=float).reshape(-1)
        if len(forced) != cfg.n:
            raise ValueError(f"force_angles needs {cfg.n} angle(s)")
        angles = np.tile(forced, (n_noise, 1))
    else:
        angles = _draw_angles(cfg, rng, n_noise)

    effects = data_space_effects(model)
    k = len(effects)
    per_draw: list[np.ndarray] = []
    for start in range(0, n_noise, _CHUNK):
        chunk = angles[start : start + _CHUNK]
        r = _rotation_batch(chunk)
        rotated = r @ sigma.matrix @ r.conj().transpose(0, 2, 1)
        y = np.stack(
            [np.einsum("ij,nji->n", e, rotated).real for e in effects], axis=1
        )
        y = np.clip(y, 0.0, 1.0)
        if n_shots is None:
            per_draw.append(y)
        else:
            pvals = y / y.sum(axis=1, keepdims=True)
            counts = rng.multinomial(n_shots, pvals)
            per_draw.append(counts / float(n_shots))
    stacked = np.vstack(per_draw)
    est = np.array([math.fsum(stacked[:, j]) / n_noise for j in range(k)])
    return np.clip(est, 0.0, 1.0)


def _flip_operator(mask: int, n: int) -> np.ndarray:
    u = np.eye(2**n, dtype=complex)
    for q in range(n):
        if mask >> q & 1:
            u = op_unitary(GateOp("X", target=q), (), n) @ u
    return u


def eq1_superposition(y_fn, sigma: DensityMatrix, sample: NoiseSample, k: int) -> float:
    """Tan-weighted expansion of the smoothed class-``k`` probability.

    Sums, over every non-empty qubit subset ``S``, the product of the
    subset's angle tangents times the probability of the input with all
    qubits in ``S`` bit-flipped, all scaled by the cosine-product weight:

        g * y_k(sigma) + g * sum_S prod_{i in S} tan(theta_i) * y_k(sigma_S)
    """
    n = len(sample.angles)
    if sigma.num_qubits != n:
        raise ValueError(f"state has {sigma.num_qubits} qubit(s), sample has {n} angle(s)")
    tans = np.tan(sample.angles)
    g = sample.weight_g
    total = g * float(y_fn(sigma)[k])
    for mask in range(1, 2**n):
        coeff = 1.0
        for q in range(n):
            if mask >> q & 1:
                coeff *= float(tans[q])
        f = _flip_operator(mask, n)
        flipped = DensityMatrix(n, f @ sigma.matrix @ f.conj().T)
        total += g * coeff * float(y_fn(flipped)[k])
    return float(total)


def eq1_superposition_prodprob(
    y_fn, sigma: DensityMatrix, sample: NoiseSample, k: int
) -> float:
    """Alternative reading of the expansion, for comparison only.

    Higher-order subset terms multiply the single-flip probabilities instead
    of evaluating the jointly flipped state. Coincides with
    :func:`eq1_superposition` on single-qubit systems.
    """
    n = len(sample.angles)
    if sigma.num_qubits != n:
        raise ValueError(f"state has {sigma.num_qubits} qubit(s), sample has {n} angle(s)")
    tans = np.tan(sample.angles)
    g = sample.weight_g
    singles = []
    for q in range(n):
        f = _flip_operator(1 << q, n)
        flipped = DensityMatrix(n, f @ sigma.matrix @ f.conj().T)
        singles.append(float(y_fn(flipped)[k]))
    total = g * float(y_fn(sigma)[k])
    for mask in range(1, 2**n):
        term = 1.0
        for q in range(n):
            if mask >> q & 1:
                term *= float(tans[q]) * singles[q]
        total += g * term
    return float(total)
