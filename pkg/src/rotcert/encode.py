"""Classical-to-quantum data encoding plus dataset synthesis and CSV loading.

Two encodings are supported:

* ``amplitude``: the feature vector, normalized, becomes the amplitude
  vector of a ``ceil(log2 d)``-qubit state (zero padded).
* ``angle``: one qubit per feature, prepared as
  ``cos(pi x / 2)|0> + sin(pi x / 2)|1>`` for features in [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .qla import StateVector

__all__ = [
    "Dataset",
    "EncodingScheme",
    "amplitude_encode",
    "angle_encode",
    "encode_state",
    "minmax_normalize",
    "synth_dataset",
    "split_dataset",
    "load_csv",
    "save_csv",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix (n, d), binary labels (n,), and a display name."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        feats = np.array(self.features, dtype=float)
        labels = np.array(self.labels, dtype=int).reshape(-1)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-d array")
        if len(feats) != len(labels):
            raise ValueError(f"{len(feats)} feature rows vs {len(labels)} labels")
        if not np.isfinite(feats).all():
            raise ValueError("features must be finite")
        norms = np.linalg.norm(feats, axis=1)
        if len(feats) and norms.min() == 0.0:
            raise ValueError("zero-norm feature vector at row "
                             f"{int(np.argmin(norms))}")
        bad = set(np.unique(labels)) - {0, 1}
        if bad:
            raise ValueError(f"labels outside {{0, 1}}: {sorted(bad)}")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class EncodingScheme:
    kind: str
    num_qubits: int

    def __post_init__(self):
        if self.kind not in ("amplitude", "angle"):
            raise ValueError(f"unknown encoding kind {self.kind!r}")
        if self.num_qubits < 1:
            raise ValueError("encoding needs at least one qubit")

    @classmethod
    def for_dim(cls, kind: str, dim: int) -> "EncodingScheme":
        """Smallest scheme of the given kind that fits ``dim`` features."""
        if kind == "angle":
            return cls("angle", dim)
        return cls("amplitude", max(1, int(np.ceil(np.log2(dim)))))


def amplitude_encode(x, num_qubits: int) -> StateVector:
    """Normalize ``x`` into the amplitudes of a ``num_qubits``-qubit state."""
    v = np.asarray(x, dtype=float).reshape(-1)
    dim = 2**num_qubits
    if len(v) > dim:
        raise ValueError(f"{len(v)} features do not fit in {num_qubits} qubit(s)")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot amplitude-encode the zero vector")
    amps = np.zeros(dim, dtype=complex)
    amps[: len(v)] = v / norm
    return StateVector(num_qubits, amps)


def angle_encode(x) -> StateVector:
    """Product state with one per-feature Y rotation, features in [0, 1]."""
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueError(f"angle encoding needs features in [0, 1], got {v!r}")
    amps = np.array([1.0], dtype=complex)
    for xi in v:
        half = 0.5 * np.pi * xi
        amps = np.kron(amps, np.array([np.cos(half), np.sin(half)], dtype=complex))
    return StateVector(len(v), amps)


def encode_state(scheme: EncodingScheme, x) -> StateVector:
    if scheme.kind == "angle":
        v = np.asarray(x, dtype=float).reshape(-1)
        if len(v) != scheme.num_qubits:
            raise ValueError(
                f"angle encoding on {scheme.num_qubits} qubit(s) needs "
                f"{scheme.num_qubits} features, got {len(v)}"
            )
        return angle_encode(v)
    return amplitude_encode(x, scheme.num_qubits)


def minmax_normalize(features: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns map to 0."""
    feats = np.array(features, dtype=float)
    lo = feats.min(axis=0)
    span = feats.max(axis=0) - lo
    out = np.zeros_like(feats)
    nz = span > 0
    out[:, nz] = (feats[:, nz] - lo[nz]) / span[nz]
    return out


def synth_dataset(n_samples: int, seed: int, margin: float) -> Dataset:
    """Two linearly separable 3-d Gaussian blobs inside the unit cube.

    Points are rejection-sampled so that their projection on the blob axis
    clears ``margin / 2`` on the correct side of the midplane, which makes
    the classes linearly separable by construction. Labels alternate
    0, 1, 0, 1, ... so any prefix split stays balanced.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    if not 0.0 < margin < 0.5:
        raise ValueError("margin must lie in (0, 0.5)")
    rng = np.random.default_rng(seed)
    axis = np.ones(3) / np.sqrt(3.0)
    center = np.full(3, 0.5)
    sigma = margin / 4.0
    means = {0: center - margin * axis, 1: center + margin * axis}
    features = np.empty((n_samples, 3))
    labels = np.empty(n_samples, dtype=int)
    for i in range(n_samples):
        label = i % 2
        side = -1.0 if label == 0 else 1.0
        while True:
            x = means[label] + sigma * rng.standard_normal(3)
            proj = float((x - center) @ axis)
            if side * proj >= margin / 2.0 and x.min() >= 0.0 and x.max() <= 1.0:
                break
        features[i] = x
        labels[i] = label
    return Dataset(features, labels, name=f"synthetic-{seed}")


def split_dataset(ds: Dataset, train_fraction: float = 0.7) -> tuple[Dataset, Dataset]:
    """Deterministic stratified split, preserving sample order within classes."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    train_idx, test_idx = [], []
    for label in (0, 1):
        idx = np.flatnonzero(ds.labels == label)
        cut = int(round(train_fraction * len(idx)))
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    train_idx, test_idx = sorted(train_idx), sorted(test_idx)
    mk = lambda idx, tag: Dataset(ds.features[idx], ds.labels[idx], name=f"{ds.name}-{tag}")
    return mk(train_idx, "train"), mk(test_idx, "test")


def _parse_row(row: list[str], line_no: int, width: int) -> tuple[list[float], int]:
    if len(row) != width:
        raise ValueError(f"row {line_no}: expected {width} fields, got {len(row)}")
    try:
        values = [float(f) for f in row]
    except ValueError:
        raise ValueError(f"row {line_no}: non-numeric field in {row!r}") from None
    label = values[-1]
    if label not in (0.0, 1.0):
        raise ValueError(f"row {line_no}: label {row[-1]!r} is not 0 or 1")
    return values[:-1], int(label)


def load_csv(path) -> Dataset:
    """Load ``d`` feature columns plus one 0/1 label column (header optional)."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"dataset file not found: {p}")
    with p.open(newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row]
    if not rows:
        raise ValueError(f"{p}: empty dataset file")

    def _numeric(row):
        try:
            [float(f) for f in row]
            return True
        except ValueError:
            return False

    if not _numeric(rows[0][1]):
        rows = rows[1:]  # header row
        if not rows:
            raise ValueError(f"{p}: no data rows after header")
    width = len(rows[0][1])
    features, labels = [], []
    for line_no, row in rows:
        feats, label = _parse_row(row, line_no, width)
        features.append(feats)
        labels.append(label)
    return Dataset(np.array(features), np.array(labels), name=p.stem)


def save_csv(ds: Dataset, path) -> None:
    p = Path(path)
    with p.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for x, y in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
