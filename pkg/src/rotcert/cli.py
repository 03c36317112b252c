"""Experiment harness and command-line surface.

One JSON config document drives everything; scalar fields can be overridden
on the command line with dot paths (``--set noise.t=0.5``) and the master
seed with the ``ROTCERT_SEED`` environment variable. Every run writes a
manifest with the config hash and seeds, so results reproduce bit-exactly.

Subcommands: ``train``, ``sweep``, ``certify``, ``attack``, ``audit``.
Exit codes: 0 success/certified, 1 usage or IO error, 2 not certified
(or audit finding), 3 uncertifiable because t = 0.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .certify import (
    VERDICT_CERTIFIED,
    VERDICT_NOT_CERTIFIED,
    VERDICT_T_ZERO,
    attack_search,
    certify_input,
    audit_dp,
    report_to_dict,
)
from .encode import Dataset, EncodingScheme, encode_state, load_csv, minmax_normalize, split_dataset, synth_dataset
from .qla import DensityMatrix
from .rotnoise import NoiseConfig, noisy_predict_mc
from .vqc import ClassifierModel, TrainConfig, accuracy, load_model, new_model, save_model, train

__all__ = [
    "ExperimentConfig",
    "load_config",
    "default_config",
    "build_dataset",
    "noisy_accuracy",
    "emit_svg",
    "cmd_train",
    "cmd_sweep_accuracy",
    "cmd_certify",
    "cmd_attack",
    "cmd_audit",
    "main",
    "entry",
]

SEED_ENV_VAR = "ROTCERT_SEED"

# Seed-derivation namespaces, one per subcommand.
_NS_SWEEP = 1
_NS_CERTIFY = 2
_NS_ATTACK = 3
_NS_AUDIT = 4


class UsageError(ValueError):
    """Bad arguments or config; maps to exit code 1."""


@dataclass(frozen=True)
class SweepSpec:
    h_values: tuple
    shot_sizes: tuple
    repeats: int

    def __post_init__(self):
        if not self.h_values:
            raise UsageError("sweep.h_values must not be empty")
        if not self.shot_sizes:
            raise UsageError("sweep.shot_sizes must not be empty")
        if self.repeats < 1:
            raise UsageError("sweep.repeats must be at least 1")


@dataclass(frozen=True)
class CertifyParams:
    beta: float = 0.95
    zeta: float = 0.05
    n_noise: int = 4096
    n_shots: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: dict
    encoding_kind: str
    ansatz_depth: int
    train: TrainConfig
    noise: NoiseConfig
    certify: CertifyParams
    sweep: SweepSpec | None
    output_dir: str
    master_seed: int
    workers: int = 1
    train_fraction: float = 0.7


def default_config() -> dict:
    """Reference experiment: 3-d synthetic blobs, angle encoding, depth 2."""
    return {
        "dataset": {"synthetic": {"seed": 7, "n": 200, "margin": 0.4}},
        "encoding": {"kind": "angle"},
        "ansatz_depth": 2,
        "train": {"learning_rate": 0.5, "epochs": 120, "batch_size": 0, "seed": 11},
        "noise": {
            "n": 3,
            "h1": 0.4,
            "h2": 1.2,
            "t": 0.5,
            "angle_mode": "tan_bounded",
            "uniform_h": 0.0,
        },
        "certify": {"beta": 0.95, "zeta": 0.05, "n_noise": 4096, "n_shots": None},
        "sweep": {
            "h_values": [2 * np.pi / 2**4, 2 * np.pi / 2**8, 2 * np.pi / 2**16],
            "shot_sizes": [100, 1000, 10000, 100000],
            "repeats": 5,
        },
        "output_dir": "out",
        "master_seed": 20240531,
        "workers": 1,
        "train_fraction": 0.7,
    }


def apply_override(doc: dict, assignment: str) -> None:
    """Apply one ``dot.path=value`` override in place; values parse as JSON."""
    if "=" not in assignment:
        raise UsageError(f"override {assignment!r} is not of the form path=value")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    if not all(keys):
        raise UsageError(f"bad override path {path!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = doc
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value


def _parse_config(doc: dict) -> ExperimentConfig:
    try:
        dataset = doc["dataset"]
        if not isinstance(dataset, dict) or not ({"synthetic", "csv"} & dataset.keys()):
            raise UsageError("dataset must contain a 'synthetic' or 'csv' block")
        enc = doc.get("encoding", {"kind": "angle"})
        train_cfg = TrainConfig(**doc["train"])
        noise_cfg = NoiseConfig(**doc["noise"])
        cert = CertifyParams(**doc.get("certify", {}))
        sweep = None
        if doc.get("sweep"):
            s = doc["sweep"]
            sweep = SweepSpec(tuple(s["h_values"]), tuple(s["shot_sizes"]), int(s["repeats"]))
        return ExperimentConfig(
            dataset=dataset,
            encoding_kind=enc["kind"],
            ansatz_depth=int(doc.get("ansatz_depth", 2)),
            train=train_cfg,
            noise=noise_cfg,
            certify=cert,
            sweep=sweep,
            output_dir=str(doc["output_dir"]),
            master_seed=int(doc["master_seed"]),
            workers=int(doc.get("workers", 1)),
            train_fraction=float(doc.get("train_fraction", 0.7)),
        )
    except KeyError as exc:
        raise UsageError(f"config is missing required key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config: {exc}") from None


def load_config(path, overrides=(), env=None) -> tuple[ExperimentConfig, dict]:
    """Read, override, and validate a config; returns (config, raw doc)."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    doc = json.loads(p.read_text())
    for assignment in overrides:
        apply_override(doc, assignment)
    env = os.environ if env is None else env
    if SEED_ENV_VAR in env:
        try:
            doc["master_seed"] = int(env[SEED_ENV_VAR])
        except ValueError:
            raise UsageError(f"{SEED_ENV_VAR} must be an integer") from None
    return _parse_config(doc), doc


def config_sha256(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def git_blob_sha1(path) -> str:
    """Content hash of a file, computed the way git hashes blobs."""
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def derive_seed(master: int, *keys: int) -> int:
    ss = np.random.SeedSequence([int(master) & (2**63 - 1), *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0] & (2**63 - 1))


def build_dataset(cfg: ExperimentConfig) -> Dataset:
    """Materialize the configured dataset, normalizing out-of-range columns."""
    d = cfg.dataset
    if "synthetic" in d:
        s = d["synthetic"]
        ds = synth_dataset(int(s["n"]), int(s["seed"]), float(s["margin"]))
    else:
        ds = load_csv(d["csv"]["path"])
    feats = ds.features
    if cfg.encoding_kind == "angle" and (feats.min() < 0.0 or feats.max() > 1.0):
        feats = np.array(feats)
        for col in range(feats.shape[1]):
            column = feats[:, col]
            if column.min() < 0.0 or column.max() > 1.0:
                feats[:, col] = minmax_normalize(column[:, None])[:, 0]
        ds = Dataset(feats, ds.labels, name=ds.name)
    return ds


def _encoding_for(cfg: ExperimentConfig, ds: Dataset) -> EncodingScheme:
    scheme = EncodingScheme.for_dim(cfg.encoding_kind, ds.dim)
    if cfg.noise.n != scheme.num_qubits:
        raise UsageError(
            f"noise.n = {cfg.noise.n} but the encoding uses {scheme.num_qubits} qubit(s)"
        )
    return scheme


def _model_path(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output_dir) / "model.json"


def _require_model(cfg: ExperimentConfig) -> ClassifierModel:
    path = _model_path(cfg)
    if not path.is_file():
        raise UsageError(f"no trained model at {path}; run the train subcommand first")
    return load_model(path)


def write_manifest(cfg: ExperimentConfig, doc: dict, subcommand: str, wall_time: float) -> Path:
    out = Path(cfg.output_dir)
    manifest = {
        "tool": "rotcert",
        "version": __version__,
        "subcommand": subcommand,
        "config": doc,
        "config_sha256": config_sha256(doc),
        "master_seed": cfg.master_seed,
        "wall_time_s": wall_time,
    }
    path = out / f"manifest_{subcommand}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _test_inputs(model: ClassifierModel, data: Dataset) -> list[DensityMatrix]:
    return [encode_state(model.encoding, x).density_matrix() for x in data.features]


def noisy_accuracy(
    model: ClassifierModel,
    data: Dataset,
    noise_cfg: NoiseConfig,
    n_executions: int,
    seed: int,
) -> float:
    """Accuracy when every prediction is a majority over ``n_executions``
    single-shot runs, each with freshly drawn rotation noise."""
    if len(data) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=len(data))
    hits = 0
    for i, (x, label) in enumerate(zip(data.features, data.labels)):
        sigma = encode_state(model.encoding, x).density_matrix()
        y = noisy_predict_mc(model, sigma, noise_cfg, n_executions, 1, int(seeds[i]))
        hits += int(np.argmax(y) == label)
    return hits / len(data)


# ---------------------------------------------------------------------------
# SVG chart emission
# ---------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
_VIEW_W, _VIEW_H = 800, 500
_MARGIN = {"left": 70.0, "right": 170.0, "top": 40.0, "bottom": 60.0}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def emit_svg(series, x_label: str, y_label: str, title: str = "", log_x: bool = False) -> str:
    """Self-contained deterministic SVG line chart.

    ``series`` is a list of ``(name, xs, ys)`` or ``(name, xs, ys, ylo, yhi)``
    tuples; the optional bounds draw vertical error bars. Single-point series
    render as a lone marker.
    """
    if not series:
        raise ValueError("no series to plot")
    parsed = []
    for item in series:
        name, xs, ys = item[0], list(item[1]), list(item[2])
        ylo = list(item[3]) if len(item) > 3 else None
        yhi = list(item[4]) if len(item) > 4 else None
        if not xs or len(xs) != len(ys):
            raise ValueError(f"series {name!r} must have matching non-empty x/y lists")
        parsed.append((name, xs, ys, ylo, yhi))

    def tx(x: float) -> float:
        return np.log10(x) if log_x else x

    all_x = [tx(x) for _, xs, _, _, _ in parsed for x in xs]
    all_y = [v for _, _, ys, ylo, yhi in parsed for v in ys + (ylo or []) + (yhi or [])]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    plot_w = _VIEW_W - _MARGIN["left"] - _MARGIN["right"]
    plot_h = _VIEW_H - _MARGIN["top"] - _MARGIN["bottom"]

    def px(x: float) -> float:
        return _MARGIN["left"] + (tx(x) - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN["top"] + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_VIEW_W} {_VIEW_H}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{_VIEW_W}" height="{_VIEW_H}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{_VIEW_W / 2:.0f}" y="24" text-anchor="middle" '
            f'font-size="16">{title}</text>'
        )
    ax_b = _VIEW_H - _MARGIN["bottom"]
    out.append(
        f'<line x1="{_fmt(_MARGIN["left"])}" y1="{_fmt(ax_b)}" '
        f'x2="{_fmt(_VIEW_W - _MARGIN["right"])}" y2="{_fmt(ax_b)}" stroke="black"/>'
    )
    out.append(
        f'<line x1="{_fmt(_MARGIN["left"])}" y1="{_fmt(_MARGIN["top"])}" '
        f'x2="{_fmt(_MARGIN["left"])}" y2="{_fmt(ax_b)}" stroke="black"/>'
    )
    for t in _ticks(x_lo, x_hi):
        xpix = _MARGIN["left"] + (t - x_lo) / (x_hi - x_lo) * plot_w
        label = f"{10 ** t:.4g}" if log_x else f"{t:.4g}"
        out.append(f'<line x1="{_fmt(xpix)}" y1="{_fmt(ax_b)}" x2="{_fmt(xpix)}" y2="{_fmt(ax_b + 5)}" stroke="black"/>')
        out.append(f'<text x="{_fmt(xpix)}" y="{_fmt(ax_b + 20)}" text-anchor="middle">{label}</text>')
    for t in _ticks(y_lo, y_hi):
        ypix = py(t)
        out.append(f'<line x1="{_fmt(_MARGIN["left"] - 5)}" y1="{_fmt(ypix)}" x2="{_fmt(_MARGIN["left"])}" y2="{_fmt(ypix)}" stroke="black"/>')
        out.append(f'<text x="{_fmt(_MARGIN["left"] - 8)}" y="{_fmt(ypix + 4)}" text-anchor="end">{t:.4g}</text>')
    out.append(
        f'<text x="{_fmt(_MARGIN["left"] + plot_w / 2)}" y="{_VIEW_H - 15}" '
        f'text-anchor="middle">{x_label}</text>'
    )
    out.append(
        f'<text x="18" y="{_fmt(_MARGIN["top"] + plot_h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_fmt(_MARGIN["top"] + plot_h / 2)})">{y_label}</text>'
    )

    for idx, (name, xs, ys, ylo, yhi) in enumerate(parsed):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = [(px(x), py(y)) for x, y in zip(xs, ys)]
        if ylo and yhi:
            for (xp, _), lo, hi in zip(pts, ylo, yhi):
                out.append(
                    f'<line x1="{_fmt(xp)}" y1="{_fmt(py(lo))}" x2="{_fmt(xp)}" '
                    f'y2="{_fmt(py(hi))}" stroke="{color}" stroke-width="1"/>'
                )
        if len(pts) > 1:
            path = " ".join(f"{_fmt(xp)},{_fmt(yp)}" for xp, yp in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        for xp, yp in pts:
            out.append(f'<circle cx="{_fmt(xp)}" cy="{_fmt(yp)}" r="3" fill="{color}"/>')
        ly = _MARGIN["top"] + 18 * idx
        lx = _VIEW_W - _MARGIN["right"] + 14
        out.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly)}" x2="{_fmt(lx + 22)}" y2="{_fmt(ly)}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_fmt(lx + 28)}" y="{_fmt(ly + 4)}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_train(cfg: ExperimentConfig, doc: dict) -> int:
    started = time.monotonic()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = build_dataset(cfg)
    train_ds, test_ds = split_dataset(ds, cfg.train_fraction)
    scheme = _encoding_for(cfg, ds)
    model0 = new_model(scheme.num_qubits, cfg.ansatz_depth, scheme, seed=cfg.train.seed)
    log: list[dict] = []
    model = train(model0, train_ds, cfg.train, epoch_log=log)
    if len(log) < cfg.train.epochs:
        print("error: training diverged (non-finite loss)", file=sys.stderr)
        return 1
    save_model(model, _model_path(cfg))
    with (out / "metrics.csv").open("w") as fh:
        fh.write("epoch,loss,accuracy,lr\n")
        for row in log:
            fh.write(f"{row['epoch']},{row['loss']!r},{row['accuracy']!r},{row['lr']!r}\n")
    write_manifest(cfg, doc, "train", time.monotonic() - started)
    train_acc = log[-1]["accuracy"]
    test_acc = accuracy(model, test_ds) if len(test_ds) else float("nan")
    print(f"trained {len(train_ds)} samples, train acc {train_acc:.4f}, test acc {test_acc:.4f}")
    print(f"model written to {_model_path(cfg)}")
    return 0


def _sweep_cell(model, test_ds, cfg, h_idx, h, s_idx, shots, rep):
    noise = NoiseConfig(n=cfg.noise.n, angle_mode="uniform_angle", uniform_h=float(h), t=cfg.noise.t)
    seed_clean = derive_seed(cfg.master_seed, _NS_SWEEP, h_idx, s_idx, rep, 0)
    seed_noisy = derive_seed(cfg.master_seed, _NS_SWEEP, h_idx, s_idx, rep, 1)
    acc_clean = accuracy(model, test_ds, n_shots=int(shots), seed=seed_clean)
    acc_noisy = noisy_accuracy(model, test_ds, noise, int(shots), seed_noisy)
    return (h_idx, s_idx, rep, float(h), int(shots), acc_clean, acc_noisy)


def cmd_sweep_accuracy(cfg: ExperimentConfig, doc: dict) -> int:
    started = time.monotonic()
    if cfg.sweep is None:
        raise UsageError("config has no sweep block")
    model = _require_model(cfg)
    ds = build_dataset(cfg)
    _, test_ds = split_dataset(ds, cfg.train_fraction)
    cells = [
        (h_idx, h, s_idx, shots, rep)
        for h_idx, h in enumerate(cfg.sweep.h_values)
        for s_idx, shots in enumerate(cfg.sweep.shot_sizes)
        for rep in range(cfg.sweep.repeats)
    ]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(
                pool.map(lambda c: _sweep_cell(model, test_ds, cfg, *c), cells)
            )
    else:
        rows = [_sweep_cell(model, test_ds, cfg, *c) for c in cells]
    rows.sort(key=lambda r: (r[0], r[1], r[2]))

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w") as fh:
        fh.write("h,shots,repeat,acc_noiseless,acc_noisy\n")
        for _, _, rep, h, shots, clean, noisy in rows:
            fh.write(f"{h!r},{shots},{rep},{clean!r},{noisy!r}\n")

    series = []
    shot_sizes = [int(s) for s in cfg.sweep.shot_sizes]
    for h_idx, h in enumerate(cfg.sweep.h_values):
        ys, ylo, yhi = [], [], []
        for s_idx in range(len(shot_sizes)):
            vals = [r[6] for r in rows if r[0] == h_idx and r[1] == s_idx]
            ys.append(float(np.mean(vals)))
            ylo.append(min(vals))
            yhi.append(max(vals))
        series.append((f"noisy h={float(h):.6g}", shot_sizes, ys, ylo, yhi))
    clean_ys = []
    for s_idx in range(len(shot_sizes)):
        vals = [r[5] for r in rows if r[1] == s_idx]
        clean_ys.append(float(np.mean(vals)))
    series.append(("noiseless", shot_sizes, clean_ys))
    (out / "sweep.svg").write_text(
        emit_svg(series, "sample size", "test accuracy", "accuracy vs sample size", log_x=True)
    )
    write_manifest(cfg, doc, "sweep", time.monotonic() - started)
    print(f"sweep wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def _certify_one(cfg, model, sigma, tag: int):
    return certify_input(
        model,
        sigma,
        cfg.noise,
        n_noise=cfg.certify.n_noise,
        n_shots=cfg.certify.n_shots,
        seed=derive_seed(cfg.master_seed, _NS_CERTIFY, tag),
        beta=cfg.certify.beta,
        zeta=cfg.certify.zeta,
    )


def cmd_certify(cfg: ExperimentConfig, doc: dict, indices=(0,), inputs_csv=None) -> int:
    started = time.monotonic()
    model = _require_model(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if inputs_csv is not None:
        data = load_csv(inputs_csv)
        chosen = list(range(len(data)))
    else:
        ds = build_dataset(cfg)
        _, data = split_dataset(ds, cfg.train_fraction)
        chosen = [int(i) for i in indices]
        for i in chosen:
            if not 0 <= i < len(data):
                raise UsageError(f"input index {i} out of range (test set has {len(data)})")
    provenance_base = {
        "config_sha256": config_sha256(doc),
        "model_sha1": git_blob_sha1(_model_path(cfg)),
        "master_seed": cfg.master_seed,
    }
    verdicts = []
    for i in chosen:
        sigma = encode_state(model.encoding, data.features[i]).density_matrix()
        report = _certify_one(cfg, model, sigma, i)
        verdicts.append(report.verdict)
        provenance = dict(provenance_base, input_index=i,
                          seed=derive_seed(cfg.master_seed, _NS_CERTIFY, i))
        path = out / f"report_{i}.json"
        path.write_text(json.dumps(report_to_dict(report, provenance), indent=2, sort_keys=True) + "\n")
        print(f"input {i}: verdict={report.verdict} tau_d={report.tau_d:.6g} "
              f"epsilon={report.epsilon:.6g} B={report.b_ratio:.6g}")
    write_manifest(cfg, doc, "certify", time.monotonic() - started)
    if VERDICT_T_ZERO in verdicts:
        return 3
    if VERDICT_NOT_CERTIFIED in verdicts:
        return 2
    return 0


def cmd_attack(cfg: ExperimentConfig, doc: dict, tau_d: float, budget: int = 1000) -> int:
    started = time.monotonic()
    if not 0.0 <= tau_d <= 1.0:
        raise UsageError(f"tau_d must lie in [0, 1], got {tau_d}")
    model = _require_model(cfg)
    ds = build_dataset(cfg)
    _, test_ds = split_dataset(ds, cfg.train_fraction)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(len(test_ds)):
        sigma = encode_state(model.encoding, test_ds.features[i]).density_matrix()
        report = _certify_one(cfg, model, sigma, i)
        seed = derive_seed(cfg.master_seed, _NS_ATTACK, i)
        flipped, worst = attack_search(model, sigma, cfg.noise, tau_d, budget, seed)
        if worst is None:
            worst_margin = float("nan")
        else:
            y = noisy_predict_mc(model, worst, cfg.noise, cfg.certify.n_noise, None,
                                 derive_seed(cfg.master_seed, _NS_ATTACK, i, 1))
            label = report.predicted_label
            worst_margin = float(y[label] - float(np.delete(y, label).max()))
        rows.append((i, int(test_ds.labels[i]), tau_d, report.tau_d, flipped, worst_margin))
    with (out / "attack.csv").open("w") as fh:
        fh.write("index,label,tau_attack,certified_radius,flipped,worst_margin\n")
        for i, label, tau, radius, flipped, margin in rows:
            fh.write(f"{i},{label},{tau!r},{radius!r},{int(flipped)},{margin!r}\n")
    inside = [r for r in rows if r[2] <= r[3]]
    outside = [r for r in rows if r[2] > r[3]]
    rate = lambda rs: float(np.mean([r[4] for r in rs])) if rs else 0.0
    summary = {
        "tau_attack": tau_d,
        "budget": budget,
        "n_inputs": len(rows),
        "flip_rate_inside_radius": rate(inside),
        "flip_rate_outside_radius": rate(outside),
        "n_inside": len(inside),
        "n_outside": len(outside),
    }
    (out / "attack_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    write_manifest(cfg, doc, "attack", time.monotonic() - started)
    print(
        f"attack at tau={tau_d}: flip rate inside radius {summary['flip_rate_inside_radius']:.3f} "
        f"({len(inside)} inputs), outside {summary['flip_rate_outside_radius']:.3f} "
        f"({len(outside)} inputs)"
    )
    return 0


def cmd_audit(cfg: ExperimentConfig, doc: dict, tau_d: float = 0.1, n_pairs: int = 500) -> int:
    started = time.monotonic()
    model = _require_model(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = audit_dp(
        model, cfg.noise, tau_d, n_pairs,
        derive_seed(cfg.master_seed, _NS_AUDIT),
        n_noise=cfg.certify.n_noise,
    )
    payload = {
        "tau_d": report.tau_d,
        "analytic_epsilon": report.analytic_epsilon,
        "n_pairs": report.n_pairs,
        "n_valid_pairs": report.n_valid_pairs,
        "worst_ratio_valid": report.worst_ratio_valid,
        "worst_ratio_all": report.worst_ratio_all,
        "violation_indices": list(report.violation_indices),
        "t": report.t,
        "n": report.n,
        "ok": report.ok,
    }
    (out / "audit.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    write_manifest(cfg, doc, "audit", time.monotonic() - started)
    print(
        f"audit: worst ratio {report.worst_ratio_valid:.6g} vs analytic epsilon "
        f"{report.analytic_epsilon:.6g} over {report.n_valid_pairs}/{report.n_pairs} valid pairs"
    )
    if not report.ok:
        print(f"FINDING: {len(report.violation_indices)} pair(s) exceed the analytic budget",
              file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotcert",
        description="Train, smooth, and certify a small variational quantum classifier.",
    )
    parser.add_argument("--version", action="version", version=f"rotcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", required=True, help="experiment config JSON")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[],
            metavar="PATH=VALUE", help="override a config field, e.g. noise.t=0.5",
        )

    common(sub.add_parser("train", help="train the classifier and write model.json"))
    common(sub.add_parser("sweep", help="accuracy sweep over noise magnitudes and sample sizes"))
    p_cert = sub.add_parser("certify", help="certify test inputs and write report JSONs")
    common(p_cert)
    p_cert.add_argument("--index", type=int, action="append", default=None,
                        help="test-set input index (repeatable; default 0)")
    p_cert.add_argument("--inputs-csv", default=None,
                        help="certify every row of this dataset CSV instead")
    p_atk = sub.add_parser("attack", help="search for label flips at a given radius")
    common(p_atk)
    p_atk.add_argument("--tau", type=float, required=True, help="attack trace-distance radius")
    p_atk.add_argument("--budget", type=int, default=1000, help="candidates per input")
    p_aud = sub.add_parser("audit", help="empirical differential-privacy audit")
    common(p_aud)
    p_aud.add_argument("--tau", type=float, default=0.1, help="pair trace distance")
    p_aud.add_argument("--pairs", type=int, default=500, help="number of state pairs")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg, doc = load_config(args.config, args.overrides)
        if args.command == "train":
            return cmd_train(cfg, doc)
        if args.command == "sweep":
            return cmd_sweep_accuracy(cfg, doc)
        if args.command == "certify":
            indices = args.index if args.index is not None else [0]
            return cmd_certify(cfg, doc, indices, args.inputs_csv)
        if args.command == "attack":
            return cmd_attack(cfg, doc, args.tau, args.budget)
        if args.command == "audit":
            return cmd_audit(cfg, doc, args.tau, args.pairs)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
