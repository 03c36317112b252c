"""Certified-robustness mathematics for the smoothed binary classifier.

The pipeline: smoothing turns the classifier into a differentially private
mechanism on quantum states (privacy budget ``epsilon = ln(1 + tau / t^n)``
for inputs whose smoothed class probabilities stay above ``t^n``), and the
privacy bound in turn certifies that the predicted label cannot change
within a trace-distance ball around the input. The certified radius for a
binary prediction with smoothed probability ratio ``B`` is
``(sqrt(B) - 1) t^n``.

``t`` is a user-supplied floor parameter, interpreted as "every smoothed
class probability is at least ``t^n``". The tool verifies that premise
empirically on each input and withholds certification (with a warning)
when it fails; with ``t = 0`` the budget diverges and nothing is
certifiable, which gets its own verdict.

Alongside the formulas, the module ships two empirical harnesses:
``audit_dp`` probes the privacy ratio on random state pairs, and
``attack_search`` hunts for label flips inside a given trace-distance ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qla import DensityMatrix, random_density_matrix, random_statevector, trace_distance
from .rotnoise import NoiseConfig, effective_tan_bounds, noisy_predict_mc
from .vqc import ClassifierModel, predict_exact

__all__ = [
    "CertificationReport",
    "DpAuditReport",
    "lemma1_margin_ok",
    "prop1_sample_complexity",
    "lemma2_epsilon",
    "theorem3_radius",
    "theorem1_certified",
    "theorem2_certified",
    "certify_input",
    "audit_dp",
    "attack_search",
    "report_to_dict",
]

VERDICT_CERTIFIED = "certified"
VERDICT_NOT_CERTIFIED = "not_certified"
VERDICT_T_ZERO = "uncertifiable_t_zero"


def lemma1_margin_ok(y_c: float, h: float, n: int) -> bool:
    """True when the noiseless top-class probability clears ``(1+h)^n / 2``,
    the threshold under which rotation noise with tangent bound ``h`` keeps
    the predicted label."""
    if not 0.0 <= y_c <= 1.0:
        raise ValueError(f"y_c must lie in [0, 1], got {y_c}")
    if h < 0.0 or n < 1:
        raise ValueError("need h >= 0 and n >= 1")
    return y_c > (1.0 + h) ** n / 2.0


def prop1_sample_complexity(xi: float, h: float, n: int, beta: float) -> int:
    """Shots needed to keep the noisy label with probability ``beta``:
    ``ceil( ln(2 / (1 - beta)) / (8 (xi - (1+h)^n + 1)^2) )``."""
    if not 0.0 < xi <= 1.0:
        raise ValueError(f"margin xi must lie in (0, 1], got {xi}")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if h < 0.0 or n < 1:
        raise ValueError("need h >= 0 and n >= 1")
    term = xi - (1.0 + h) ** n + 1.0
    if term <= 0.0:
        raise ValueError(
            f"noise too large relative to the margin (xi - (1+h)^n + 1 = {term}); "
            "no finite sample complexity"
        )
    return max(1, math.ceil(math.log(2.0 / (1.0 - beta)) / (8.0 * term**2)))


def lemma2_epsilon(tau_d: float, t: float, n: int) -> float:
    """Differential-privacy budget ``ln(1 + tau_d / t^n)``."""
    if not 0.0 <= tau_d <= 1.0:
        raise ValueError(f"tau_d must lie in [0, 1], got {tau_d}")
    if t <= 0.0:
        raise ValueError("t must be positive; t = 0 admits no finite budget")
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.log1p(tau_d / t**n)


def theorem3_radius(b: float, t: float, n: int) -> float:
    """Certified trace-distance radius ``(sqrt(B) - 1) t^n``, clamped to [0, 1]."""
    if b <= 0.0:
        raise ValueError(f"probability ratio must be positive, got {b}")
    if t <= 0.0:
        raise ValueError("t must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    return float(min(max((math.sqrt(b) - 1.0) * t**n, 0.0), 1.0))


def _top_two(y: np.ndarray) -> tuple[int, float, float]:
    c = int(np.argmax(y))
    rest = np.delete(np.asarray(y, dtype=float), c)
    return c, float(y[c]), float(rest.max())


def theorem1_certified(y_noisy, epsilon: float) -> bool:
    """Infinite-sampling check: top probability strictly exceeds
    ``e^(2 epsilon)`` times the runner-up."""
    y = np.asarray(y_noisy, dtype=float)
    if epsilon < 0.0:
        raise ValueError("epsilon must be non-negative")
    _, top, second = _top_two(y)
    return top > math.exp(2.0 * epsilon) * second


def theorem2_certified(
    y_est, epsilon: float, zeta: float, n_samples: int
) -> tuple[bool, float]:
    """Finite-sampling check with estimation half-width ``zeta``.

    Verdict: ``y_C - zeta > e^(2 epsilon) (runner-up + zeta)``. The attached
    confidence is ``1 - 2 exp(-2 N zeta^2)``, clamped to [0, 1].
    """
    if zeta <= 0.0:
        raise ValueError("zeta must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    y = np.asarray(y_est, dtype=float)
    _, top, second = _top_two(y)
    ok = (top - zeta) > math.exp(2.0 * epsilon) * (second + zeta)
    confidence = min(max(1.0 - 2.0 * math.exp(-2.0 * n_samples * zeta**2), 0.0), 1.0)
    return ok, confidence


@dataclass(frozen=True)
class CertificationReport:
    """Everything the certification pipeline derives for one input."""

    xi: float
    b_ratio: float
    epsilon: float
    tau_d: float
    n_required: int | None
    beta: float
    zeta: float
    confidence: float
    verdict: str
    predicted_label: int
    y_exact: tuple
    y_noisy: tuple
    t: float
    n: int
    t_bound_satisfied: bool
    warnings: tuple

    def __post_init__(self):
        if self.tau_d < 0.0 or self.epsilon < 0.0 or self.b_ratio <= 0.0:
            raise ValueError("invalid report: tau_d, epsilon must be >= 0 and B > 0")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")
        if self.verdict not in (VERDICT_CERTIFIED, VERDICT_NOT_CERTIFIED, VERDICT_T_ZERO):
            raise ValueError(f"unknown verdict {self.verdict!r}")


def report_to_dict(report: CertificationReport, provenance: dict | None = None) -> dict:
    d = {
        "xi": report.xi,
        "b_ratio": report.b_ratio,
        "epsilon": report.epsilon,
        "tau_d": report.tau_d,
        "n_required": report.n_required,
        "beta": report.beta,
        "zeta": report.zeta,
        "confidence": report.confidence,
        "verdict": report.verdict,
        "predicted_label": report.predicted_label,
        "y_exact": list(report.y_exact),
        "y_noisy": list(report.y_noisy),
        "t": report.t,
        "n": report.n,
        "t_bound_satisfied": report.t_bound_satisfied,
        "warnings": list(report.warnings),
    }
    if provenance is not None:
        d["provenance"] = provenance
    return d


def certify_input(
    model: ClassifierModel,
    sigma: DensityMatrix,
    cfg: NoiseConfig,
    *,
    n_noise: int,
    n_shots: int | None = None,
    seed: int = 0,
    beta: float = 0.95,
    zeta: float = 0.05,
) -> CertificationReport:
    """Full certification of one input under the configured rotation noise.

    Smooths the prediction by Monte Carlo, derives the probability ratio,
    the certified radius, and the matching privacy budget, then cross-checks
    that the returned radius strictly satisfies the label-stability
    inequality. ``t = 0`` yields the ``uncertifiable_t_zero`` verdict.
    """
    warnings: list[str] = []
    y_exact = predict_exact(model, sigma)
    c_exact, y_c, y_other_exact = _top_two(y_exact)
    xi = y_c - y_other_exact

    y_noisy = noisy_predict_mc(model, sigma, cfg, n_noise, n_shots, seed)
    c_noisy, top, second = _top_two(y_noisy)
    if c_noisy != c_exact:
        warnings.append("noisy prediction disagrees with the noiseless label")

    b = top / max(second, 1e-300)
    if second <= 0.0:
        warnings.append("runner-up probability is zero; ratio capped")

    h1_eff, _ = effective_tan_bounds(cfg)
    n_required: int | None
    try:
        n_required = prop1_sample_complexity(xi, h1_eff, cfg.n, beta)
    except ValueError as exc:
        n_required = None
        warnings.append(f"sample complexity undefined: {exc}")

    if n_shots is None:
        confidence = 1.0
    else:
        confidence = theorem2_certified(y_noisy, 0.0, zeta, n_noise)[1]

    if cfg.t == 0.0:
        warnings.append("t = 0: the privacy budget diverges for any positive radius")
        return CertificationReport(
            xi=xi, b_ratio=b, epsilon=0.0, tau_d=0.0, n_required=n_required,
            beta=beta, zeta=zeta, confidence=confidence, verdict=VERDICT_T_ZERO,
            predicted_label=c_noisy, y_exact=tuple(float(v) for v in y_exact),
            y_noisy=tuple(float(v) for v in y_noisy), t=cfg.t, n=cfg.n,
            t_bound_satisfied=False, warnings=tuple(warnings),
        )

    t_floor = cfg.t**cfg.n
    t_ok = bool(np.min(y_noisy) >= t_floor - 1e-12)
    if not t_ok:
        warnings.append(
            f"smoothed probability {float(np.min(y_noisy)):.6g} falls below the "
            f"assumed floor t^n = {t_floor:.6g}; certification withheld"
        )

    tau_d = theorem3_radius(b, cfg.t, cfg.n)
    epsilon = lemma2_epsilon(tau_d, cfg.t, cfg.n)
    thm1_ok = theorem1_certified(y_noisy, epsilon)
    # The unclamped radius satisfies the stability inequality only in the
    # limit; back off a hair so the reported radius passes it strictly.
    shrink = 0
    while tau_d > 0.0 and not thm1_ok and shrink < 64:
        tau_d *= 1.0 - 1e-9
        epsilon = lemma2_epsilon(tau_d, cfg.t, cfg.n)
        thm1_ok = theorem1_certified(y_noisy, epsilon)
        shrink += 1
    if tau_d > 0.0 and not thm1_ok:
        tau_d, epsilon = 0.0, 0.0
        thm1_ok = False

    if n_shots is None:
        thm2_ok = True
    else:
        thm2_ok, confidence = theorem2_certified(y_noisy, epsilon, zeta, n_noise)
        if not thm2_ok:
            warnings.append("finite-sampling margin too small at the requested zeta")

    certified = tau_d > 0.0 and thm1_ok and thm2_ok and t_ok
    return CertificationReport(
        xi=xi, b_ratio=b, epsilon=epsilon, tau_d=tau_d,
        n_required=n_required, beta=beta, zeta=zeta, confidence=confidence,
        verdict=VERDICT_CERTIFIED if certified else VERDICT_NOT_CERTIFIED,
        predicted_label=c_noisy, y_exact=tuple(float(v) for v in y_exact),
        y_noisy=tuple(float(v) for v in y_noisy), t=cfg.t, n=cfg.n,
        t_bound_satisfied=t_ok, warnings=tuple(warnings),
    )


def _mixture_at_distance(
    sigma: DensityMatrix, chi: DensityMatrix, tau: float
) -> DensityMatrix | None:
    """Mixture of ``sigma`` toward ``chi`` at trace distance exactly ``tau``.

    Trace distance is linear in the mixing weight, so the weight solves in
    closed form; returns None when ``chi`` is too close to reach ``tau``.
    """
    full = trace_distance(chi, sigma)
    if full < tau:
        return None
    lam = 1.0 if full == 0.0 else tau / full
    m = (1.0 - lam) * sigma.matrix + lam * chi.matrix
    rho = DensityMatrix(sigma.num_qubits, m)
    if abs(trace_distance(rho, sigma) - tau) > 1e-6:
        return None
    return rho


def _unitary_at_distance(
    sigma: DensityMatrix, rng: np.random.Generator, tau: float
) -> DensityMatrix | None:
    """Conjugate ``sigma`` by ``exp(-i delta H)`` with ``delta`` bisected so
    the trace distance hits ``tau`` within 1e-6; None if unreachable."""
    dim = sigma.dim
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (g + g.conj().T) / 2.0
    evals, evecs = np.linalg.eigh(h)
    scale = np.abs(evals).max()
    if scale == 0.0:
        return None
    evals = evals / scale

    def conjugated(delta: float) -> np.ndarray:
        u = (evecs * np.exp(-1j * delta * evals)) @ evecs.conj().T
        return u @ sigma.matrix @ u.conj().T

    def dist(delta: float) -> float:
        return trace_distance(DensityMatrix(sigma.num_qubits, conjugated(delta)), sigma)

    hi = np.pi
    if dist(hi) < tau:
        return None
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if dist(mid) < tau:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    rho = DensityMatrix(sigma.num_qubits, conjugated(hi))
    if abs(trace_distance(rho, sigma) - tau) > 1e-6:
        return None
    return rho


@dataclass(frozen=True)
class DpAuditReport:
    """Worst observed privacy ratio over sampled state pairs."""

    tau_d: float
    analytic_epsilon: float
    n_pairs: int
    n_valid_pairs: int
    worst_ratio_valid: float
    worst_ratio_all: float
    violation_indices: tuple
    t: float
    n: int

    @property
    def ok(self) -> bool:
        return not self.violation_indices


def audit_dp(
    model: ClassifierModel,
    cfg: NoiseConfig,
    tau_d: float,
    n_pairs: int,
    seed: int,
    *,
    n_noise: int = 2048,
) -> DpAuditReport:
    """Probe the privacy bound on random state pairs at distance ``tau_d``.

    Pairs alternate between convex-mixture and small-unitary perturbations of
    random mixed states, each placed at trace distance ``tau_d`` exactly.
    Both pair members are smoothed with common random numbers. Pairs whose
    smoothed probabilities dip below ``t^n`` fall outside the bound's premise
    and are excluded from the violation check (but still reported).
    """
    if not 0.0 < tau_d <= 1.0:
        raise ValueError(f"tau_d must lie in (0, 1], got {tau_d}")
    if cfg.t <= 0.0:
        raise ValueError("auditing needs t > 0")
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    analytic = lemma2_epsilon(tau_d, cfg.t, cfg.n)
    t_floor = cfg.t**cfg.n
    master = np.random.default_rng(seed)
    pair_seeds = master.integers(0, 2**63 - 1, size=n_pairs)
    worst_valid = 0.0
    worst_all = 0.0
    n_valid = 0
    violations: list[int] = []
    for i in range(n_pairs):
        rng = np.random.default_rng(int(pair_seeds[i]))
        sigma = random_density_matrix(cfg.n, rng)
        rho = None
        if i % 2 == 1:
            rho = _unitary_at_distance(sigma, rng, tau_d)
        while rho is None:
            chi = random_density_matrix(cfg.n, rng)
            rho = _mixture_at_distance(sigma, chi, tau_d)
        crn_seed = int(pair_seeds[i]) // 2
        y_sigma = noisy_predict_mc(model, sigma, cfg, n_noise, None, crn_seed)
        y_rho = noisy_predict_mc(model, rho, cfg, n_noise, None, crn_seed)
        lo = min(float(y_sigma.min()), float(y_rho.min()))
        if lo <= 0.0:
            ratio = math.inf
        else:
            ratio = float(np.max(np.abs(np.log(y_rho / y_sigma))))
        worst_all = max(worst_all, ratio)
        if lo >= t_floor - 1e-12:
            n_valid += 1
            worst_valid = max(worst_valid, ratio)
            if ratio > analytic + 1e-12:
                violations.append(i)
    return DpAuditReport(
        tau_d=tau_d, analytic_epsilon=analytic, n_pairs=n_pairs,
        n_valid_pairs=n_valid, worst_ratio_valid=worst_valid,
        worst_ratio_all=worst_all, violation_indices=tuple(violations),
        t=cfg.t, n=cfg.n,
    )


def attack_search(
    model: ClassifierModel,
    sigma: DensityMatrix,
    cfg: NoiseConfig,
    tau_d: float,
    budget: int,
    seed: int,
    *,
    n_noise: int = 512,
) -> tuple[bool, DensityMatrix | None]:
    """Hunt for a label flip within trace distance ``tau_d`` of ``sigma``.

    Random-direction exploration (mixtures toward random states, small
    unitary kicks) followed by greedy refinement of the lowest-margin
    candidate. Candidate margins share one evaluation seed so they are
    directly comparable; an apparent flip only counts after a larger,
    independently seeded re-evaluation confirms it, which keeps Monte-Carlo
    noise from minting spurious flips. Returns (flip found, worst candidate).
    """
    if not 0.0 <= tau_d <= 1.0:
        raise ValueError(f"tau_d must lie in [0, 1], got {tau_d}")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if tau_d == 0.0:
        return False, None
    rng = np.random.default_rng(seed)
    eval_seed = int(rng.integers(0, 2**63 - 1))
    confirm_seed = int(rng.integers(0, 2**63 - 1))
    confirm_noise = max(16 * n_noise, 8192)

    base = noisy_predict_mc(model, sigma, cfg, confirm_noise, None, confirm_seed)
    label = int(np.argmax(base))

    def margin_of(rho: DensityMatrix, draws: int, s: int) -> tuple[float, int]:
        y = noisy_predict_mc(model, rho, cfg, draws, None, s)
        pred = int(np.argmax(y))
        return float(y[label] - float(np.delete(y, label).max())), pred

    best_rho: DensityMatrix | None = None
    best_margin = math.inf
    explore = max(1, int(0.7 * budget))
    evals = 0
    while evals < budget:
        if evals < explore or best_rho is None:
            if evals % 5 == 4:
                cand = _unitary_at_distance(sigma, rng, tau_d)
            elif evals % 2 == 0:
                cand = _mixture_at_distance(sigma, random_density_matrix(cfg.n, rng), tau_d)
            else:
                chi = random_statevector(cfg.n, rng).density_matrix()
                cand = _mixture_at_distance(sigma, chi, tau_d)
        else:
            s = float(rng.uniform(0.05, 0.5))
            chi = random_density_matrix(cfg.n, rng)
            blend = DensityMatrix(
                cfg.n, (1.0 - s) * best_rho.matrix + s * chi.matrix
            )
            cand = _mixture_at_distance(sigma, blend, tau_d)
        evals += 1
        if cand is None:
            continue
        m, pred = margin_of(cand, n_noise, eval_seed)
        if m < best_margin:
            best_margin, best_rho = m, cand
        if pred != label:
            m_conf, pred_conf = margin_of(cand, confirm_noise, confirm_seed)
            if pred_conf != label:
                return True, cand
            if m_conf < best_margin:
                best_margin, best_rho = m_conf, cand
    return False, best_rho
