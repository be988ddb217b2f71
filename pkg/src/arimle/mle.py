"""Maximum-likelihood label fusion with EM refinement.

The fused label of a sample is the sign of a linear score over the votes:
score = sum_i votes_i * ln(alpha_i) + ln(beta_i), where alpha and beta are
log-odds weights built from each classifier's sensitivity and specificity.
Starting from balanced-accuracy-weighted voting, the EM loop alternates
re-estimating (psi, eta) from the current labels with re-deciding labels
from the resulting weights until the labels stop changing.

The full pipeline (:func:`arimle`) estimates the initial accuracies from
pairwise agreement rates alone, so it runs on completely unlabeled data.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .agreement import (
    SolverConfig,
    bca_from_error_rates,
    compute_agreement_rates,
    solve_error_rates,
)
from .core import (
    AggregationResult,
    ClassifierProfile,
    PredictionMatrix,
    _readonly,
    sign_with_tiebreak,
    validate_labels,
)
from .exceptions import (
    BoundaryRateError,
    DimensionMismatchError,
    OutOfRangeError,
)

__all__ = [
    "MleWeights",
    "EmConfig",
    "mle_weights",
    "mle_decision",
    "initialize_labels",
    "estimate_profiles",
    "em_refine",
    "arimle",
]

# Balanced accuracies are clamped into this interval before weighted-vote
# initialization so solver noise can never produce zero or negative weights.
PI_CLAMP = (0.5 + 1e-6, 1.0 - 1e-6)


@dataclass(frozen=True)
class MleWeights:
    """Log-odds vote weights: per-classifier ln(alpha) and ln(beta)."""

    log_alpha: np.ndarray
    log_beta: np.ndarray

    def __post_init__(self) -> None:
        la = _readonly(np.ascontiguousarray(self.log_alpha, dtype=np.float64))
        lb = _readonly(np.ascontiguousarray(self.log_beta, dtype=np.float64))
        object.__setattr__(self, "log_alpha", la)
        object.__setattr__(self, "log_beta", lb)
        if la.shape != lb.shape or la.ndim != 1:
            raise DimensionMismatchError("log_alpha and log_beta must be equal-length vectors")
        if not (np.all(np.isfinite(la)) and np.all(np.isfinite(lb))):
            raise OutOfRangeError("weights must be finite; smooth the rates first")

    @property
    def m(self) -> int:
        return self.log_alpha.shape[0]


@dataclass(frozen=True)
class EmConfig:
    """EM loop controls.

    ``smoothing`` is the pseudo-count added to every confusion cell when
    re-estimating rates, which keeps the log-odds weights finite even when
    a classifier matches the working labels perfectly. With ``early_stop``
    the loop ends as soon as one pass leaves every label unchanged.
    """

    max_iters: int = 100
    smoothing: float = 1.0
    early_stop: bool = True

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise OutOfRangeError("max_iters must be >= 1")
        if not self.smoothing > 0:
            raise OutOfRangeError("smoothing must be positive")


def mle_weights(profiles: Sequence[ClassifierProfile]) -> MleWeights:
    """Log-odds weights from sensitivities and specificities.

    log_alpha_i = ln(psi_i * eta_i) - ln((1 - psi_i) * (1 - eta_i))
    log_beta_i  = ln(psi_i * (1 - psi_i)) - ln(eta_i * (1 - eta_i))

    A coin-flip classifier (psi = eta = 0.5) gets zero weight. Rates of
    exactly 0 or 1 raise BoundaryRateError; callers must smooth first.
    """
    psi = np.array([p.psi for p in profiles], dtype=np.float64)
    eta = np.array([p.eta for p in profiles], dtype=np.float64)
    if np.any(psi <= 0) or np.any(psi >= 1) or np.any(eta <= 0) or np.any(eta >= 1):
        raise BoundaryRateError(
            "sensitivities and specificities must lie strictly inside (0, 1)"
        )
    log_alpha = np.log(psi * eta) - np.log((1.0 - psi) * (1.0 - eta))
    log_beta = np.log(psi * (1.0 - psi)) - np.log(eta * (1.0 - eta))
    return MleWeights(log_alpha=log_alpha, log_beta=log_beta)


def mle_decision(P: PredictionMatrix, W: MleWeights) -> AggregationResult:
    """One-shot weighted decision: label = sign(votes . log_alpha + sum(log_beta))."""
    if W.m != P.m:
        raise DimensionMismatchError(f"{W.m} weights for {P.m} classifiers")
    scores = P.votes.astype(np.float64) @ W.log_alpha + float(np.sum(W.log_beta))
    labels = sign_with_tiebreak(scores)
    return AggregationResult(
        labels=labels, scores=scores, profiles=None, iterations=0, converged=True
    )


def initialize_labels(P: PredictionMatrix, pi) -> np.ndarray:
    """Balanced-accuracy-weighted vote: label_j = sign(sum_i (2 pi_i - 1) votes_ji).

    The conventional normalization by sum(2 pi_i - 1) is a positive scalar
    in the intended better-than-chance regime and cannot change any sign,
    so it is dropped.
    """
    pi = np.asarray(pi, dtype=np.float64)
    if pi.shape != (P.m,):
        raise DimensionMismatchError(f"{pi.shape} balanced accuracies for {P.m} classifiers")
    if np.any(pi < 0) or np.any(pi > 1):
        raise OutOfRangeError("balanced accuracies must lie in [0, 1]")
    scores = P.votes.astype(np.float64) @ (2.0 * pi - 1.0)
    return sign_with_tiebreak(scores)


def estimate_profiles(
    P: PredictionMatrix, labels, smoothing: float = 1.0
) -> tuple[ClassifierProfile, ...]:
    """Per-classifier rates against a working label vector, with smoothing.

    Treating ``labels`` as truth, with n+ positive labels:
    psi_i = (#{label=+1 and vote=+1} + smoothing) / (n+ + 2 * smoothing),
    and symmetrically for eta_i on the negative labels. An empty class
    yields the pure prior 0.5 for its rate. pi = (psi + eta) / 2 and
    e = 1 - pi are filled in.
    """
    if not smoothing > 0:
        raise OutOfRangeError("smoothing must be positive")
    y = validate_labels(labels, P.n)
    pos = y == 1
    npos = int(np.count_nonzero(pos))
    nneg = P.n - npos
    tp = np.count_nonzero(P.votes[pos] == 1, axis=0)
    tn = np.count_nonzero(P.votes[~pos] == -1, axis=0)
    psi = (tp + smoothing) / (npos + 2.0 * smoothing)
    eta = (tn + smoothing) / (nneg + 2.0 * smoothing)
    return tuple(ClassifierProfile.from_rates(p, q) for p, q in zip(psi, eta))


def em_refine(
    P: PredictionMatrix, init, config: EmConfig | None = None
) -> AggregationResult:
    """Alternate profile re-estimation and weighted re-decision to a fixed point.

    Each pass estimates profiles from the current labels, rebuilds the
    log-odds weights, and re-decides every label. ``iterations`` counts the
    passes performed (always >= 1); ``converged`` reports whether the last
    pass changed no label. Feeding a converged result's labels back in
    returns after a single pass with the labels untouched.
    """
    if config is None:
        config = EmConfig()
    labels = validate_labels(init, P.n)
    iterations = 0
    changed = True
    profiles: tuple[ClassifierProfile, ...] = ()
    decision: AggregationResult | None = None
    for _ in range(config.max_iters):
        profiles = estimate_profiles(P, labels, config.smoothing)
        weights = mle_weights(profiles)
        decision = mle_decision(P, weights)
        iterations += 1
        changed = not np.array_equal(decision.labels, labels)
        labels = decision.labels
        if not changed and config.early_stop:
            break
    assert decision is not None
    return AggregationResult(
        labels=labels,
        scores=decision.scores,
        profiles=profiles,
        iterations=iterations,
        converged=not changed,
    )


def arimle(
    P: PredictionMatrix,
    solver: SolverConfig | None = None,
    em: EmConfig | None = None,
) -> AggregationResult:
    """Full unlabeled-fusion pipeline.

    Pairwise agreement rates -> least-squares error-rate recovery ->
    balanced accuracies (clamped into the better-than-chance interval) ->
    weighted-vote initialization -> EM refinement. Deterministic; requires
    at least 3 classifiers.
    """
    A = compute_agreement_rates(P)
    est = solve_error_rates(A, solver)
    pi = np.clip(bca_from_error_rates(est.e), PI_CLAMP[0], PI_CLAMP[1])
    init = initialize_labels(P, pi)
    result = em_refine(P, init, em)
    if est.flipped:
        result = replace(result, notes=result.notes + ("error_rates_flipped",))
    return result
