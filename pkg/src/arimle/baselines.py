"""Comparison aggregators: majority vote, spectral meta-learner, iterative
MLE, and the oracle upper bound that uses the true classifier rates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import (
    AggregationResult,
    ClassifierProfile,
    PredictionMatrix,
    sign_with_tiebreak,
)
from .exceptions import (
    DimensionMismatchError,
    TooFewClassifiersError,
    TooFewSamplesError,
)
from .mle import EmConfig, em_refine, estimate_profiles, mle_decision, mle_weights

__all__ = [
    "OracleProfiles",
    "majority_vote",
    "sml",
    "imle",
    "oracle_sml",
    "DEGENERATE_COV_TOL",
    "RATE_CLAMP_EPS",
]

# Off-diagonal covariance below this is treated as no pairwise signal at all.
DEGENERATE_COV_TOL = 1e-12

# True rates supplied to the oracle are clamped into [eps, 1-eps] so the
# log-odds weights stay finite.
RATE_CLAMP_EPS = 1e-6


@dataclass(frozen=True)
class OracleProfiles:
    """Known-true classifier rates, clamped away from 0 and 1."""

    profiles: tuple[ClassifierProfile, ...]

    @classmethod
    def from_rates(cls, pairs: Sequence[tuple[float, float]]) -> "OracleProfiles":
        """Build from (psi, eta) pairs, clamping each into (0, 1)."""
        eps = RATE_CLAMP_EPS
        profs = tuple(
            ClassifierProfile.from_rates(
                min(max(float(psi), eps), 1.0 - eps),
                min(max(float(eta), eps), 1.0 - eps),
            )
            for psi, eta in pairs
        )
        return cls(profiles=profs)

    @property
    def m(self) -> int:
        return len(self.profiles)


def majority_vote(P: PredictionMatrix) -> AggregationResult:
    """Unweighted vote: label_j = sign(sum_i votes_ji), ties to +1."""
    scores = P.votes.sum(axis=1, dtype=np.float64)
    return AggregationResult(
        labels=sign_with_tiebreak(scores),
        scores=scores,
        profiles=None,
        iterations=0,
        converged=True,
    )


def _power_iteration(B: np.ndarray, max_steps: int = 200, tol: float = 1e-10):
    """Dominant eigenpair of a symmetric matrix from the fixed all-ones start.

    Iterates are sign-aligned to the previous vector so oscillation under a
    negative dominant eigenvalue still converges; the eigenvalue is the
    Rayleigh quotient of the final vector. Fully deterministic.
    """
    m = B.shape[0]
    x = np.full(m, 1.0 / np.sqrt(m))
    for _ in range(max_steps):
        y = B @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:  # start vector is in the nullspace
            break
        x_new = y / norm
        if float(x_new @ x) < 0.0:
            x_new = -x_new
        done = float(np.max(np.abs(x_new - x))) < tol
        x = x_new
        if done:
            break
    lam = float(x @ B @ x)
    return lam, x


def sml(P: PredictionMatrix) -> AggregationResult:
    """Spectral meta-learner: weights from the leading eigenvector of the
    off-diagonal vote covariance.

    The covariance diagonal confounds a classifier's variance with its
    accuracy, so it is replaced by a rank-1 completion: seed each diagonal
    entry with its row's largest absolute off-diagonal entry, extract the
    dominant eigenpair by power iteration, reset the diagonal to
    lambda * v_i^2, and repeat for 20 rounds. The eigenvector (sign-fixed
    so its entries sum >= 0) weights the votes directly.

    When every off-diagonal covariance entry is numerically zero there is
    no pairwise signal to exploit; the result falls back to majority vote
    and carries a ``degenerate_covariance_fallback`` note.
    """
    if P.m < 3:
        raise TooFewClassifiersError(f"sml needs at least 3 classifiers, got {P.m}")
    if P.n < 2:
        raise TooFewSamplesError(f"sml needs at least 2 samples, got {P.n}")
    Q = np.cov(P.votes.astype(np.float64), rowvar=False)
    off = Q - np.diag(np.diag(Q))
    if float(np.max(np.abs(off))) < DEGENERATE_COV_TOL:
        fallback = majority_vote(P)
        return replace(
            fallback,
            profiles=estimate_profiles(P, fallback.labels),
            notes=fallback.notes + ("degenerate_covariance_fallback",),
        )
    B = Q.copy()
    row_max = np.max(np.abs(off), axis=1)
    np.fill_diagonal(B, row_max)
    lam, v = _power_iteration(B)
    for _ in range(19):
        np.fill_diagonal(B, lam * v**2)
        lam, v = _power_iteration(B)
    if float(np.sum(v)) < 0.0:
        v = -v
    scores = P.votes.astype(np.float64) @ v
    labels = sign_with_tiebreak(scores)
    return AggregationResult(
        labels=labels,
        scores=scores,
        # eigenvector scale is arbitrary, so rates are read back off the
        # labels rather than the weights
        profiles=estimate_profiles(P, labels),
        iterations=0,
        converged=True,
        notes=("profiles_estimated_from_own_labels",),
    )


def imle(P: PredictionMatrix, em: EmConfig | None = None) -> AggregationResult:
    """Spectral meta-learner start followed by EM refinement."""
    start = sml(P)
    result = em_refine(P, start.labels, em)
    if start.notes:
        extra = tuple(n for n in start.notes if n != "profiles_estimated_from_own_labels")
        if extra:
            result = replace(result, notes=result.notes + extra)
    return result


def oracle_sml(P: PredictionMatrix, truth: OracleProfiles) -> AggregationResult:
    """Upper-bound fusion: log-odds decision from the true rates, no estimation."""
    if truth.m != P.m:
        raise DimensionMismatchError(
            f"{truth.m} oracle profiles for {P.m} classifiers"
        )
    result = mle_decision(P, mle_weights(truth.profiles))
    return replace(result, profiles=truth.profiles)
