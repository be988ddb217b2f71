"""Pairwise agreement rates and error-rate recovery.

Two conditionally independent classifiers with marginal error rates e1, e2
agree with probability 1 - e1 - e2 + 2*e1*e2. Inverting that relation over
all m(m-1)/2 empirical pairwise agreement rates recovers the m per-classifier
error rates by box-constrained least squares. The relation is invariant under
jointly replacing every e_i with 1 - e_i, so the solver resolves the ambiguity
toward the better-than-chance branch (mean error <= 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PredictionMatrix, _readonly
from .exceptions import (
    OutOfRangeError,
    SolverDivergedError,
    TooFewClassifiersError,
)

__all__ = [
    "AgreementMatrix",
    "SolverConfig",
    "ErrorRateEstimate",
    "compute_agreement_rates",
    "predicted_agreement",
    "solve_error_rates",
    "bca_from_error_rates",
]


@dataclass(frozen=True)
class AgreementMatrix:
    """Symmetric m x m matrix of empirical pairwise agreement rates.

    Entry (i, k) is the fraction of samples on which classifiers i and k
    emitted the same vote; the diagonal is exactly 1.
    """

    a: np.ndarray

    def __post_init__(self) -> None:
        a = np.ascontiguousarray(self.a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise OutOfRangeError(f"agreement matrix must be square, got {a.shape}")
        if not np.array_equal(a, a.T):
            raise OutOfRangeError("agreement matrix must be exactly symmetric")
        if not np.all(np.diag(a) == 1.0):
            raise OutOfRangeError("agreement matrix diagonal must be 1")
        if np.any(a < 0.0) or np.any(a > 1.0):
            raise OutOfRangeError("agreement rates must lie in [0, 1]")
        object.__setattr__(self, "a", _readonly(a))

    @property
    def m(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the projected-gradient least-squares solver."""

    max_iters: int = 2000
    tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise OutOfRangeError("max_iters must be >= 1")
        if not self.tol > 0:
            raise OutOfRangeError("tol must be positive")


@dataclass(frozen=True)
class ErrorRateEstimate:
    """Recovered per-classifier error rates.

    ``residual`` is the root-mean-square misfit of the pairwise agreement
    model over all unordered pairs. ``flipped`` records whether the
    global-flip tie-break replaced the raw solution by its complement to
    enforce mean(e) <= 0.5.
    """

    e: np.ndarray
    residual: float
    flipped: bool

    def __post_init__(self) -> None:
        e = _readonly(np.ascontiguousarray(self.e, dtype=np.float64))
        object.__setattr__(self, "e", e)
        if np.any(e < 0.0) or np.any(e > 1.0):
            raise OutOfRangeError("error rates must lie in [0, 1]")
        if not self.residual >= 0.0:
            raise OutOfRangeError("residual must be >= 0")
        if np.mean(e) > 0.5 + 1e-9:
            raise OutOfRangeError("mean error rate above 0.5 after tie-break")


def compute_agreement_rates(P: PredictionMatrix) -> AgreementMatrix:
    """Empirical pairwise agreement rates of all classifier columns.

    Entry (i, k) counts the samples where columns i and k match, divided
    by n. Computed via the Gram matrix of the +/-1 votes: with
    g = votes_i . votes_k, matches = (n + g) / 2.
    """
    v = P.votes.astype(np.int64)
    gram = v.T @ v
    a = (P.n + gram) / (2.0 * P.n)
    return AgreementMatrix(a=a)


def predicted_agreement(e1, e2):
    """Agreement rate implied by two independent error rates.

    Returns 1 - e1 - e2 + 2*e1*e2, which stays in [0, 1] for arguments in
    [0, 1] and is symmetric under (e1, e2) -> (1-e1, 1-e2). Accepts scalars
    or broadcastable arrays.
    """
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    if np.any(e1 < 0) or np.any(e1 > 1) or np.any(e2 < 0) or np.any(e2 > 1):
        raise OutOfRangeError("error rates must lie in [0, 1]")
    out = 1.0 - e1 - e2 + 2.0 * e1 * e2
    if out.ndim == 0:
        return float(out)
    return out


def _misfit_and_gradient(e: np.ndarray, a: np.ndarray, offdiag: np.ndarray):
    """Least-squares objective over unordered pairs and its gradient.

    Objective F(e) = sum_{i<k} (pred(e_i, e_k) - a_ik)^2, evaluated as half
    the ordered off-diagonal sum. dF/de_i = 2 * sum_{k != i} r_ik (2 e_k - 1).
    """
    pred = 1.0 - e[:, None] - e[None, :] + 2.0 * np.outer(e, e)
    r = np.where(offdiag, pred - a, 0.0)
    f = 0.5 * float(np.sum(r * r))
    g = 2.0 * (r * (2.0 * e[None, :] - 1.0)).sum(axis=1)
    return f, g


def solve_error_rates(
    A: AgreementMatrix, config: SolverConfig | None = None
) -> ErrorRateEstimate:
    """Recover per-classifier error rates from pairwise agreement rates.

    Minimizes the squared misfit of the independent-pair agreement model
    over the box [0, 1]^m by projected-gradient descent: start at
    e_i = 0.25 for all i, take steps along -gradient with an Armijo
    backtracking line search, project onto the box, and stop when the
    projected-gradient infinity norm falls below ``config.tol`` or
    ``config.max_iters`` passes elapse. The descent is deterministic:
    identical inputs give bit-identical outputs.

    The agreement model cannot distinguish {e_i} from {1 - e_i}; when the
    raw minimizer has mean above 0.5 it is replaced by its complement and
    ``flipped`` is set.

    Raises
    ------
    TooFewClassifiersError
        Fewer than 3 classifiers (the pair system would be underdetermined).
    SolverDivergedError
        The objective became non-finite.
    """
    if config is None:
        config = SolverConfig()
    m = A.m
    if m < 3:
        raise TooFewClassifiersError(
            f"error-rate recovery needs at least 3 classifiers, got {m}"
        )
    a = A.a
    offdiag = ~np.eye(m, dtype=bool)
    e = np.full(m, 0.25, dtype=np.float64)
    f, g = _misfit_and_gradient(e, a, offdiag)

    for _ in range(config.max_iters):
        if not np.isfinite(f):
            raise SolverDivergedError(f"objective became non-finite ({f})")
        # projected-gradient optimality measure; equals |g| at interior points
        pg = e - np.clip(e - g, 0.0, 1.0)
        if np.max(np.abs(pg)) < config.tol:
            break
        step = 1.0
        while True:
            e_new = np.clip(e - step * g, 0.0, 1.0)
            f_new, g_new = _misfit_and_gradient(e_new, a, offdiag)
            if f_new <= f + 1e-4 * float(g @ (e_new - e)):
                break
            step *= 0.5
            if step < 1e-20:  # stuck against the box; accept current point
                e_new, f_new, g_new = e, f, g
                break
        if e_new is e:
            break
        e, f, g = e_new, f_new, g_new

    if not np.isfinite(f):
        raise SolverDivergedError(f"objective became non-finite ({f})")

    flipped = False
    if float(np.mean(e)) > 0.5:
        e = 1.0 - e
        flipped = True
    n_pairs = m * (m - 1) // 2
    residual = float(np.sqrt(f / n_pairs))
    return ErrorRateEstimate(e=e, residual=residual, flipped=flipped)


def bca_from_error_rates(e) -> np.ndarray:
    """Balanced accuracies implied by error rates: pi_i = 1 - e_i.

    Exact when each classifier is equally accurate on both classes;
    otherwise an approximation that the EM refinement corrects.
    """
    e = np.asarray(e, dtype=np.float64)
    if np.any(e < 0) or np.any(e > 1):
        raise OutOfRangeError("error rates must lie in [0, 1]")
    return 1.0 - e
