"""Core domain types: vote matrices, labels, classifier profiles.

Votes and labels are signed integers in {-1, +1}, never booleans, so that
every weighted decision rule is a plain dot product over the vote matrix.
All containers are immutable after construction (frozen dataclasses holding
read-only arrays) and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .exceptions import (
    CsvFormatError,
    DimensionMismatchError,
    DuplicateClassifierIdError,
    EmptyMatrixError,
    LengthMismatchError,
    NonBinaryEntryError,
    NonFiniteInputError,
    OutOfRangeError,
)

__all__ = [
    "PredictionMatrix",
    "ClassifierProfile",
    "AggregationResult",
    "validate_matrix",
    "validate_labels",
    "sign_with_tiebreak",
    "read_votes_csv",
    "write_votes_csv",
    "read_labels_csv",
    "write_labels_csv",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PredictionMatrix:
    """n x m grid of base-classifier votes, one column per classifier.

    Construct through :func:`validate_matrix` (or the CSV reader), which
    enforces that every entry is exactly -1 or +1 and that classifier ids
    are unique. ``votes[j, i]`` is classifier ``i``'s vote on sample ``j``.
    """

    votes: np.ndarray
    classifier_ids: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.votes.shape[0]

    @property
    def m(self) -> int:
        return self.votes.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.votes[:, i]


@dataclass(frozen=True)
class ClassifierProfile:
    """Per-classifier accuracy summary.

    psi is the sensitivity P(vote=+1 | truth=+1), eta the specificity
    P(vote=-1 | truth=-1), pi the balanced accuracy (psi + eta) / 2, and
    e an error rate in [0, 1]. pi must equal (psi + eta) / 2; e carries
    whatever error-rate notion produced the profile (the EM estimator
    fills 1 - pi, empirical profiles fill the raw mismatch rate).
    """

    psi: float
    eta: float
    pi: float
    e: float

    def __post_init__(self) -> None:
        for name in ("psi", "eta", "pi", "e"):
            v = getattr(self, name)
            if not np.isfinite(v) or not 0.0 <= v <= 1.0:
                raise OutOfRangeError(f"{name}={v!r} is not in [0, 1]")
        if abs(self.pi - (self.psi + self.eta) / 2.0) > 1e-9:
            raise OutOfRangeError(
                f"pi={self.pi!r} is not the balanced accuracy of "
                f"psi={self.psi!r}, eta={self.eta!r}"
            )

    @classmethod
    def from_rates(cls, psi: float, eta: float) -> "ClassifierProfile":
        """Build a profile from sensitivity and specificity alone,
        filling pi = (psi + eta) / 2 and e = 1 - pi."""
        psi = float(psi)
        eta = float(eta)
        pi = (psi + eta) / 2.0
        return cls(psi=psi, eta=eta, pi=pi, e=1.0 - pi)


@dataclass(frozen=True)
class AggregationResult:
    """Output of any aggregation method.

    ``labels[j] = sign_with_tiebreak(scores[j])`` always holds; methods
    without an EM loop report ``iterations = 0``. ``profiles`` is None for
    methods that never estimate classifier accuracies (majority vote).
    ``notes`` carries machine-readable flags such as degenerate fallbacks.
    """

    labels: np.ndarray
    scores: np.ndarray
    profiles: tuple[ClassifierProfile, ...] | None
    iterations: int
    converged: bool
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        labels = _readonly(np.asarray(self.labels, dtype=np.int8))
        scores = _readonly(np.ascontiguousarray(self.scores, dtype=np.float64))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)
        if labels.shape != scores.shape:
            raise LengthMismatchError(
                f"labels have length {labels.shape} but scores {scores.shape}"
            )
        if self.iterations < 0:
            raise OutOfRangeError("iterations must be >= 0")
        if not np.array_equal(labels, sign_with_tiebreak(scores)):
            raise OutOfRangeError("labels disagree with sign(scores)")


def sign_with_tiebreak(x):
    """Sign in {-1, +1} with sign(0) = +1, the fixed tie-break used by
    every decision rule in this package.

    Accepts a scalar or an array; returns an int (scalar input) or an
    int8 array of the same shape. Raises NonFiniteInputError on NaN or
    infinite values.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError("sign is undefined for non-finite input")
    out = np.where(arr >= 0.0, 1, -1).astype(np.int8)
    if np.isscalar(x) or arr.ndim == 0:
        return int(out)
    return out


def validate_matrix(raw, ids: Sequence[str]) -> PredictionMatrix:
    """Validate a rectangular vote grid into a PredictionMatrix.

    Entries are accepted only when numerically exactly -1 or +1 (so 1.0
    passes, 0 and 0.5 do not); abstentions and missing votes are rejected
    rather than imputed.

    Raises
    ------
    EmptyMatrixError
        No rows or no columns.
    NonBinaryEntryError
        Any entry outside {-1, +1}, including non-numeric grids.
    DuplicateClassifierIdError
        Repeated classifier ids.
    DimensionMismatchError
        Id count differs from the column count.
    """
    try:
        arr = np.asarray(raw)
    except ValueError as exc:  # ragged nested lists
        raise NonBinaryEntryError(f"vote grid is not rectangular: {exc}") from exc
    if arr.ndim != 2:
        raise EmptyMatrixError(
            f"vote grid must be 2-dimensional, got shape {arr.shape}"
        )
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise EmptyMatrixError(f"vote grid has shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.number):
        raise NonBinaryEntryError(f"vote grid has non-numeric dtype {arr.dtype}")
    if not np.all(np.isin(arr, (-1, 1))):
        bad = arr[~np.isin(arr, (-1, 1))].ravel()[0]
        raise NonBinaryEntryError(f"vote entry {bad!r} is not -1 or +1")
    ids = tuple(str(i) for i in ids)
    if len(ids) != arr.shape[1]:
        raise DimensionMismatchError(
            f"{len(ids)} classifier ids for {arr.shape[1]} columns"
        )
    if len(set(ids)) != len(ids):
        seen = set()
        dup = next(i for i in ids if i in seen or seen.add(i))
        raise DuplicateClassifierIdError(f"duplicate classifier id {dup!r}")
    votes = _readonly(arr.astype(np.int8))
    return PredictionMatrix(votes=votes, classifier_ids=ids)


def validate_labels(labels, n: int | None = None) -> np.ndarray:
    """Validate a +/-1 label vector, optionally against an expected length."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise LengthMismatchError(f"labels must be 1-dimensional, got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.number) or not np.all(np.isin(arr, (-1, 1))):
        raise NonBinaryEntryError("labels must all be -1 or +1")
    if n is not None and arr.shape[0] != n:
        raise LengthMismatchError(f"expected {n} labels, got {arr.shape[0]}")
    return _readonly(arr.astype(np.int8))


# CSV interchange format: first row is the header of classifier ids, each
# following row holds one sample's m votes as the literal tokens -1 or 1.
# UTF-8, comma separated, no quoting (ids therefore must not contain commas
# or newlines).

_VOTE_TOKENS = {"-1": -1, "1": 1}


def write_votes_csv(matrix: PredictionMatrix, dest) -> None:
    """Write a PredictionMatrix in the CSV interchange format.

    ``dest`` is a path or a text file object.
    """
    for cid in matrix.classifier_ids:
        if any(c in cid for c in ",\r\n"):
            raise CsvFormatError(
                f"classifier id {cid!r} cannot be written unquoted"
            )
    if hasattr(dest, "write"):
        _write_votes(matrix, dest)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            _write_votes(matrix, fh)


def _write_votes(matrix: PredictionMatrix, fh: TextIO) -> None:
    fh.write(",".join(matrix.classifier_ids) + "\n")
    for row in matrix.votes:
        fh.write(",".join("1" if v > 0 else "-1" for v in row) + "\n")


def read_votes_csv(src) -> PredictionMatrix:
    """Parse the CSV interchange format back into a PredictionMatrix.

    ``src`` is a path or a text file object. Round-trips exactly with
    :func:`write_votes_csv`.
    """
    if hasattr(src, "read"):
        return _read_votes(src)
    with open(src, "r", encoding="utf-8", newline="") as fh:
        return _read_votes(fh)


def _read_votes(fh: TextIO) -> PredictionMatrix:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyMatrixError("CSV has no header row") from None
    ids = [h.strip() for h in header]
    rows: list[list[int]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # ignore blank lines
        if len(row) != len(ids):
            raise CsvFormatError(
                f"line {lineno}: expected {len(ids)} votes, got {len(row)}"
            )
        parsed = []
        for tok in row:
            tok = tok.strip()
            if tok not in _VOTE_TOKENS:
                raise NonBinaryEntryError(
                    f"line {lineno}: vote token {tok!r} is not -1 or 1"
                )
            parsed.append(_VOTE_TOKENS[tok])
        rows.append(parsed)
    if not rows:
        raise EmptyMatrixError("CSV has a header but no vote rows")
    return validate_matrix(rows, ids)


def write_labels_csv(labels, dest, header: str = "truth") -> None:
    """Write a +/-1 label vector as a one-column CSV."""
    arr = validate_labels(labels)
    if hasattr(dest, "write"):
        _write_labels(arr, dest, header)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            _write_labels(arr, fh, header)


def _write_labels(arr: np.ndarray, fh: TextIO, header: str) -> None:
    fh.write(header + "\n")
    for v in arr:
        fh.write(("1" if v > 0 else "-1") + "\n")


def read_labels_csv(src) -> np.ndarray:
    """Read a one-column +/-1 label CSV written by :func:`write_labels_csv`."""
    if hasattr(src, "read"):
        lines = src.read().splitlines()
    else:
        with open(src, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    if not lines:
        raise EmptyMatrixError("label CSV is empty")
    vals = []
    for lineno, line in enumerate(lines[1:], start=2):
        tok = line.strip()
        if not tok:
            continue
        if tok not in _VOTE_TOKENS:
            raise NonBinaryEntryError(
                f"line {lineno}: label token {tok!r} is not -1 or 1"
            )
        vals.append(_VOTE_TOKENS[tok])
    if not vals:
        raise EmptyMatrixError("label CSV has a header but no rows")
    return validate_labels(vals)
