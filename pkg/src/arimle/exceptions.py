"""Exception hierarchy.

Two families matter to callers: :class:`ParseError` covers malformed input
data (CSV files, vote grids), everything else under :class:`ArimleError`
covers violated algorithm preconditions or configuration. The CLI maps
ParseError to exit code 2 and the rest to exit code 3.
"""


class ArimleError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ArimleError):
    """Input data could not be parsed or validated."""


class NonBinaryEntryError(ParseError):
    """A vote entry was not exactly -1 or +1."""


class DuplicateClassifierIdError(ParseError):
    """Two classifier columns share the same id."""


class EmptyMatrixError(ParseError):
    """A prediction matrix has no samples or no classifiers."""


class CsvFormatError(ParseError):
    """A CSV file does not follow the vote interchange format."""


class NonFiniteInputError(ArimleError):
    """A value required to be finite was NaN or infinite."""


class OutOfRangeError(ArimleError):
    """A rate or probability fell outside its valid interval."""


class DimensionMismatchError(ArimleError):
    """Array shapes or counts disagree with the prediction matrix."""


class LengthMismatchError(ArimleError):
    """Two vectors that must be equally long are not."""


class TooFewClassifiersError(ArimleError):
    """The operation needs more classifier columns than were given."""


class TooFewSamplesError(ArimleError):
    """The operation needs more samples than were given."""


class SolverDivergedError(ArimleError):
    """The least-squares solver produced a non-finite residual."""


class BoundaryRateError(ArimleError):
    """A sensitivity or specificity of exactly 0 or 1 reached the
    log-odds weight computation; callers must smooth first."""


class SingleClassTruthError(ArimleError):
    """A ground-truth vector contains only one class."""


class InvalidSpecError(ArimleError):
    """A synthetic ensemble description violates its invariants."""


class InvalidConfigError(ArimleError):
    """A benchmark or CLI configuration value is unusable."""
