"""Exception types shared across the toolkit.

Data errors derive from GastimateError so callers (CLI, service) can map the
whole family to one exit code / HTTP status while still catching specific
conditions.
"""


class GastimateError(Exception):
    """Base class for all domain errors raised by this package."""


# --- ledger / chain model

class MissingProcessedTimestamp(GastimateError):
    """Transaction has no processed timestamp (still unmined)."""


class NegativeDuration(GastimateError):
    """processed_ts < pending_ts; indicates corrupt input data."""


class EmptyWindow(GastimateError):
    """A block-lookback window contains no (non-empty) blocks."""


class InvariantViolation(GastimateError):
    """A structural invariant of the ledger model failed validation."""


# --- ingest

class ParseError(GastimateError):
    """Input file could not be parsed; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# --- simulator

class InvalidConfig(GastimateError):
    """Simulator configuration parameter out of range."""


# --- pricing

class EmptyInput(GastimateError):
    """Quantile of an empty sample requested."""


class InsufficientWindow(GastimateError):
    """Too few pooled prices in the lookback window to form quintiles."""


# --- features / estimator

class DomainError(GastimateError):
    """Argument outside the mathematical domain of a transform."""


class DegenerateDesign(GastimateError):
    """Regression design has no variance in the single feature."""


# --- evaluation

class SpanTooShort(GastimateError):
    """Dataset spans fewer days than one validation window."""


class NoRecords(GastimateError):
    """Accuracy metrics requested over zero records."""


class MissingSourcePrediction(GastimateError):
    """Ensemble routed to a source that has no prediction for the tx."""


class LengthMismatch(GastimateError):
    """Paired comparison received lists of different lengths."""


# --- stats

class DegenerateTies(GastimateError):
    """All pooled values identical; rank tests undefined."""


class AllZeroDifferences(GastimateError):
    """Wilcoxon signed-rank with every paired difference equal to zero."""


class ZeroVariance(GastimateError):
    """Correlation undefined because one variable is constant."""


# --- ranking

class DuplicatePair(GastimateError):
    """The same unordered model pair appeared twice in pairwise input."""


class NearSingular(GastimateError):
    """alpha * spectral_radius too close to 1; centrality system unstable."""


class UnstableRanking(GastimateError):
    """Rank order changed across the alpha stability sweep."""
