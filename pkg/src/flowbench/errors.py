"""Domain exceptions raised across the package.

Every error that a caller is expected to handle derives from
:class:`FlowbenchError`, so the CLI can map domain failures to exit code 1
while genuine bugs still surface as ordinary tracebacks.
"""


class FlowbenchError(Exception):
    """Base class for all domain errors."""


class DimMismatch(FlowbenchError):
    """Operands disagree on dimensionality."""


class NotPositiveDefinite(FlowbenchError):
    """Cholesky factorization hit a non-positive pivot."""


class NoConvergence(FlowbenchError):
    """Iterative solver exhausted its sweep budget."""


class NonFiniteActivation(FlowbenchError):
    """A flow forward pass produced NaN or Inf."""


class DivergedLoss(FlowbenchError):
    """Training loss became non-finite; carries the partial loss history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class ParseError(FlowbenchError):
    """Non-numeric cell in a dataset file."""

    def __init__(self, row, col):
        super().__init__(f"non-numeric value at data row {row}, column {col!r}")
        self.row = row
        self.col = col


class MissingLabelColumn(FlowbenchError):
    """Dataset file lacks the requested label column."""


class EmptyDataset(FlowbenchError):
    """Dataset file contains no data rows."""


class TooFewNormals(FlowbenchError):
    """Train/test split requires at least two normal rows."""


class SchemaVersionMismatch(FlowbenchError):
    """Persisted model uses an unsupported format version."""


class CorruptFile(FlowbenchError):
    """Persisted artifact is truncated or structurally invalid."""


class SingleClass(FlowbenchError):
    """Ranking metric needs both classes present."""


class NotEnoughRows(FlowbenchError):
    """Too few rows to fit the estimator."""


class IncompleteMatrix(FlowbenchError):
    """Score matrix has missing cells."""


class NoCompetitors(FlowbenchError):
    """Comparison requires at least one competitor."""


class EmptyPool(FlowbenchError):
    """Competitor pool filter produced no models."""


class KTooLarge(FlowbenchError):
    """Neighbor count must be smaller than the number of points."""


class DegenerateData(FlowbenchError):
    """Too few usable points for a stable estimate."""


class RhoOutOfRange(FlowbenchError):
    """Autoregressive correlation must lie in [0, 1)."""


class DegenerateComponent(FlowbenchError):
    """A mixture component collapsed during fitting."""


class TOutOfRange(FlowbenchError):
    """Concentration deviation must satisfy 0 < t < d."""
