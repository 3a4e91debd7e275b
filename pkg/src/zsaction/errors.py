"""Exception hierarchy for the engine.

Every error carries a short machine-readable ``category`` that the CLI
maps to a distinct exit code.  Messages are single-line and name the
offending file, label, dimension, or byte offset.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    category = "internal"


class MatrixFormatError(EngineError):
    """A matrix file violates the binary format."""

    category = "format"

    def __init__(self, message, path=None, offset=None):
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path
        self.offset = offset


class ManifestError(EngineError):
    """A workspace manifest is malformed or references inconsistent data."""

    category = "format"


class DimensionMismatchError(EngineError):
    """Two artifacts disagree on a dimension; the message names both."""

    category = "invariant"


class InvariantError(EngineError):
    """A parameter or data invariant was violated."""

    category = "invariant"


class TrainingDivergedError(EngineError):
    """Training produced a non-finite loss and was aborted."""

    category = "divergence"

    def __init__(self, epoch, detail=""):
        suffix = f": {detail}" if detail else ""
        super().__init__(f"training diverged at epoch {epoch}{suffix}")
        self.epoch = epoch


class EvaluationError(EngineError):
    """A protocol run failed; carries the index of the failing run."""

    category = "evaluation"

    def __init__(self, run_index, cause):
        super().__init__(f"run {run_index} failed: {cause}")
        self.run_index = run_index
