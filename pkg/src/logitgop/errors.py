"""Exception types raised across the toolkit.

Every error the pipeline can produce derives from LogitGopError so the CLI
can catch one base class and exit nonzero with a diagnostic.
"""


class LogitGopError(Exception):
    """Base class for all toolkit errors."""


class TensorFormatError(LogitGopError):
    """A .gopl file violates the binary interchange format."""


class BadMagicError(TensorFormatError):
    """File does not start with the GOPL magic bytes."""


class VersionMismatchError(TensorFormatError):
    """File declares an unsupported format version."""


class TruncatedPayloadError(TensorFormatError):
    """Payload is shorter than the header-declared T*V floats."""


class ShapeMismatchError(TensorFormatError):
    """Tensor width V disagrees with the expected inventory size."""


class NonFiniteError(LogitGopError):
    """A logit tensor contains NaN or Inf entries."""


class ManifestError(LogitGopError):
    """Corpus manifest violates the schema or a cross-invariant."""


class AlignmentError(LogitGopError):
    """Forced alignment is infeasible or was given invalid targets."""


class ScoringError(LogitGopError):
    """A GOP score was requested on invalid inputs."""


class EvaluationError(LogitGopError):
    """Evaluation inputs are degenerate (single class, zero variance, ...)."""
