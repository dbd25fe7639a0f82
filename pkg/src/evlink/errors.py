"""Exception hierarchy shared across the package.

Two families matter for the CLI exit codes: input/validation problems
(exit 1) and runtime failures (exit 2).
"""


class EvlinkError(Exception):
    """Base class for all package errors."""


class InputError(EvlinkError, ValueError):
    """Bad user input: unparseable files, invariant violations, bad config."""


class CorpusFormatError(InputError):
    """Corpus file cannot be parsed or is missing required fields."""


class ValidationError(InputError):
    """Parsed data violates a data-model invariant."""


class DimensionError(InputError):
    """Vector dimensions are inconsistent or do not match expectations."""


class MissingEmbeddingError(InputError):
    """A corpus mention has no embedding in the table."""


class ConfigError(InputError):
    """Pipeline configuration is missing or inconsistent."""


class CheckpointError(InputError):
    """Checkpoint file is corrupt, truncated, or shape-inconsistent."""


class UndefinedSimilarityError(EvlinkError):
    """Cosine similarity requested for a zero vector."""


class EmptyDiagnosticsError(EvlinkError):
    """Cosine diagnostics requested over an empty pair list."""


class TrainingError(EvlinkError):
    """Training aborted: non-finite loss/gradient or dev evaluation failure."""


class PipelineError(EvlinkError):
    """A pipeline stage failed; the message names the stage."""
