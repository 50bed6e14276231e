"""Shared exception types.

Everything raised on bad input data or broken artifacts derives from
:class:`DataError` so the CLI can map it to a single exit code.
"""


class TermWeaveError(Exception):
    """Base class for all package-specific errors."""


class DataError(TermWeaveError):
    """Invalid input data or violated precondition."""


class CorpusFormatError(DataError):
    """Corpus file or pre-annotated stream is malformed."""


class ConvergenceError(TermWeaveError):
    """Iterative solver did not converge within its iteration budget."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ArtifactError(DataError):
    """Project store artifact missing, corrupt, or saved into an uninitialized project."""


class MissingPrerequisiteError(DataError):
    """A pipeline stage was requested before the artifacts it depends on exist."""
