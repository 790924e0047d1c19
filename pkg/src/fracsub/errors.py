"""Exception types shared across the package.

The CLI maps :class:`ParameterError` to exit code 2 and
:class:`AccuracyError` to exit code 3.
"""


class ParameterError(ValueError):
    """Parameters outside their admissible range."""


class DegenerateLawError(ParameterError):
    """A law that collapses to a point mass where a density was requested."""


class AccuracyError(RuntimeError):
    """A numerical routine could not reach its accuracy target.

    ``diagnostics`` is a JSON-serialisable dict describing what was achieved.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = {"error": message, **diagnostics}


class TruncationError(AccuracyError):
    """A truncated series left more probability mass than allowed."""
