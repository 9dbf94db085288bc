"""Exception types shared across the package."""


class KpsumError(Exception):
    """Base class for every error this package raises deliberately."""


class DatasetFormatError(KpsumError):
    """A dataset file line could not be parsed or violates the record schema."""

    def __init__(self, message: str, *, line: int | None = None):
        super().__init__(message)
        self.line = line


class ScoreFormatError(KpsumError):
    """An external score file violates the token-score contract."""


class TemplateError(KpsumError):
    """A prompt template or its render arguments are malformed."""


class TransportError(KpsumError):
    """The completion endpoint could not be reached or kept failing."""

    def __init__(self, message: str, *, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class AuthError(TransportError):
    """The endpoint rejected (or never received) the configured credentials."""


class RunFailureError(KpsumError):
    """Per-document failure ratio of a summarization run exceeded its cap."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class EvaluationError(KpsumError):
    """Run output and dataset disagree (unknown or missing document ids)."""
