"""Shared exception types."""


class TalkqaError(Exception):
    """Base class for all package errors."""


class ManifestError(TalkqaError):
    """Malformed or inconsistent stimulus manifest."""


class FoldError(TalkqaError):
    """Invalid fold request or fold plan."""


class RatingError(TalkqaError):
    """Malformed rating record or rating file."""


class DegenerateInputError(TalkqaError):
    """Input on which the requested statistic is undefined."""


class CoverageError(TalkqaError):
    """Prediction/feature set does not match the expected stimulus set."""

    def __init__(self, message: str, missing=(), extra=()):
        super().__init__(message)
        self.missing = sorted(missing)
        self.extra = sorted(extra)


class BackendUnavailableError(TalkqaError):
    """A requested feature-extraction backend is not usable."""


class MissingComponentError(TalkqaError):
    """A feature bundle component required for fusion is absent."""


class TrainingError(TalkqaError):
    """Regression training aborted (shape mismatch, NaN loss, ...)."""


class CacheVersionError(TalkqaError):
    """Feature cache was produced by different backend versions."""


class MediaError(TalkqaError):
    """Video or image could not be decoded."""


class ServiceError(TalkqaError):
    """Study-service state violation."""
