"""Errors raised by the mobility-stress pipeline."""

from __future__ import annotations


class MobilityStressError(Exception):
    """Base class for every error raised by this package."""


class DomainTooWide(MobilityStressError):
    """A trace spans too far from its anchor for the local planar projection."""


class UnknownChoice(MobilityStressError):
    """An EMA response text is not one of the five stress choices."""


class DateOutOfTerm(MobilityStressError):
    """A date falls outside the configured term calendar."""


class ClassTooSmall(MobilityStressError):
    """A stress class has too few records for the requested split."""


class BatchTooSmall(MobilityStressError):
    """Batch statistics need at least two rows in Train mode."""


class StaleCache(MobilityStressError):
    """A forward cache no longer matches the network or the batch."""


class EmptyMatrix(MobilityStressError):
    """Metrics were requested from a confusion matrix without any counts."""


class ConfigInvalid(MobilityStressError):
    """Configuration keys or values failed validation."""


class EmptyDataset(MobilityStressError):
    """No labeled user-day survived the join with GPS features."""


class FileMissing(MobilityStressError):
    """An input file does not exist."""


class HeaderMismatch(MobilityStressError):
    """An input CSV header does not match any accepted schema."""


class MalformedRow(MobilityStressError):
    """A CSV row failed validation in strict mode."""

    def __init__(self, path: str, line: int, reason: str) -> None:
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class PipelineStageError(MobilityStressError):
    """Wraps a failure inside `run_pipeline` with the stage that raised it."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


__all__ = [
    "BatchTooSmall",
    "ClassTooSmall",
    "ConfigInvalid",
    "DateOutOfTerm",
    "DomainTooWide",
    "EmptyDataset",
    "EmptyMatrix",
    "FileMissing",
    "HeaderMismatch",
    "MalformedRow",
    "MobilityStressError",
    "PipelineStageError",
    "StaleCache",
    "UnknownChoice",
]
