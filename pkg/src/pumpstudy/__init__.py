"""Event-study toolkit for cryptocurrency pump-and-dump announcements."""

from .errors import (
    CoverageError,
    DataError,
    DegenerateRegressorError,
    DomainError,
    InsufficientEventsError,
    IntegrityError,
    ParseError,
    PumpStudyError,
    SingularDesignError,
)
from .timeseries import MinuteSeries, RelativeWindow

__version__ = "0.1.0"

__all__ = [
    "CoverageError",
    "DataError",
    "DegenerateRegressorError",
    "DomainError",
    "InsufficientEventsError",
    "IntegrityError",
    "MinuteSeries",
    "ParseError",
    "PumpStudyError",
    "RelativeWindow",
    "SingularDesignError",
]
