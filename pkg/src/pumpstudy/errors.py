"""Exception hierarchy shared by every stage of the pipeline."""


class PumpStudyError(Exception):
    """Base class for all pipeline errors."""


class DomainError(PumpStudyError, ValueError):
    """An input lies outside the domain of an operation."""


class CoverageError(PumpStudyError, IndexError):
    """A requested window is not covered by the available minute grid."""


class DataError(PumpStudyError, ValueError):
    """Data is present but unusable (all gaps, too few observations, ...)."""


class ParseError(PumpStudyError, ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class IntegrityError(PumpStudyError, ValueError):
    """Duplicate keys or other store-level inconsistencies."""


class DegenerateRegressorError(PumpStudyError, ValueError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"regressor {name!r} has zero variance")


class SingularDesignError(PumpStudyError, ValueError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design matrix is rank deficient; collinear columns: {', '.join(self.columns)}")


class InsufficientEventsError(PumpStudyError, ValueError):
    """Too few usable events to run a cross-sectional regression."""
