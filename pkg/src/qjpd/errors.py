"""Exception types shared across the package."""


class QJPDError(Exception):
    """Base class for package errors."""


class DomainError(QJPDError, ValueError):
    """An input lies outside the domain of an operation."""


class DegenerateSpectrumError(QJPDError, ValueError):
    pass


class SpectrumParseError(QJPDError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class SpeciesLookupError(QJPDError, KeyError):
    pass


class SpeciesFormatError(QJPDError, ValueError):
    pass


class DegenerateRatesError(QJPDError, ValueError):
    """All transition rates vanish so no steady state exists."""


class IntegrationError(QJPDError, RuntimeError):
    def __init__(self, message, achieved_tolerance=None):
        self.achieved_tolerance = achieved_tolerance
        super().__init__(message)


class FitError(QJPDError, RuntimeError):
    """Optimizer did not converge; ``best`` holds the best parameters seen."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class FitRankError(QJPDError, ValueError):
    pass


class ConfigError(QJPDError, ValueError):
    pass
