"""Exception hierarchy shared by all modules."""


class FloquetError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(FloquetError, ValueError):
    """Invalid physical parameter (e.g. a non-positive quench amplitude)."""


class DomainError(FloquetError, ValueError):
    """Argument outside the domain of an operation."""


class ConfigurationError(FloquetError, ValueError):
    """Inconsistent run or computation configuration."""


class DegenerateBandError(FloquetError, ArithmeticError):
    """Floquet eigenstates are ill-defined because the eigenphase gap closes."""

    def __init__(self, k, message=None):
        self.k = k
        super().__init__(message or f"eigenphase gap closes at k={k!r}; Floquet eigenstates are undefined")


class UndefinedPhaseError(FloquetError, ArithmeticError):
    """The return amplitude vanishes, so its phase is undefined."""
