"""Exception hierarchy shared across the package."""


class FofDesignError(Exception):
    """Base class for all package errors."""


class BasisError(FofDesignError, ValueError):
    """Invalid basis construction parameters."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(FofDesignError, ValueError):
    """Evaluation point outside the unit interval."""


class UnsupportedFamilyError(FofDesignError, TypeError):
    """Operation undefined for the given basis family."""


class ConfigError(FofDesignError, ValueError):
    """Invalid problem or run configuration."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class IdentifiabilityError(ConfigError):
    """Factor basis smaller than the coefficient basis it must identify."""


class EstimabilityError(ConfigError):
    """Too few runs for the number of model parameters."""


class EstimationError(FofDesignError, ArithmeticError):
    """Model matrix is rank deficient or otherwise unusable for fitting."""


class NumericalError(FofDesignError, ArithmeticError):
    """A factorization failed beyond the allowed regularization."""
