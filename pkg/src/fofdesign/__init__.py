"""A- and D-optimal designs for function-on-function linear models with dynamic factors."""

from .basis import BasisSpec, BasisSystem, Family, build_basis, gram, knot_nesting
from .designmodel import (
    Criterion,
    Design,
    DesignProblem,
    FactorSpec,
    a_value,
    assemble_J,
    criterion,
    d_value,
    information,
    relative_efficiency,
)
from .errors import (
    BasisError,
    ConfigError,
    DomainError,
    EstimabilityError,
    EstimationError,
    FofDesignError,
    IdentifiabilityError,
    NumericalError,
    UnsupportedFamilyError,
)
from .estimation import CoefficientEstimate, FunctionalDataset, NoiseCovariance, fit, project_responses
from .optimizer import ExchangeConfig, SearchResult, coordinate_exchange, exhaustive_search

__version__ = "0.1.0"

__all__ = [
    "BasisSpec", "BasisSystem", "Family", "build_basis", "gram", "knot_nesting",
    "Criterion", "Design", "DesignProblem", "FactorSpec", "a_value", "assemble_J",
    "criterion", "d_value", "information", "relative_efficiency",
    "BasisError", "ConfigError", "DomainError", "EstimabilityError", "EstimationError",
    "FofDesignError", "IdentifiabilityError", "NumericalError", "UnsupportedFamilyError",
    "CoefficientEstimate", "FunctionalDataset", "NoiseCovariance", "fit", "project_responses",
    "ExchangeConfig", "SearchResult", "coordinate_exchange", "exhaustive_search",
]
