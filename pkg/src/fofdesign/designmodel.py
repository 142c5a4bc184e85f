"""Design problems, candidate designs, information matrices and A/D criteria.

A design is the coefficient matrix ``gamma`` whose first column is the
intercept (all ones) followed by one block of basis coefficients per factor.
The reduced model matrix is ``Z = gamma @ J`` with ``J`` block diagonal,
``J = diag(1, G_1, ..., G_p)`` and ``G_i`` the cross-Gram matrix between the
factor basis and the coefficient basis of factor ``i``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np
import numpy.typing as npt
from scipy.linalg import block_diag

from .basis import BasisSpec, BasisSystem, build_basis, gram
from .errors import ConfigError, EstimabilityError, IdentifiabilityError

__all__ = [
    "Criterion",
    "FactorSpec",
    "DesignProblem",
    "Design",
    "InformationSummary",
    "RCOND_TOL",
    "INFEASIBLE",
    "assemble_J",
    "information",
    "a_value",
    "d_value",
    "criterion",
    "relative_efficiency",
]

RCOND_TOL = 1e-12
INFEASIBLE = math.inf


class Criterion(str, enum.Enum):
    A = "A"
    D = "D"

    @classmethod
    def parse(cls, value: str | Criterion) -> Criterion:
        if isinstance(value, Criterion):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ConfigError("criterion", f"must be 'A' or 'D', got {value!r}") from None


@dataclass(frozen=True)
class FactorSpec:
    """Basis used to build the factor curves and basis for its coefficient in ``s``."""

    factor_basis: BasisSpec
    coeff_basis: BasisSpec

    def check_identifiable(self, index: int = 0) -> None:
        if self.factor_basis.dimension < self.coeff_basis.dimension:
            raise IdentifiabilityError(
                f"factors[{index}]",
                "identifiability requires D_X + K_X >= D_beta + K_beta "
                f"(dim {self.factor_basis.dimension} factor basis < "
                f"dim {self.coeff_basis.dimension} coefficient basis)",
            )

    def to_dict(self) -> dict[str, Any]:
        return {"factor_basis": self.factor_basis.to_dict(), "coeff_basis": self.coeff_basis.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FactorSpec:
        unknown = set(data) - {"factor_basis", "coeff_basis"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key in factor section")
        for key in ("factor_basis", "coeff_basis"):
            if key not in data:
                raise ConfigError(key, "missing")
        return cls(BasisSpec.from_dict(data["factor_basis"]), BasisSpec.from_dict(data["coeff_basis"]))


@dataclass(frozen=True)
class DesignProblem:
    n_runs: int
    factors: tuple[FactorSpec, ...]
    criterion: Criterion = Criterion.A
    bound: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "criterion", Criterion.parse(self.criterion))
        if not isinstance(self.n_runs, (int, np.integer)) or self.n_runs < 2:
            raise ConfigError("n_runs", f"must be an integer >= 2, got {self.n_runs!r}")
        if len(self.factors) < 1:
            raise ConfigError("factors", "at least one factor is required")
        if not self.bound > 0:
            raise ConfigError("bound", f"must be positive, got {self.bound!r}")

    @property
    def n_params(self) -> int:
        """Columns of Z: intercept plus every coefficient basis."""
        return 1 + sum(f.coeff_basis.dimension for f in self.factors)

    @property
    def n_design_cols(self) -> int:
        """Columns of gamma: intercept plus every factor basis."""
        return 1 + sum(f.factor_basis.dimension for f in self.factors)

    def factor_slices(self) -> list[slice]:
        out, start = [], 1
        for f in self.factors:
            out.append(slice(start, start + f.factor_basis.dimension))
            start += f.factor_basis.dimension
        return out

    def coeff_slices(self) -> list[slice]:
        out, start = [], 1
        for f in self.factors:
            out.append(slice(start, start + f.coeff_basis.dimension))
            start += f.coeff_basis.dimension
        return out

    def validate(self) -> None:
        """Raise if the problem cannot yield an estimable, identifiable model.

        Equality ``N == n_params`` is allowed with a warning: the criterion is
        computable but no residual degrees of freedom remain.
        """
        for i, f in enumerate(self.factors):
            f.check_identifiable(i)
        if self.n_runs < self.n_params:
            raise EstimabilityError(
                "n_runs",
                f"estimability requires N >= 1 + sum of coefficient basis sizes "
                f"({self.n_runs} < {self.n_params})",
            )
        if self.n_runs == self.n_params:
            warnings.warn(
                f"N = {self.n_runs} equals the number of parameters; no residual "
                "degrees of freedom remain",
                UserWarning,
                stacklevel=2,
            )

    def is_feasible(self) -> bool:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                self.validate()
        except ConfigError:
            return False
        return True

    def factor_systems(self) -> list[BasisSystem]:
        return [build_basis(f.factor_basis) for f in self.factors]

    def coeff_systems(self) -> list[BasisSystem]:
        return [build_basis(f.coeff_basis) for f in self.factors]

    def column_names(self) -> list[str]:
        """Header for the free (non-intercept) columns of gamma."""
        return [
            f"x{i + 1}_c{k + 1}"
            for i, f in enumerate(self.factors)
            for k in range(f.factor_basis.dimension)
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_runs": int(self.n_runs),
            "criterion": self.criterion.value,
            "bound": float(self.bound),
            "factors": [f.to_dict() for f in self.factors],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> DesignProblem:
        unknown = set(data) - {"n_runs", "criterion", "bound", "factors"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key in problem section")
        if "n_runs" not in data:
            raise ConfigError("n_runs", "missing")
        factors = data.get("factors")
        if not isinstance(factors, Sequence) or isinstance(factors, (str, bytes)):
            raise ConfigError("factors", "must be a list of factor sections")
        return cls(
            n_runs=data["n_runs"],
            factors=tuple(FactorSpec.from_dict(f) for f in factors),
            criterion=data.get("criterion", "A"),
            bound=float(data.get("bound", 1.0)),
        )

    @classmethod
    def single(
        cls,
        n_runs: int,
        factor: tuple[int, int],
        coeff: tuple[int, int],
        criterion: str | Criterion = Criterion.A,
        bound: float = 1.0,
    ) -> DesignProblem:
        """One B-spline factor given as ``(degree, breakpoints)`` pairs."""
        return cls(
            n_runs,
            (FactorSpec(BasisSpec.bspline(*factor), BasisSpec.bspline(*coeff)),),
            criterion,
            bound,
        )


@dataclass(frozen=True, eq=False)
class Design:
    """Coefficient matrix of a design; column 0 is the intercept."""

    gamma: np.ndarray

    def __post_init__(self) -> None:
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[1] < 2:
            raise ConfigError("gamma", f"must be a 2-D matrix with >= 2 columns, got {g.shape}")
        if not np.all(g[:, 0] == 1.0):
            raise ConfigError("gamma", "column 0 (intercept) must be identically 1")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_coefficients(cls, coefficients: npt.ArrayLike) -> Design:
        """Prepend the intercept column to a matrix of factor coefficients."""
        c = np.atleast_2d(np.asarray(coefficients, dtype=float))
        return cls(np.hstack([np.ones((c.shape[0], 1)), c]))

    @property
    def n_runs(self) -> int:
        return self.gamma.shape[0]

    @property
    def coefficients(self) -> np.ndarray:
        return self.gamma[:, 1:]

    def check(self, problem: DesignProblem) -> None:
        if self.gamma.shape != (problem.n_runs, problem.n_design_cols):
            raise ConfigError(
                "gamma",
                f"shape {self.gamma.shape} does not match problem "
                f"({problem.n_runs}, {problem.n_design_cols})",
            )
        if np.max(np.abs(self.coefficients)) > problem.bound * (1 + 1e-12):
            raise ConfigError("gamma", f"entries exceed the box bound {problem.bound}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Design) and np.array_equal(self.gamma, other.gamma)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class InformationSummary:
    J: np.ndarray
    Z: np.ndarray
    M: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    reciprocal_condition: float

    @property
    def feasible(self) -> bool:
        return self.reciprocal_condition >= RCOND_TOL

    @cached_property
    def criterion_values(self) -> dict[str, float]:
        return {"A": a_value(self), "D": d_value(self)}


def assemble_J(problem: DesignProblem) -> np.ndarray:
    """Block-diagonal ``diag(1, G_1, ..., G_p)`` of factor/coefficient cross-Grams."""
    blocks = [np.ones((1, 1))]
    for fx, cb in zip(problem.factor_systems(), problem.coeff_systems()):
        blocks.append(gram(fx, cb))
    return block_diag(*blocks)


def information(design: Design | np.ndarray, J: np.ndarray) -> InformationSummary:
    gamma = design.gamma if isinstance(design, Design) else np.asarray(design, dtype=float)
    if gamma.shape[1] != J.shape[0]:
        raise ConfigError("gamma", f"has {gamma.shape[1]} columns but J has {J.shape[0]} rows")
    Z = gamma @ J
    M = Z.T @ Z
    M = (M + M.T) / 2.0
    eig = np.linalg.eigvalsh(M)
    top = eig[-1]
    rcond = float(eig[0] / top) if top > 0 else 0.0
    return InformationSummary(J=J, Z=Z, M=M, eigenvalues=eig, reciprocal_condition=rcond)


def a_value(summary: InformationSummary) -> float:
    """``tr(M^-1)`` as the sum of reciprocal eigenvalues; infinite when singular."""
    if not summary.feasible:
        return INFEASIBLE
    return float(np.sum(1.0 / summary.eigenvalues))


def d_value(summary: InformationSummary) -> float:
    if not summary.feasible:
        return 0.0
    return float(np.prod(summary.eigenvalues))


def criterion(problem: DesignProblem, design: Design, J: np.ndarray | None = None) -> float:
    """Value to minimize: the A-value, or the negated D-value."""
    design.check(problem)
    if J is None:
        J = assemble_J(problem)
    summary = information(design, J)
    if problem.criterion is Criterion.A:
        return a_value(summary)
    return -d_value(summary)


def relative_efficiency(values: Sequence[float]) -> list[float]:
    """``min(values) / v`` for each A-value ``v``; the best design scores 1."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("relative_efficiency needs at least one value")
    if any(not math.isfinite(v) or v <= 0 for v in vals):
        raise ValueError(f"A-values must be finite and positive, got {vals}")
    best = min(vals)
    return [best / v for v in vals]
