"""Synthetic function-on-function experiments.

Errors are Gaussian-process paths with an RBF kernel, sampled exactly on the
response grid and then passed through a truncated Fourier representation.
Responses follow ``y = Gamma J_true B_true theta_true(t) + eps`` where the
true coefficient lives in its own (not necessarily orthonormal) bases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import block_diag

from .basis import BasisSpec, BasisSystem, build_basis, gram
from .designmodel import Design, DesignProblem, assemble_J
from .errors import ConfigError, NumericalError
from .estimation import (
    CoefficientEstimate,
    FunctionalDataset,
    beta_surface,
    fit,
    project_responses,
)
from .optimizer import ExchangeConfig, coordinate_exchange, random_design

__all__ = [
    "GPNoiseConfig",
    "TrueCoefficient",
    "default_truth",
    "rbf_kernel",
    "representation_operator",
    "simulate_errors",
    "simulate_responses",
    "integrated_squared_error",
    "ComparisonReport",
    "compare_designs",
    "comparison_problem",
]

log = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_MAX = 1e-6


@dataclass(frozen=True)
class GPNoiseConfig:
    kernel: str = "rbf"
    bandwidth: float = 1e-4
    variance: float = 0.005
    representation_size: int = 81
    grid_size: int = 201
    seed: int = 0

    def __post_init__(self) -> None:
        if str(self.kernel).lower() != "rbf":
            raise ConfigError("kernel", f"only 'rbf' is supported, got {self.kernel!r}")
        if not self.bandwidth > 0:
            raise ConfigError("bandwidth", f"must be > 0, got {self.bandwidth}")
        if not self.variance > 0:
            raise ConfigError("variance", f"must be > 0, got {self.variance}")
        if int(self.grid_size) < 2:
            raise ConfigError("grid_size", f"must be >= 2, got {self.grid_size}")
        if int(self.representation_size) < 0:
            raise ConfigError("representation_size", "must be >= 0 (0 disables it)")

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, int(self.grid_size))

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "bandwidth": self.bandwidth,
            "variance": self.variance,
            "representation_size": self.representation_size,
            "grid_size": self.grid_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> GPNoiseConfig:
        unknown = set(data) - set(cls().to_dict())
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key in noise section")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class TrueCoefficient:
    """Ground-truth super-matrix with its bases in ``s`` and ``t``."""

    B: np.ndarray
    response_basis: BasisSystem
    coeff_bases: tuple[BasisSystem, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeff_bases", tuple(self.coeff_bases))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        rows = 1 + sum(b.dimension for b in self.coeff_bases)
        if B.shape != (rows, self.response_basis.dimension):
            raise ConfigError(
                "B", f"shape {B.shape} does not match bases ({rows}, {self.response_basis.dimension})"
            )
        object.__setattr__(self, "B", B)

    def as_estimate(self) -> CoefficientEstimate:
        return CoefficientEstimate(self.B, self.response_basis, self.coeff_bases)

    def surface(self, factor: int, s_grid: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
        return beta_surface(self.as_estimate(), factor, s_grid, t_grid)


def default_truth(
    n_factors: int = 1, seed: int = 20240601, spec: BasisSpec | None = None
) -> TrueCoefficient:
    """Seeded uniform(-1, 1) coefficients on one basis used in both directions.

    The default basis is four cubic B-splines (no interior knots).
    """
    cubic = build_basis(spec or BasisSpec.bspline(3, 2))
    rng = np.random.default_rng(seed)
    B = rng.uniform(-1.0, 1.0, size=(1 + n_factors * cubic.dimension, cubic.dimension))
    return TrueCoefficient(B, cubic, tuple(cubic for _ in range(n_factors)))


def rbf_kernel(grid: np.ndarray, config: GPNoiseConfig) -> np.ndarray:
    diff = grid[:, None] - grid[None, :]
    return config.variance * np.exp(-(diff**2) / (2.0 * config.bandwidth))


def representation_operator(grid: np.ndarray, size: int) -> np.ndarray:
    """Linear map (T x T) taking grid values to their truncated Fourier reconstruction."""
    if size == 0:
        return np.eye(grid.size)
    theta = build_basis(BasisSpec.fourier(size)).eval(grid)
    w = np.zeros(grid.size)
    h = np.diff(grid)
    w[:-1] += h / 2
    w[1:] += h / 2
    return theta @ (theta * w[:, None]).T


def _cholesky(K: np.ndarray, variance: float) -> np.ndarray:
    jitter = JITTER_START * variance
    eye = np.eye(K.shape[0])
    while jitter <= JITTER_MAX * variance * (1 + 1e-12):
        try:
            return np.linalg.cholesky(K + jitter * eye)
        except np.linalg.LinAlgError:
            jitter *= 2.0
    raise NumericalError(
        f"kernel matrix not positive definite with jitter up to {JITTER_MAX:g} * variance"
    )


def simulate_errors(
    n: int, config: GPNoiseConfig, rng: np.random.Generator | None = None
) -> np.ndarray:
    """``n`` independent zero-mean GP paths on ``config.grid()``, shape (n, T)."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    grid = config.grid()
    L = _cholesky(rbf_kernel(grid, config), config.variance)
    paths = rng.standard_normal((n, grid.size)) @ L.T
    if config.representation_size:
        paths = paths @ representation_operator(grid, int(config.representation_size)).T
    return paths


def _truth_J(problem: DesignProblem, truth: TrueCoefficient) -> np.ndarray:
    if len(truth.coeff_bases) != len(problem.factors):
        raise ConfigError(
            "truth", f"has {len(truth.coeff_bases)} factor blocks, problem has {len(problem.factors)}"
        )
    blocks = [np.ones((1, 1))]
    for fx, cb in zip(problem.factor_systems(), truth.coeff_bases):
        blocks.append(gram(fx, cb))
    return block_diag(*blocks)


def simulate_responses(
    design: Design,
    truth: TrueCoefficient,
    problem: DesignProblem,
    config: GPNoiseConfig,
    *,
    rng: np.random.Generator | None = None,
    errors: np.ndarray | None = None,
    noise: bool = True,
) -> FunctionalDataset:
    """Responses on the noise grid for every run of ``design``.

    ``errors`` overrides the simulated noise (used for paired comparisons);
    ``noise=False`` gives the noiseless signal.
    """
    design.check(problem)
    grid = config.grid()
    signal = design.gamma @ _truth_J(problem, truth) @ truth.B @ truth.response_basis.eval(grid).T
    if errors is not None:
        errors = np.asarray(errors, dtype=float)
        if errors.shape != signal.shape:
            raise ConfigError("errors", f"shape {errors.shape} != {signal.shape}")
        signal = signal + errors
    elif noise:
        signal = signal + simulate_errors(design.n_runs, config, rng)
    return FunctionalDataset(grid, signal, design, problem)


def integrated_squared_error(a: np.ndarray, b: np.ndarray, s_grid: np.ndarray, t_grid: np.ndarray) -> float:
    """Double trapezoid of ``(a - b)^2`` over an (s, t) tensor grid."""
    sq = (np.asarray(a) - np.asarray(b)) ** 2
    return float(trapezoid(trapezoid(sq, t_grid, axis=1), s_grid))


def comparison_problem(n_runs: int = 12) -> DesignProblem:
    """Linear B-spline factor on 19 breakpoints, quadratic coefficient on 3."""
    return DesignProblem.single(n_runs, (1, 19), (2, 3))


@dataclass
class ComparisonReport:
    ise_random: np.ndarray
    ise_optimal: np.ndarray
    optimal_design: Design = field(repr=False)
    optimal_value: float = float("nan")

    @property
    def mean_random(self) -> float:
        return float(np.mean(self.ise_random))

    @property
    def mean_optimal(self) -> float:
        return float(np.mean(self.ise_optimal))

    @property
    def ratio(self) -> float:
        """Mean ISE of the optimal design over that of the random designs."""
        return self.mean_optimal / self.mean_random

    def rows(self) -> list[dict]:
        return [
            {"replicate": r, "ise_random": float(a), "ise_optimal": float(b)}
            for r, (a, b) in enumerate(zip(self.ise_random, self.ise_optimal))
        ]


def compare_designs(
    random_seed: int,
    problem: DesignProblem,
    truth: TrueCoefficient,
    config: GPNoiseConfig,
    n_reps: int,
    *,
    theta_size: int = 7,
    optimal_design: Design | None = None,
    exchange: ExchangeConfig | None = None,
    fixed_random_design: Design | None = None,
    surface_points: int = 101,
) -> ComparisonReport:
    """Integrated squared error of the first factor's estimate, random vs optimal.

    Each replicate draws one noise realization shared by both designs.  The
    random design is redrawn per replicate unless ``fixed_random_design`` is
    given.  ``optimal_design`` defaults to a coordinate-exchange search.
    """
    if n_reps < 1:
        raise ConfigError("n_reps", "must be >= 1")
    optimal_value = float("nan")
    if optimal_design is None:
        result = coordinate_exchange(problem, exchange or ExchangeConfig(random_starts=200))
        if result.best_design is None:
            raise ConfigError("problem", "no feasible optimal design found")
        optimal_design, optimal_value = result.best_design, result.criterion_value
    theta = build_basis(BasisSpec.fourier(theta_size))
    coeff = tuple(problem.coeff_systems())
    J = assemble_J(problem)
    sg = np.linspace(0.0, 1.0, surface_points)
    true_surface = truth.surface(1, sg, sg)

    def ise(design: Design, errors: np.ndarray) -> float:
        data = simulate_responses(design, truth, problem, config, errors=errors)
        est = fit(design.gamma @ J, project_responses(data, theta), theta, coeff)
        return integrated_squared_error(beta_surface(est, 1, sg, sg), true_surface, sg, sg)

    ise_r = np.empty(n_reps)
    ise_o = np.empty(n_reps)
    for rep in range(n_reps):
        errors = simulate_errors(problem.n_runs, config, np.random.default_rng([config.seed, rep]))
        if fixed_random_design is not None:
            rnd = fixed_random_design
        else:
            rnd = random_design(problem, np.random.default_rng([random_seed, rep]))
        ise_r[rep] = ise(rnd, errors)
        ise_o[rep] = ise(optimal_design, errors)
    log.info("mean ISE random=%.4g optimal=%.4g", ise_r.mean(), ise_o.mean())
    return ComparisonReport(ise_r, ise_o, optimal_design, optimal_value)
