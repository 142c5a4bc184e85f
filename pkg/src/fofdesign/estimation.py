"""Least-squares estimation of the functional coefficient.

Responses are projected onto an orthonormal basis in ``t`` giving an N x L
matrix ``Y``; the coefficient super-matrix is then the ordinary least-squares
solution of ``Z B = Y``.  Under i.i.d. errors with coefficient covariance
``Sigma`` the column-stacked estimator has covariance ``kron(Sigma, inv(Z'Z))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.integrate import trapezoid

from .basis import BasisSystem
from .designmodel import RCOND_TOL, Design, DesignProblem
from .errors import ConfigError, DomainError, EstimationError

__all__ = [
    "FunctionalDataset",
    "CoefficientEstimate",
    "NoiseCovariance",
    "project_responses",
    "fit",
    "vec_variance",
    "reconstruct_beta",
    "beta_surface",
    "estimate_sigma",
    "residuals",
]


@dataclass(frozen=True, eq=False)
class FunctionalDataset:
    """Responses ``y_n(t_j)`` observed on a dense common grid."""

    grid: np.ndarray
    responses: np.ndarray
    design: Design | None = None
    problem: DesignProblem | None = None

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float).ravel()
        resp = np.atleast_2d(np.asarray(self.responses, dtype=float))
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ConfigError("grid", "must be strictly increasing with at least 2 points")
        if grid[0] < 0 or grid[-1] > 1:
            raise ConfigError("grid", "must lie in [0, 1]")
        if resp.shape[1] != grid.size:
            raise ConfigError(
                "responses", f"have {resp.shape[1]} columns but the grid has {grid.size} points"
            )
        if self.design is not None and self.design.n_runs != resp.shape[0]:
            raise ConfigError(
                "responses", f"{resp.shape[0]} rows but the design has {self.design.n_runs} runs"
            )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "responses", resp)

    @property
    def n_runs(self) -> int:
        return self.responses.shape[0]


@dataclass(frozen=True, eq=False)
class CoefficientEstimate:
    """Super-matrix ``B`` (intercept row first, then one block per factor)."""

    B_hat: np.ndarray
    theta_basis: BasisSystem
    coeff_bases: tuple[BasisSystem, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeff_bases", tuple(self.coeff_bases))
        B = np.atleast_2d(np.asarray(self.B_hat, dtype=float))
        expected = 1 + sum(b.dimension for b in self.coeff_bases)
        if self.coeff_bases and B.shape[0] != expected:
            raise ConfigError("B_hat", f"has {B.shape[0]} rows, coefficient bases need {expected}")
        if B.shape[1] != self.theta_basis.dimension:
            raise ConfigError(
                "B_hat", f"has {B.shape[1]} columns, theta basis has {self.theta_basis.dimension}"
            )
        object.__setattr__(self, "B_hat", B)

    @property
    def intercept(self) -> np.ndarray:
        return self.B_hat[0]

    def block(self, i: int) -> np.ndarray:
        """Coefficient block of factor ``i`` (1-based, matching beta_i)."""
        start = 1 + sum(b.dimension for b in self.coeff_bases[: i - 1])
        return self.B_hat[start : start + self.coeff_bases[i - 1].dimension]


@dataclass(frozen=True, eq=False)
class NoiseCovariance:
    sigma: np.ndarray

    def __post_init__(self) -> None:
        s = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if s.shape[0] != s.shape[1]:
            raise ConfigError("sigma", f"must be square, got {s.shape}")
        scale = max(1.0, float(np.max(np.abs(s)))) if s.size else 1.0
        if np.max(np.abs(s - s.T), initial=0.0) > 1e-12 * scale:
            raise ConfigError("sigma", "must be symmetric")
        if s.size and np.linalg.eigvalsh((s + s.T) / 2)[0] < -1e-10 * scale:
            raise ConfigError("sigma", "must be positive semidefinite")
        object.__setattr__(self, "sigma", (s + s.T) / 2)


def project_responses(
    dataset: FunctionalDataset, theta_basis: BasisSystem
) -> np.ndarray:
    """``Y[n, l] = integral y_n(t) theta_l(t) dt`` by the composite trapezoid rule."""
    T = dataset.grid.size
    if T < theta_basis.dimension:
        raise ConfigError(
            "grid",
            f"{T} grid points cannot resolve {theta_basis.dimension} basis functions",
        )
    theta = theta_basis.eval(dataset.grid)
    return trapezoid(dataset.responses[:, :, None] * theta[None, :, :], dataset.grid, axis=1)


def _block_names(n_cols: int, blocks: Sequence[slice] | None) -> list[str]:
    names = ["intercept"] * n_cols
    if blocks:
        for i, sl in enumerate(blocks, start=1):
            for c in range(sl.start, sl.stop):
                names[c] = f"factor {i}"
    return names


def fit(
    Z: npt.ArrayLike,
    Y: npt.ArrayLike,
    theta_basis: BasisSystem,
    coeff_bases: Sequence[BasisSystem] = (),
    *,
    blocks: Sequence[slice] | None = None,
) -> CoefficientEstimate:
    """Least-squares ``B_hat = inv(Z'Z) Z' Y`` through a pivoted QR of ``Z``.

    Raises
    ------
    EstimationError
        If ``Z'Z`` is singular at the package tolerance; the message names
        the block whose column first breaks the rank.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Z.shape[0] != Y.shape[0]:
        raise ConfigError("Y", f"has {Y.shape[0]} rows but Z has {Z.shape[0]}")
    if blocks is None and coeff_bases:
        blocks, start = [], 1
        for b in coeff_bases:
            blocks.append(slice(start, start + b.dimension))
            start += b.dimension
    q = Z.shape[1]
    Q, R, perm = scipy.linalg.qr(Z, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    # rcond(Z'Z) = rcond(Z)^2, so compare singular values against sqrt(tol).
    sv = np.linalg.svd(Z, compute_uv=False)
    if Z.shape[0] < q or sv[-1] < np.sqrt(RCOND_TOL) * sv[0] or diag[-1] == 0:
        names = _block_names(q, blocks)
        culprit = names[-1]
        for c in range(1, q + 1):
            s = np.linalg.svd(Z[:, :c], compute_uv=False)
            if Z.shape[0] < c or s[-1] <= np.sqrt(RCOND_TOL) * s[0]:
                culprit = names[c - 1]
                break
        raise EstimationError(f"model matrix Z is rank deficient in the {culprit} block")
    coef = scipy.linalg.solve_triangular(R, Q.T @ Y)
    B = np.empty_like(coef)
    B[perm] = coef
    return CoefficientEstimate(B, theta_basis, tuple(coeff_bases))


def residuals(Z: np.ndarray, Y: np.ndarray, estimate: CoefficientEstimate) -> np.ndarray:
    return np.asarray(Y, dtype=float) - np.asarray(Z, dtype=float) @ estimate.B_hat


def vec_variance(sigma: NoiseCovariance | np.ndarray, Z: npt.ArrayLike) -> np.ndarray:
    """Covariance of the column-stacked estimator, ``kron(Sigma, inv(Z'Z))``."""
    S = sigma.sigma if isinstance(sigma, NoiseCovariance) else np.atleast_2d(sigma)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    M = Z.T @ Z
    eig = np.linalg.eigvalsh(M)
    if eig[-1] <= 0 or eig[0] / eig[-1] < RCOND_TOL:
        raise EstimationError("Z'Z is singular; the estimator variance is undefined")
    return np.kron(S, np.linalg.inv(M))


def _check_unit(name: str, x: np.ndarray) -> None:
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError(f"{name} must lie in [0, 1]")


def reconstruct_beta(estimate: CoefficientEstimate, s: float, t: float) -> np.ndarray:
    """``(beta_0(t), beta_1(s, t), ..., beta_p(s, t))`` from the super-matrix."""
    _check_unit("s", np.asarray(s))
    _check_unit("t", np.asarray(t))
    theta = estimate.theta_basis.eval(float(t))
    out = np.empty(1 + len(estimate.coeff_bases))
    out[0] = estimate.intercept @ theta
    for i, basis in enumerate(estimate.coeff_bases, start=1):
        out[i] = basis.eval(float(s)) @ estimate.block(i) @ theta
    return out


def beta_surface(
    estimate: CoefficientEstimate, factor: int, s_grid: npt.ArrayLike, t_grid: npt.ArrayLike
) -> np.ndarray:
    """``beta_factor(s, t)`` on a tensor grid, rows indexed by ``s``."""
    s_grid = np.asarray(s_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    _check_unit("s", s_grid)
    _check_unit("t", t_grid)
    if not 1 <= factor <= len(estimate.coeff_bases):
        raise ConfigError("factor", f"must be in 1..{len(estimate.coeff_bases)}")
    eta = estimate.coeff_bases[factor - 1].eval(s_grid)
    theta = estimate.theta_basis.eval(t_grid)
    return eta @ estimate.block(factor) @ theta.T


def estimate_sigma(residual_Y: npt.ArrayLike, rank: int) -> NoiseCovariance:
    """Residual covariance ``R'R / (N - rank)``."""
    R = np.atleast_2d(np.asarray(residual_Y, dtype=float))
    dof = R.shape[0] - int(rank)
    if dof <= 0:
        raise EstimationError(
            f"no residual degrees of freedom: N = {R.shape[0]}, rank(Z) = {rank}"
        )
    return NoiseCovariance(R.T @ R / dof)
