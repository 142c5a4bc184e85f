"""Basis systems on the unit interval.

Two families are supported: clamped B-splines of arbitrary degree on
equidistant breakpoints, and the Fourier system orthonormal in L2[0, 1]
(constant, then sqrt(2)-scaled sine/cosine pairs).  Inner products between
any two systems are computed by piecewise Gauss-Legendre quadrature on the
merged breakpoint set, which is exact for B-spline products.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import numpy.typing as npt

from .errors import BasisError, DomainError, UnsupportedFamilyError

__all__ = [
    "Family",
    "BasisSpec",
    "BasisSystem",
    "build_basis",
    "gram",
    "knot_nesting",
]

# Tolerance when clipping evaluation points that are round-off outside [0, 1].
_DOMAIN_EPS = 1e-12
_MIXED_NODES = 16


class Family(str, enum.Enum):
    BSPLINE = "bspline"
    FOURIER = "fourier"

    @classmethod
    def parse(cls, value: str | Family) -> Family:
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"bspline": cls.BSPLINE, "bsplines": cls.BSPLINE, "fourier": cls.FOURIER}
        if key not in aliases:
            raise BasisError("family", f"unknown basis family {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class BasisSpec:
    """Parameters identifying a basis system.

    ``degree`` and ``breakpoints`` apply to B-splines (breakpoints count both
    endpoints), ``size`` applies to Fourier systems.
    """

    family: Family
    degree: int = 0
    breakpoints: int = 2
    size: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family.parse(self.family))
        if self.family is Family.BSPLINE:
            if not _is_int(self.degree) or self.degree < 0:
                raise BasisError("degree", f"must be an integer >= 0, got {self.degree!r}")
            if not _is_int(self.breakpoints) or self.breakpoints < 2:
                raise BasisError(
                    "breakpoints", f"must be an integer >= 2, got {self.breakpoints!r}"
                )
        else:
            if not _is_int(self.size) or self.size < 1:
                raise BasisError("size", f"must be an integer >= 1, got {self.size!r}")

    @classmethod
    def bspline(cls, degree: int, breakpoints: int) -> BasisSpec:
        return cls(Family.BSPLINE, degree=degree, breakpoints=breakpoints)

    @classmethod
    def fourier(cls, size: int) -> BasisSpec:
        return cls(Family.FOURIER, size=size)

    @property
    def dimension(self) -> int:
        if self.family is Family.BSPLINE:
            return self.degree + self.breakpoints - 1
        return self.size

    def breakpoint_values(self) -> np.ndarray:
        """Equidistant breakpoints j/(K-1), j = 0..K-1 (B-splines only)."""
        if self.family is not Family.BSPLINE:
            raise UnsupportedFamilyError("breakpoints are defined for B-spline bases only")
        k = self.breakpoints - 1
        return np.arange(k + 1, dtype=float) / k

    def to_dict(self) -> dict[str, Any]:
        if self.family is Family.BSPLINE:
            return {"family": "bspline", "degree": self.degree, "breakpoints": self.breakpoints}
        return {"family": "fourier", "size": self.size}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BasisSpec:
        if "family" not in data:
            raise BasisError("family", "missing")
        family = Family.parse(data["family"])
        allowed = (
            {"family", "degree", "breakpoints"}
            if family is Family.BSPLINE
            else {"family", "size"}
        )
        unknown = set(data) - allowed
        if unknown:
            raise BasisError(sorted(unknown)[0], f"not a valid key for a {family.value} basis")
        if family is Family.BSPLINE:
            for key in ("degree", "breakpoints"):
                if key not in data:
                    raise BasisError(key, "missing")
            return cls.bspline(data["degree"], data["breakpoints"])
        if "size" not in data:
            raise BasisError("size", "missing")
        return cls.fourier(data["size"])

    def label(self) -> str:
        if self.family is Family.BSPLINE:
            return f"bspline(D={self.degree},K={self.breakpoints})"
        return f"fourier(L={self.size})"


def _is_int(value: object) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


@dataclass(frozen=True, eq=False)
class BasisSystem:
    """An evaluable basis on [0, 1]."""

    spec: BasisSpec
    dimension: int
    knot_vector: np.ndarray = field(repr=False)

    def eval(self, s: npt.ArrayLike) -> np.ndarray:
        """Evaluate every basis function at ``s``.

        A scalar ``s`` gives a vector of length ``dimension``; an array of
        points gives an array of shape ``(len(s), dimension)``.
        """
        pts = np.asarray(s, dtype=float)
        scalar = pts.ndim == 0
        pts = np.atleast_1d(pts).ravel()
        if np.any(~np.isfinite(pts)) or np.any(pts < -_DOMAIN_EPS) or np.any(pts > 1 + _DOMAIN_EPS):
            bad = pts[~((pts >= -_DOMAIN_EPS) & (pts <= 1 + _DOMAIN_EPS))]
            raise DomainError(f"evaluation points must lie in [0, 1]; got {bad[0]!r}")
        pts = np.clip(pts, 0.0, 1.0)
        if self.spec.family is Family.BSPLINE:
            values = _bspline_values(self.knot_vector, self.spec.degree, pts)
        else:
            values = _fourier_values(self.dimension, pts)
        return values[0] if scalar else values

    __call__ = eval

    def breakpoints(self) -> np.ndarray:
        """Distinct points where the basis may lose smoothness."""
        if self.spec.family is Family.BSPLINE:
            return self.spec.breakpoint_values()
        return np.array([0.0, 1.0])

    def combine(self, coefficients: npt.ArrayLike, s: npt.ArrayLike) -> np.ndarray:
        """Evaluate ``sum_k c_k phi_k(s)``; ``coefficients`` may be a stack of rows."""
        coef = np.asarray(coefficients, dtype=float)
        return np.atleast_2d(self.eval(s)) @ coef.T


def build_basis(spec: BasisSpec) -> BasisSystem:
    """Construct the basis system described by ``spec``."""
    if spec.family is Family.BSPLINE:
        d = spec.degree
        bp = spec.breakpoint_values()
        knots = np.concatenate([np.zeros(d), bp, np.ones(d)])
        return BasisSystem(spec, spec.dimension, knots)
    return BasisSystem(spec, spec.size, np.array([0.0, 1.0]))


def _bspline_values(knots: np.ndarray, degree: int, s: np.ndarray) -> np.ndarray:
    # Vectorized Cox-de Boor over the D+1 functions that are nonzero on each span.
    m = len(knots) - degree - 1
    span = np.searchsorted(knots, s, side="right") - 1
    # Right-closed last span so that s = 1 belongs to [t_{m-1}, t_m].
    span = np.clip(span, degree, m - 1)
    n_pts = s.shape[0]
    local = np.zeros((n_pts, degree + 1))
    local[:, 0] = 1.0
    left = np.zeros((n_pts, degree + 1))
    right = np.zeros((n_pts, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = s - knots[span + 1 - j]
        right[:, j] = knots[span + j] - s
        saved = np.zeros(n_pts)
        for r in range(j):
            temp = local[:, r] / (right[:, r + 1] + left[:, j - r])
            local[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        local[:, j] = saved
    out = np.zeros((n_pts, m))
    rows = np.arange(n_pts)
    for r in range(degree + 1):
        out[rows, span - degree + r] = local[:, r]
    return out


def _fourier_values(size: int, s: np.ndarray) -> np.ndarray:
    out = np.empty((s.shape[0], size))
    out[:, 0] = 1.0
    root2 = math.sqrt(2.0)
    for idx in range(1, size):
        freq = (idx + 1) // 2
        arg = 2.0 * math.pi * freq * s
        out[:, idx] = root2 * (np.sin(arg) if idx % 2 == 1 else np.cos(arg))
    return out


def _max_frequency(system: BasisSystem) -> int:
    if system.spec.family is Family.FOURIER:
        return system.dimension // 2
    return 0


def gram(a: BasisSystem, b: BasisSystem) -> np.ndarray:
    """Matrix of inner products ``integral_0^1 a_j(s) b_k(s) ds``.

    Both bases are piecewise smooth between their breakpoints, so the merged
    breakpoint set splits [0, 1] into pieces on which the integrand is a
    single polynomial (or trigonometric) product.
    """
    cuts = np.union1d(a.breakpoints(), b.breakpoints())
    freq = _max_frequency(a) + _max_frequency(b)
    if freq == 0:
        n_nodes = math.ceil((a.spec.degree + b.spec.degree) / 2) + 1
    else:
        n_nodes = _MIXED_NODES
        # Keep each piece below half a period of the fastest oscillation.
        pieces = max(1, 2 * freq)
        cuts = np.union1d(cuts, np.linspace(0.0, 1.0, pieces + 1))
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    lo, hi = cuts[:-1, None], cuts[1:, None]
    half = (hi - lo) / 2.0
    pts = (lo + half * (nodes[None, :] + 1.0)).ravel()
    wts = (half * weights[None, :]).ravel()
    return (a.eval(pts) * wts[:, None]).T @ b.eval(pts)


def knot_nesting(coeff_spec: BasisSpec, factor_spec: BasisSpec) -> bool:
    """True when every coefficient-basis breakpoint is a factor-basis breakpoint."""
    for spec in (coeff_spec, factor_spec):
        if spec.family is not Family.BSPLINE:
            raise UnsupportedFamilyError(
                f"knot nesting is defined for B-spline bases only, got {spec.label()}"
            )
    return (factor_spec.breakpoints - 1) % (coeff_spec.breakpoints - 1) == 0
