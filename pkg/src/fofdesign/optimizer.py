"""Multi-start coordinate exchange over the entries of the design matrix.

Every start follows the textbook sequential algorithm: draw a random design,
then sweep the (run, coordinate) cells in row-major order, replacing a cell
by the best of ``g`` equispaced levels in ``[-bound, bound]`` when that
strictly improves the criterion.  For speed the starts of one worker are
advanced in lockstep as a batch; the per-start trajectory is identical to a
one-at-a-time run because starts never interact.

Changing one entry of row ``n`` changes row ``n`` of ``Z`` along a fixed
direction (a row of ``J``), a rank-2 update of ``M = Z'Z``.  Candidate values
are screened in O(q^2) each with the Woodbury identity and the matrix
determinant lemma; the winning move is re-evaluated exactly before it is
accepted.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .designmodel import (
    INFEASIBLE,
    RCOND_TOL,
    Criterion,
    Design,
    DesignProblem,
    assemble_J,
    information,
    relative_efficiency,
)
from .errors import ConfigError

__all__ = [
    "ExchangeConfig",
    "SearchResult",
    "random_design",
    "coordinate_exchange",
    "exhaustive_search",
    "BatchRow",
    "optimize_scenario_batch",
]

MAX_REDRAWS = 100


@dataclass(frozen=True)
class ExchangeConfig:
    random_starts: int = 1000
    candidate_levels: int = 21
    max_passes: int = 100
    improvement_tol: float = 1e-10
    seed: int = 0
    refine: bool = False

    def __post_init__(self) -> None:
        if int(self.random_starts) < 1:
            raise ConfigError("random_starts", f"must be >= 1, got {self.random_starts}")
        if int(self.candidate_levels) < 2:
            raise ConfigError("candidate_levels", f"must be >= 2, got {self.candidate_levels}")
        if int(self.max_passes) < 1:
            raise ConfigError("max_passes", f"must be >= 1, got {self.max_passes}")
        if not self.improvement_tol >= 0:
            raise ConfigError("improvement_tol", f"must be >= 0, got {self.improvement_tol}")
        if int(self.seed) < 0:
            raise ConfigError("seed", f"must be an unsigned integer, got {self.seed}")

    def levels(self, bound: float = 1.0) -> np.ndarray:
        return np.linspace(-bound, bound, int(self.candidate_levels))

    def to_dict(self) -> dict:
        return {
            "random_starts": int(self.random_starts),
            "candidate_levels": int(self.candidate_levels),
            "max_passes": int(self.max_passes),
            "improvement_tol": float(self.improvement_tol),
            "seed": int(self.seed),
            "refine": bool(self.refine),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ExchangeConfig:
        allowed = set(cls().to_dict())
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key in exchange section")
        kwargs = dict(data)
        for key in ("random_starts", "candidate_levels", "max_passes", "seed"):
            if key in kwargs:
                kwargs[key] = _as_int(key, kwargs[key])
        if "improvement_tol" in kwargs:
            kwargs["improvement_tol"] = float(kwargs["improvement_tol"])
        if "refine" in kwargs:
            if not isinstance(kwargs["refine"], bool):
                raise ConfigError("refine", "must be true or false")
        return cls(**kwargs)


def _as_int(key: str, value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(key, f"must be an integer, got {value!r}")
    return int(value)


@dataclass
class SearchResult:
    """Outcome of a multi-start search; values are in minimized form (A, or -D)."""

    problem: DesignProblem
    best_design: Design | None
    best_value: float
    best_start: int
    per_start_values: np.ndarray
    passes_used: np.ndarray
    wall_time: float
    traces: list[list[float]] | None = field(default=None, repr=False)

    @property
    def all_infeasible(self) -> bool:
        return self.best_design is None

    @property
    def criterion_value(self) -> float:
        """A-value, or the (positive) D-value for D problems."""
        if self.problem.criterion is Criterion.D:
            return -self.best_value if self.best_design is not None else 0.0
        return self.best_value


def random_design(problem: DesignProblem, rng: np.random.Generator) -> Design:
    """Factor coefficients i.i.d. uniform on ``[-bound, bound]``."""
    b = problem.bound
    coef = rng.uniform(-b, b, size=(problem.n_runs, problem.n_design_cols - 1))
    return Design.from_coefficients(coef)


def _minimized(problem: DesignProblem, eig: np.ndarray) -> np.ndarray:
    """Criterion to minimize from batched eigenvalues of shape (S, q)."""
    top = eig[:, -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rcond = np.where(top > 0, eig[:, 0] / top, 0.0)
        feasible = rcond >= RCOND_TOL
        if problem.criterion is Criterion.A:
            vals = np.where(feasible, np.sum(1.0 / eig, axis=1), INFEASIBLE)
        else:
            vals = np.where(feasible, -np.prod(eig, axis=1), 0.0)
    return vals, feasible


def _initial_designs(
    problem: DesignProblem, J: np.ndarray, seed: int, starts: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    gammas = np.empty((len(starts), problem.n_runs, problem.n_design_cols))
    ok = np.zeros(len(starts), dtype=bool)
    for k, start in enumerate(starts):
        rng = np.random.default_rng(int(seed) ^ int(start))
        for _ in range(MAX_REDRAWS):
            design = random_design(problem, rng)
            gammas[k] = design.gamma
            if information(design, J).feasible:
                ok[k] = True
                break
    return gammas, ok


def _rowdot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sum(x * y, axis=-1)


def _batch_matvec(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Elementwise form keeps each start's arithmetic independent of batch size.
    return np.sum(A * x[:, None, :], axis=-1)


def _screen(
    crit: Criterion,
    Minv: np.ndarray,
    detM: np.ndarray,
    trMinv: np.ndarray,
    a: np.ndarray,
    r: np.ndarray,
    d: np.ndarray,
) -> np.ndarray:
    """Candidate criterion values for ``M + U C U'`` with ``U = [a, r]``.

    ``a`` (S, q) is the current row of Z, ``r`` (q,) the direction of the
    changed coordinate and ``d`` (S, g) the candidate displacements.
    """
    Wa = _batch_matvec(Minv, a)
    Wr = _batch_matvec(Minv, np.broadcast_to(r, a.shape))
    g11 = _rowdot(a, Wa)[:, None]
    g12 = _rowdot(a, Wr)[:, None]
    g22 = _rowdot(np.broadcast_to(r, a.shape), Wr)[:, None]
    d2 = d * d
    k11 = 1.0 + d * g12
    k12 = d * g22
    k21 = d * g11 + d2 * g12
    k22 = 1.0 + d * g12 + d2 * g22
    det_k = k11 * k22 - k12 * k21
    with np.errstate(divide="ignore", invalid="ignore"):
        if crit is Criterion.D:
            vals = -detM[:, None] * det_k
            return np.where(det_k > 1e-14, vals, 0.0)
        h11 = _rowdot(Wa, Wa)[:, None]
        h12 = _rowdot(Wa, Wr)[:, None]
        h22 = _rowdot(Wr, Wr)[:, None]
        ch11 = d * h12
        ch12 = d * h22
        ch21 = d * h11 + d2 * h12
        ch22 = d * h12 + d2 * h22
        reduction = (k22 * ch11 - k12 * ch21 - k21 * ch12 + k11 * ch22) / det_k
        vals = trMinv[:, None] - reduction
        return np.where(det_k > 1e-14, vals, INFEASIBLE)


def _exact_value(problem: DesignProblem, gamma: np.ndarray, J: np.ndarray) -> float:
    summary = information(gamma, J)
    if problem.criterion is Criterion.A:
        return summary.criterion_values["A"]
    return -summary.criterion_values["D"]


def _run_chunk(
    problem: DesignProblem,
    J: np.ndarray,
    config: ExchangeConfig,
    starts: Sequence[int],
    record_trace: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[list[float]]]:
    crit = problem.criterion
    n_runs, n_cols = problem.n_runs, problem.n_design_cols
    levels = config.levels(problem.bound)
    tol = float(config.improvement_tol)
    S = len(starts)

    gammas, ok = _initial_designs(problem, J, config.seed, starts)
    Z = gammas @ J
    M = np.einsum("snq,snr->sqr", Z, Z)
    M = (M + np.swapaxes(M, 1, 2)) / 2.0
    eig, vec = np.linalg.eigh(M)
    vals, feasible = _minimized(problem, eig)
    ok &= feasible
    vals = np.where(ok, vals, INFEASIBLE if crit is Criterion.A else 0.0)
    with np.errstate(divide="ignore"):
        inv_eig = np.where(ok[:, None], 1.0 / eig, 0.0)
    Minv = np.einsum("sqk,sk,srk->sqr", vec, inv_eig, vec)
    detM = np.prod(eig, axis=1)
    trMinv = np.sum(inv_eig, axis=1)

    passes = np.zeros(S, dtype=int)
    active = ok.copy()
    traces: list[list[float]] = [[float(v)] for v in vals] if record_trace else []

    for _ in range(int(config.max_passes)):
        if not active.any():
            break
        passes[active] += 1
        improved = np.zeros(S, dtype=bool)
        for n in range(n_runs):
            for j in range(1, n_cols):
                r = J[j]
                if not np.any(r):
                    continue
                idx = np.flatnonzero(active)
                if idx.size == 0:
                    break
                a = Z[idx, n, :]
                cur = gammas[idx, n, j]
                d = levels[None, :] - cur[:, None]
                cand = _screen(crit, Minv[idx], detM[idx], trMinv[idx], a, r, d)
                best = np.argmin(cand, axis=1)
                best_val = cand[np.arange(idx.size), best]
                base = vals[idx]
                hopeful = best_val < base - tol * np.abs(base)
                if not hopeful.any():
                    continue
                sel = idx[hopeful]
                new_level = levels[best[hopeful]]
                delta = new_level - gammas[sel, n, j]
                Zs = Z[sel].copy()
                Zs[:, n, :] += delta[:, None] * r[None, :]
                Ms = np.einsum("snq,snr->sqr", Zs, Zs)
                Ms = (Ms + np.swapaxes(Ms, 1, 2)) / 2.0
                e, v = np.linalg.eigh(Ms)
                exact, feas = _minimized(problem, e)
                take = feas & (exact < vals[sel] - tol * np.abs(vals[sel]))
                if not take.any():
                    continue
                sel, exact, e, v = sel[take], exact[take], e[take], v[take]
                gammas[sel, n, j] = new_level[take]
                Z[sel] = Zs[take]
                if config.refine:
                    for k, s_idx in enumerate(sel):
                        res = _polish(problem, J, gammas[s_idx], n, j, levels, exact[k], tol)
                        if res is not None:
                            gammas[s_idx, n, j] = res
                            Z[s_idx] = gammas[s_idx] @ J
                            Mk = Z[s_idx].T @ Z[s_idx]
                            e[k], v[k] = np.linalg.eigh((Mk + Mk.T) / 2.0)
                            exact[k] = _minimized(problem, e[k : k + 1])[0][0]
                inv_e = 1.0 / e
                Minv[sel] = np.einsum("sqk,sk,srk->sqr", v, inv_e, v)
                detM[sel] = np.prod(e, axis=1)
                trMinv[sel] = np.sum(inv_e, axis=1)
                vals[sel] = exact
                improved[sel] = True
                if record_trace:
                    for s_idx, value in zip(sel, exact):
                        traces[s_idx].append(float(value))
        active &= improved

    final = np.array(
        [_exact_value(problem, gammas[k], J) if ok[k] else vals[k] for k in range(S)]
    )
    return gammas, final, passes, traces


def _polish(
    problem: DesignProblem,
    J: np.ndarray,
    gamma: np.ndarray,
    n: int,
    j: int,
    levels: np.ndarray,
    current: float,
    tol: float,
) -> float | None:
    step = levels[1] - levels[0]
    x0 = gamma[n, j]
    lo = max(-problem.bound, x0 - step)
    hi = min(problem.bound, x0 + step)
    work = gamma.copy()

    def f(x: float) -> float:
        work[n, j] = x
        value = _exact_value(problem, work, J)
        return value if math.isfinite(value) else 1e300

    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    if res.fun < current - tol * abs(current):
        return float(res.x)
    return None


def coordinate_exchange(
    problem: DesignProblem,
    config: ExchangeConfig | None = None,
    *,
    threads: int = 1,
    record_trace: bool = False,
) -> SearchResult:
    """Best design over ``config.random_starts`` coordinate-exchange runs.

    Start ``i`` draws its random initial design from a generator seeded with
    ``seed ^ i``, so the result does not depend on ``threads``.  Ties between
    starts go to the lowest start index.

    Raises
    ------
    ConfigError
        If the problem fails the identifiability or estimability checks.
    """
    config = config or ExchangeConfig()
    problem.validate()
    J = assemble_J(problem)
    t0 = time.perf_counter()
    all_starts = np.arange(int(config.random_starts))
    chunks = [c for c in np.array_split(all_starts, max(1, int(threads))) if c.size]
    if len(chunks) == 1:
        outputs = [_run_chunk(problem, J, config, chunks[0], record_trace)]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            outputs = list(
                pool.map(lambda c: _run_chunk(problem, J, config, c, record_trace), chunks)
            )
    gammas = np.concatenate([o[0] for o in outputs])
    values = np.concatenate([o[1] for o in outputs])
    passes = np.concatenate([o[2] for o in outputs])
    traces = [t for o in outputs for t in o[3]] if record_trace else None

    finite = np.isfinite(values) & (values != 0.0 if problem.criterion is Criterion.D else True)
    if not np.any(finite):
        best_design, best_value, best_start = None, float(values.min(initial=INFEASIBLE)), -1
    else:
        masked = np.where(finite, values, np.inf)
        best_start = int(np.argmin(masked))
        best_value = float(masked[best_start])
        best_design = Design(gammas[best_start])
    return SearchResult(
        problem=problem,
        best_design=best_design,
        best_value=best_value,
        best_start=best_start,
        per_start_values=values,
        passes_used=passes,
        wall_time=time.perf_counter() - t0,
        traces=traces,
    )


def exhaustive_search(problem: DesignProblem, levels: Iterable[float]) -> tuple[float, Design]:
    """Brute-force minimum of the criterion over every design on a level grid.

    Meant as an independent check on tiny problems: it enumerates
    ``len(levels) ** (N * (cols - 1))`` matrices and evaluates each directly.
    """
    import itertools

    levels = np.asarray(list(levels), dtype=float)
    J = assemble_J(problem)
    free = problem.n_runs * (problem.n_design_cols - 1)
    best_value, best = math.inf, None
    for combo in itertools.product(range(levels.size), repeat=free):
        coef = levels[list(combo)].reshape(problem.n_runs, -1)
        design = Design.from_coefficients(coef)
        value = _exact_value(problem, design.gamma, J)
        if value < best_value:
            best_value, best = value, design
    return best_value, best


@dataclass
class BatchRow:
    problem: DesignProblem
    value: float | None
    efficiency: float | None
    design: Design | None = field(default=None, repr=False)
    wall_time: float = 0.0


def _group_key(problem: DesignProblem) -> tuple:
    return tuple(f.coeff_basis for f in problem.factors)


def optimize_scenario_batch(
    problems: Sequence[DesignProblem],
    config: ExchangeConfig | None = None,
    *,
    threads: int = 1,
) -> list[BatchRow]:
    """Optimize each problem; efficiencies are taken within groups sharing coefficient bases.

    Problems that fail validation produce rows with ``value=None``.
    """
    config = config or ExchangeConfig()
    rows: list[BatchRow] = []
    for problem in problems:
        if not problem.is_feasible():
            rows.append(BatchRow(problem, None, None))
            continue
        result = coordinate_exchange(problem, config, threads=threads)
        if result.all_infeasible:
            rows.append(BatchRow(problem, None, None, wall_time=result.wall_time))
        else:
            rows.append(
                BatchRow(problem, result.criterion_value, None, result.best_design, result.wall_time)
            )
    groups: dict[tuple, list[int]] = {}
    for k, row in enumerate(rows):
        if row.value is not None:
            groups.setdefault(_group_key(row.problem), []).append(k)
    for members in groups.values():
        vals = [rows[k].value for k in members]
        if problems[members[0]].criterion is Criterion.D:
            best = max(vals)
            q = problems[members[0]].n_params
            effs = [(v / best) ** (1.0 / q) for v in vals]
        else:
            effs = relative_efficiency(vals)
        for k, eff in zip(members, effs):
            rows[k].efficiency = eff
    return rows
