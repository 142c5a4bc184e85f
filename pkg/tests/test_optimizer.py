import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fofdesign.basis import BasisSpec
from fofdesign.designmodel import (
    Criterion,
    Design,
    DesignProblem,
    FactorSpec,
    assemble_J,
    criterion,
    information,
)
from fofdesign.errors import ConfigError, IdentifiabilityError
from fofdesign.optimizer import (
    ExchangeConfig,
    _screen,
    coordinate_exchange,
    exhaustive_search,
    optimize_scenario_batch,
    random_design,
)

SMALL = ExchangeConfig(random_starts=50, seed=7)


def test_random_design_support_and_determinism():
    p = DesignProblem.single(12, (1, 9), (2, 3))
    a = random_design(p, np.random.default_rng(3))
    b = random_design(p, np.random.default_rng(3))
    assert a == b
    assert np.all(np.abs(a.coefficients) <= 1.0)
    np.testing.assert_array_equal(a.gamma[:, 0], 1.0)


def test_random_design_mean_oracle():
    p = DesignProblem.single(10, (0, 11), (0, 3))
    rng = np.random.default_rng(0)
    draws = np.stack([random_design(p, rng).coefficients for _ in range(10_000 // 100)])
    # 10^4 entries per column; sd of the mean is sqrt(1/3)/100.
    assert abs(draws.mean()) < 0.02
    assert draws.var() == pytest.approx(1 / 3, rel=0.05)


def test_config_validation():
    for kwargs in (dict(random_starts=0), dict(candidate_levels=1), dict(max_passes=0), dict(seed=-1)):
        with pytest.raises(ConfigError):
            ExchangeConfig(**kwargs)
    with pytest.raises(ConfigError):
        ExchangeConfig.from_dict({"epochs": 10})
    cfg = ExchangeConfig(random_starts=5, refine=True)
    assert ExchangeConfig.from_dict(cfg.to_dict()) == cfg
    np.testing.assert_allclose(ExchangeConfig().levels(), np.round(np.arange(-10, 11) / 10, 12))


def test_infeasible_problem_rejected_before_search():
    with pytest.raises(IdentifiabilityError):
        coordinate_exchange(DesignProblem.single(12, (0, 3), (0, 5)), SMALL)


def test_all_starts_infeasible():
    # The factor block of M is ~1e-14 of the intercept entry: below the rcond floor.
    p = DesignProblem.single(12, (0, 3), (0, 3), bound=1e-7)
    res = coordinate_exchange(p, ExchangeConfig(random_starts=5))
    assert res.all_infeasible
    assert res.best_design is None


def test_orthogonal_optimum_small_grid():
    p = DesignProblem.single(12, (0, 3), (0, 3))
    res = coordinate_exchange(p, SMALL)
    assert res.criterion_value == pytest.approx(0.75, rel=1e-12)
    assert res.best_value == pytest.approx(np.min(res.per_start_values))
    assert criterion(p, res.best_design) == pytest.approx(res.best_value, rel=1e-12)


def test_single_interval_matches_exhaustive_search():
    p = DesignProblem.single(2, (0, 2), (0, 2))
    cfg = ExchangeConfig(random_starts=50, candidate_levels=21)
    with pytest.warns(UserWarning):
        res = coordinate_exchange(p, cfg)
    value, _ = exhaustive_search(p, cfg.levels())
    assert res.best_value == value


@pytest.mark.parametrize("crit", ["A", "D"])
def test_thread_count_does_not_change_result(crit):
    p = DesignProblem.single(12, (1, 9), (2, 3), crit)
    cfg = ExchangeConfig(random_starts=24, seed=11)
    r1 = coordinate_exchange(p, cfg, threads=1)
    r3 = coordinate_exchange(p, cfg, threads=3)
    r5 = coordinate_exchange(p, cfg, threads=5)
    for r in (r3, r5):
        np.testing.assert_array_equal(r.per_start_values, r1.per_start_values)
        np.testing.assert_array_equal(r.passes_used, r1.passes_used)
        assert r.best_design == r1.best_design
        assert r.best_start == r1.best_start


def test_start_trajectory_independent_of_batch():
    # A start's trajectory depends only on seed ^ start, not on its batch mates.
    p = DesignProblem.single(12, (1, 5), (1, 3))
    full = coordinate_exchange(p, ExchangeConfig(random_starts=8, seed=5))
    alone = coordinate_exchange(p, ExchangeConfig(random_starts=1, seed=5))
    assert alone.per_start_values[0] == full.per_start_values[0]


@pytest.mark.parametrize("crit", ["A", "D"])
def test_traces_strictly_decrease(crit):
    p = DesignProblem.single(12, (1, 9), (0, 5), crit)
    res = coordinate_exchange(p, ExchangeConfig(random_starts=10), record_trace=True)
    for trace in res.traces:
        assert all(b < a for a, b in zip(trace, trace[1:]))
        assert trace[-1] == pytest.approx(res.per_start_values[res.traces.index(trace)], rel=1e-9)


def test_zero_degree_box_saturation():
    p = DesignProblem.single(12, (0, 9), (0, 5))
    res = coordinate_exchange(p, SMALL)
    assert np.all(np.max(np.abs(res.best_design.coefficients), axis=1) == 1.0)


def test_refine_never_worse_than_grid():
    p = DesignProblem.single(12, (1, 15), (2, 5))
    grid = coordinate_exchange(p, ExchangeConfig(random_starts=10, seed=2))
    polished = coordinate_exchange(p, ExchangeConfig(random_starts=10, seed=2, refine=True))
    assert polished.best_value <= grid.best_value * (1 + 1e-9)
    assert np.all(np.abs(polished.best_design.coefficients) <= 1.0)


def test_d_criterion_returns_positive_determinant():
    p = DesignProblem.single(12, (0, 3), (0, 3), "D")
    res = coordinate_exchange(p, SMALL)
    # det(diag(12, 3, 3)) is the D-optimum on the +/-1 grid.
    assert res.criterion_value == pytest.approx(108.0, rel=1e-12)
    assert res.best_value == pytest.approx(-108.0, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["A", "D"]))
def test_rank_two_screen_matches_direct_evaluation(seed, crit):
    rng = np.random.default_rng(seed)
    p = DesignProblem.single(7, (int(rng.integers(0, 3)), 6), (int(rng.integers(0, 2)), 3), crit)
    J = assemble_J(p)
    d = random_design(p, rng)
    n, j = int(rng.integers(0, 7)), int(rng.integers(1, p.n_design_cols))
    levels = np.linspace(-1, 1, 9)
    info = information(d, J)
    Minv = np.linalg.inv(info.M)
    delta = levels - d.gamma[n, j]
    screened = _screen(
        Criterion.parse(crit), Minv[None], np.array([np.linalg.det(info.M)]),
        np.array([np.trace(Minv)]), info.Z[None, n], J[j], delta[None],
    )[0]
    for k, level in enumerate(levels):
        g = d.gamma.copy()
        g[n, j] = level
        exact = criterion(p, Design(g))
        if np.isfinite(exact) and abs(exact) > 1e-8:
            assert screened[k] == pytest.approx(exact, rel=1e-7)


def test_batch_efficiencies_grouped_by_coefficient_basis():
    problems = [DesignProblem.single(12, (0, k), (0, kb)) for kb in (3, 5) for k in (3, 5, 9)]
    rows = optimize_scenario_batch(problems, ExchangeConfig(random_starts=30))
    assert rows[3].value is None and rows[3].efficiency is None
    for group in (rows[:3], rows[4:]):
        best = min(r.value for r in group)
        for r in group:
            assert r.efficiency == pytest.approx(best / r.value)
    assert [r.efficiency for r in rows[:3]] == [1.0, 1.0, 1.0]


def test_batch_single_problem():
    rows = optimize_scenario_batch([DesignProblem.single(12, (1, 5), (1, 3))], SMALL)
    assert len(rows) == 1 and rows[0].efficiency == 1.0


def test_two_factor_problem_runs():
    p = DesignProblem(
        12,
        (
            FactorSpec(BasisSpec.bspline(0, 5), BasisSpec.bspline(0, 3)),
            FactorSpec(BasisSpec.bspline(2, 9), BasisSpec.bspline(1, 3)),
        ),
    )
    res = coordinate_exchange(p, ExchangeConfig(random_starts=20))
    assert np.isfinite(res.best_value)
    assert res.best_design.gamma.shape == (12, 1 + 4 + 10)


def test_exhaustive_search_small_d_problem():
    p = DesignProblem.single(3, (0, 2), (0, 2), "D")
    value, design = exhaustive_search(p, [-1, 0, 1])
    # Best is two runs at one extreme and one at the other: det = 3*3 - 1 = 8.
    assert value == pytest.approx(-8.0)
    assert criterion(p, design) == value
