import textwrap

import pytest

from fofdesign.config import ExperimentConfig, load_config, parse_config
from fofdesign.designmodel import Criterion
from fofdesign.errors import ConfigError, IdentifiabilityError

SCENARIO1 = textwrap.dedent(
    """
    problem:
      n_runs: 12
      factors:
        - factor_basis: {family: bspline, degree: 0, breakpoints: 9}
          coeff_basis: {family: bspline, degree: 0, breakpoints: 3}
    exchange:
      random_starts: 200
      seed: 4
    """
)


def test_scenario_config_is_valid():
    cfg = parse_config(SCENARIO1)
    assert cfg.problem.n_runs == 12
    assert cfg.exchange.random_starts == 200
    assert cfg.problem.criterion is Criterion.A
    assert cfg.outputs.curve_grid_size == 201


def test_identifiability_violation():
    text = SCENARIO1.replace("degree: 0, breakpoints: 9", "degree: 0, breakpoints: 3").replace(
        "coeff_basis: {family: bspline, degree: 0, breakpoints: 3}",
        "coeff_basis: {family: bspline, degree: 0, breakpoints: 5}",
    )
    with pytest.raises(IdentifiabilityError) as exc:
        parse_config(text)
    assert "identifiab" in str(exc.value)


@pytest.mark.parametrize("text", ["", "   \n", "[1, 2]", "problem: {n_runs: 12"])
def test_malformed(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize(
    "patch, field",
    [
        ("exchange:\n  epochs: 3\n", "epochs"),
        ("outputs:\n  color: red\n", "color"),
        ("noise:\n  sigma: 1\n", "sigma"),
        ("extra: 1\n", "extra"),
        ("analysis:\n  n_reps: 0\n", "n_reps"),
    ],
)
def test_unknown_or_bad_keys_rejected(patch, field):
    base = SCENARIO1.split("exchange:")[0]
    with pytest.raises(ConfigError) as exc:
        parse_config(base + patch)
    assert exc.value.field == field


def test_bad_basis_field_is_named():
    with pytest.raises(ConfigError) as exc:
        parse_config(SCENARIO1.replace("degree: 0, breakpoints: 9", "degree: -2, breakpoints: 9"))
    assert exc.value.field == "degree"


def test_overrides():
    cfg = parse_config(SCENARIO1).with_overrides(seed=9, starts=3, out="x", criterion="D")
    assert cfg.exchange.seed == 9 and cfg.noise.seed == 9
    assert cfg.exchange.random_starts == 3
    assert str(cfg.outputs.directory) == "x"
    assert cfg.problem.criterion is Criterion.D


def test_load_config(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(SCENARIO1)
    assert isinstance(load_config(path), ExperimentConfig)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
