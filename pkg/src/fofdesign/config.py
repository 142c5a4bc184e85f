"""YAML run configuration.

Example::

    problem:
      n_runs: 12
      criterion: A
      factors:
        - factor_basis: {family: bspline, degree: 0, breakpoints: 9}
          coeff_basis: {family: bspline, degree: 0, breakpoints: 3}
    exchange:
      random_starts: 1000
      seed: 0
    outputs:
      directory: out
      emit_svg: true

Unknown keys are rejected at every level.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .basis import BasisSpec
from .designmodel import DesignProblem
from .errors import BasisError, ConfigError
from .optimizer import ExchangeConfig
from .simulation import GPNoiseConfig

__all__ = [
    "OutputConfig",
    "AnalysisConfig",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]

_SECTIONS = {"problem", "exchange", "outputs", "noise", "analysis"}


@dataclass(frozen=True)
class OutputConfig:
    directory: Path = Path("out")
    emit_svg: bool = True
    curve_grid_size: int = 201

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> OutputConfig:
        unknown = set(data) - {"directory", "emit_svg", "curve_grid_size"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key in outputs section")
        grid = data.get("curve_grid_size", 201)
        if isinstance(grid, bool) or not isinstance(grid, int) or grid < 2:
            raise ConfigError("curve_grid_size", f"must be an integer >= 2, got {grid!r}")
        emit = data.get("emit_svg", True)
        if not isinstance(emit, bool):
            raise ConfigError("emit_svg", "must be true or false")
        return cls(Path(str(data.get("directory", "out"))), emit, grid)


@dataclass(frozen=True)
class AnalysisConfig:
    """Settings for estimation and the random-vs-optimal comparison."""

    theta_size: int = 7
    n_reps: int = 100
    random_seed: int = 1
    truth_seed: int = 20240601
    truth_basis: BasisSpec = field(default_factory=lambda: BasisSpec.bspline(3, 2))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> AnalysisConfig:
        allowed = {"theta_size", "n_reps", "random_seed", "truth_seed", "truth_basis"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key in analysis section")
        kwargs: dict[str, Any] = {}
        for key in ("theta_size", "n_reps", "random_seed", "truth_seed"):
            if key in data:
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, int) or value < (1 if key in ("theta_size", "n_reps") else 0):
                    raise ConfigError(key, f"must be a non-negative integer, got {value!r}")
                kwargs[key] = value
        if "truth_basis" in data:
            kwargs["truth_basis"] = BasisSpec.from_dict(data["truth_basis"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ExperimentConfig:
    problem: DesignProblem
    exchange: ExchangeConfig = field(default_factory=ExchangeConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    noise: GPNoiseConfig = field(default_factory=GPNoiseConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def with_overrides(
        self,
        *,
        seed: int | None = None,
        starts: int | None = None,
        out: str | None = None,
        criterion: str | None = None,
    ) -> ExperimentConfig:
        cfg = self
        if seed is not None:
            cfg = replace(
                cfg,
                exchange=replace(cfg.exchange, seed=seed),
                noise=replace(cfg.noise, seed=seed),
            )
        if starts is not None:
            cfg = replace(cfg, exchange=replace(cfg.exchange, random_starts=starts))
        if out is not None:
            cfg = replace(cfg, outputs=replace(cfg.outputs, directory=Path(out)))
        if criterion is not None:
            cfg = replace(cfg, problem=replace(cfg.problem, criterion=criterion))
        return cfg


def _section(data: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = data.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(key, "must be a mapping")
    return value


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        On malformed YAML, unknown keys, invalid values, or a problem that
        is not identifiable/estimable (the subclasses IdentifiabilityError
        and EstimabilityError).
    """
    if not text or not text.strip():
        raise ConfigError("config", "empty configuration")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"not valid YAML: {exc}") from None
    if not isinstance(data, Mapping):
        raise ConfigError("config", "top level must be a mapping")
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level section")
    if "problem" not in data:
        raise ConfigError("problem", "missing")
    try:
        problem = DesignProblem.from_dict(_section(data, "problem"))
        exchange = ExchangeConfig.from_dict(dict(_section(data, "exchange")))
        noise = GPNoiseConfig.from_dict(dict(_section(data, "noise")))
    except BasisError as exc:
        raise ConfigError(exc.field, str(exc).split(": ", 1)[-1]) from None
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None
    outputs = OutputConfig.from_dict(_section(data, "outputs"))
    analysis = AnalysisConfig.from_dict(_section(data, "analysis"))
    problem.validate()
    return ExperimentConfig(problem, exchange, outputs, noise, analysis)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_config(text)
