"""Command-line entry point.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 infeasible
problem, 4 reproduction outside tolerance.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fileio
from .basis import build_basis, BasisSpec
from .config import ExperimentConfig, load_config
from .designmodel import Design, assemble_J, information
from .errors import ConfigError, EstimabilityError, EstimationError, IdentifiabilityError
from .estimation import beta_surface, estimate_sigma, fit, project_responses, residuals
from .optimizer import coordinate_exchange, random_design
from .scenarios import ROW_FIELDS, run_reproduction
from .simulation import compare_designs, default_truth, simulate_responses

log = logging.getLogger("fofdesign")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_ACCEPTANCE = 4

RECORD_FIELDS = (
    "id", "epochs", "Runs", "X family", "X degree", "X breaks",
    "B family", "B degree", "B breaks", "design", "criterion",
)


class _Infeasible(Exception):
    pass


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", type=Path, required=config_required, help="YAML run configuration")
    p.add_argument("--seed", type=int, help="override every seed in the configuration")
    p.add_argument("--starts", type=int, help="number of random starts")
    p.add_argument("--out", help="output directory")
    p.add_argument("--criterion", choices=["A", "D"], help="optimality criterion")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the search")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fofdesign",
        description="Optimal designs for function-on-function linear models with dynamic factors.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="search for an optimal design")
    _add_common(p)

    p = sub.add_parser("evaluate", help="criterion values of a design CSV")
    _add_common(p)
    p.add_argument("--design", type=Path, required=True)

    p = sub.add_parser("simulate", help="simulate functional responses for a design")
    _add_common(p)
    p.add_argument("--design", type=Path, help="design CSV (default: a random design)")

    p = sub.add_parser("estimate", help="fit the coefficient from a response dataset")
    _add_common(p)
    p.add_argument("--design", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)

    p = sub.add_parser("compare", help="random vs optimal design estimation error")
    _add_common(p)
    p.add_argument("--reps", type=int, help="number of replicates")
    p.add_argument("--design", type=Path, help="optimal design CSV (default: search)")

    p = sub.add_parser("reproduce-table", help="recompute a benchmark table")
    p.add_argument("table", choices=["1", "2", "3", "scenario3"])
    _add_common(p, config_required=False)
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(
        seed=args.seed, starts=args.starts, out=args.out, criterion=args.criterion
    )


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary(design: Design, cfg: ExperimentConfig) -> dict:
    info = information(design, assemble_J(cfg.problem))
    vals = info.criterion_values
    return {
        "criterion": cfg.problem.criterion.value,
        "A": None if not np.isfinite(vals["A"]) else vals["A"],
        "D": vals["D"],
        "feasible": bool(info.feasible),
        "reciprocal_condition": info.reciprocal_condition,
    }


def _emit_design(design: Design, cfg: ExperimentConfig, out: Path) -> list[Path]:
    problem = cfg.problem
    paths = [
        fileio.write_design_csv(out / "design.csv", design, problem),
        fileio.write_curves_csv(out / "curves.csv", design, problem, cfg.outputs.curve_grid_size),
    ]
    if cfg.outputs.emit_svg:
        grid = np.linspace(0.0, 1.0, cfg.outputs.curve_grid_size)
        for i, curves in enumerate(fileio.design_curves(design, problem, grid), start=1):
            b = problem.bound * 1.05
            paths.append(
                fileio.write_svg_lines(
                    out / f"design_x{i}.svg", grid, list(curves), y_range=(-b, b),
                    title=f"factor {i}: {problem.factors[i - 1].factor_basis.label()}",
                )
            )
    return paths


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = _load(args)
    result = coordinate_exchange(cfg.problem, cfg.exchange, threads=args.threads)
    if result.all_infeasible:
        raise _Infeasible("every random start was infeasible")
    out = _out_dir(cfg)
    _emit_design(result.best_design, cfg, out)
    report = {
        **_summary(result.best_design, cfg),
        "best_value": result.criterion_value,
        "best_start": result.best_start,
        "random_starts": cfg.exchange.random_starts,
        "mean_passes": float(np.mean(result.passes_used)),
        "wall_time_s": result.wall_time,
        "problem": cfg.problem.to_dict(),
        "exchange": cfg.exchange.to_dict(),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"{cfg.problem.criterion.value}-value {result.criterion_value:.6g} "
          f"({cfg.exchange.random_starts} starts, {result.wall_time:.1f}s) -> {out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    design = fileio.read_design_csv(args.design, cfg.problem)
    print(json.dumps(_summary(design, cfg), indent=2))
    return EXIT_OK


def _truth(cfg: ExperimentConfig):
    a = cfg.analysis
    return default_truth(len(cfg.problem.factors), a.truth_seed, a.truth_basis)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.design is not None:
        design = fileio.read_design_csv(args.design, cfg.problem)
    else:
        design = random_design(cfg.problem, np.random.default_rng(cfg.analysis.random_seed))
    data = simulate_responses(design, _truth(cfg), cfg.problem, cfg.noise)
    out = _out_dir(cfg)
    fileio.write_dataset_csv(out / "dataset.csv", data)
    if args.design is None:
        fileio.write_design_csv(out / "design.csv", design, cfg.problem)
    if cfg.outputs.emit_svg:
        fileio.write_svg_lines(out / "responses.svg", data.grid, list(data.responses),
                               title="simulated responses")
    print(f"simulated {data.n_runs} responses on {data.grid.size} points -> {out}")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    design = fileio.read_design_csv(args.design, cfg.problem)
    data = fileio.read_dataset_csv(args.data)
    if data.n_runs != design.n_runs:
        raise ConfigError("data", f"{data.n_runs} responses for a {design.n_runs}-run design")
    theta = build_basis(BasisSpec.fourier(cfg.analysis.theta_size))
    Z = design.gamma @ assemble_J(cfg.problem)
    Y = project_responses(data, theta)
    est = fit(Z, Y, theta, cfg.problem.coeff_systems())
    out = _out_dir(cfg)
    fileio.write_estimate_csv(out / "B_hat.csv", est)
    grid = np.linspace(0.0, 1.0, 101)
    for i in range(1, len(cfg.problem.factors) + 1):
        fileio.write_surface_csv(out / f"beta{i}_surface.csv", beta_surface(est, i, grid, grid),
                                 grid, grid)
    rank = Z.shape[1]
    if data.n_runs > rank:
        sigma = estimate_sigma(residuals(Z, Y, est), rank)
        fileio.write_matrix_csv(out / "sigma.csv", sigma.sigma)
    print(f"estimated {est.B_hat.shape[0]}x{est.B_hat.shape[1]} coefficient matrix -> {out}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _load(args)
    optimal = fileio.read_design_csv(args.design, cfg.problem) if args.design else None
    reps = args.reps if args.reps is not None else cfg.analysis.n_reps
    report = compare_designs(
        cfg.analysis.random_seed, cfg.problem, _truth(cfg), cfg.noise, reps,
        theta_size=cfg.analysis.theta_size, optimal_design=optimal, exchange=cfg.exchange,
    )
    out = _out_dir(cfg)
    fileio.write_rows_csv(out / "ise.csv", report.rows(), ["replicate", "ise_random", "ise_optimal"])
    fileio.write_design_csv(out / "optimal_design.csv", report.optimal_design, cfg.problem)
    summary = {
        "n_reps": reps,
        "mean_ise_random": report.mean_random,
        "mean_ise_optimal": report.mean_optimal,
        "ratio": report.ratio,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if cfg.outputs.emit_svg:
        rng = np.random.default_rng([cfg.analysis.random_seed, 0])
        rnd = random_design(cfg.problem, rng)
        truth = _truth(cfg)
        for name, design in (("random", rnd), ("optimal", report.optimal_design)):
            data = simulate_responses(design, truth, cfg.problem, cfg.noise)
            fileio.write_svg_lines(out / f"responses_{name}.svg", data.grid,
                                   list(data.responses), title=f"{name} design responses")
    print(f"mean ISE random {report.mean_random:.4g}, optimal {report.mean_optimal:.4g} "
          f"(ratio {report.ratio:.3f}) -> {out}")
    return EXIT_OK


def _record(k: int, cell, epochs: int) -> dict:
    row: dict = {"id": k, "epochs": epochs, "Runs": cell.problem.n_runs}
    for prefix, attr in (("X", "factor_basis"), ("B", "coeff_basis")):
        specs = [getattr(f, attr) for f in cell.problem.factors]
        row[f"{prefix} family"] = ";".join(s.family.value for s in specs)
        row[f"{prefix} degree"] = ";".join(str(s.degree) for s in specs)
        row[f"{prefix} breaks"] = ";".join(str(s.breakpoints) for s in specs)
    if cell.design is None:
        row["design"], row["criterion"] = "NONE", None
    else:
        row["design"] = json.dumps(cell.design.coefficients.tolist())
        row["criterion"] = repr(cell.computed)
    return row


def cmd_reproduce(args: argparse.Namespace) -> int:
    from dataclasses import replace

    from .optimizer import ExchangeConfig

    cfg_exchange = load_config(args.config).exchange if args.config else ExchangeConfig()
    if args.seed is not None:
        cfg_exchange = replace(cfg_exchange, seed=args.seed)
    if args.starts is not None:
        cfg_exchange = replace(cfg_exchange, random_starts=args.starts)
    report = run_reproduction(args.table, cfg_exchange, threads=args.threads)
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    rows = [c.as_row() for c in report.cells]
    fileio.write_rows_csv(out / f"table_{args.table}.csv", rows, ROW_FIELDS)
    fileio.write_rows_csv(
        out / f"designs_{args.table}.csv",
        [_record(k, c, cfg_exchange.random_starts) for k, c in enumerate(report.cells)],
        RECORD_FIELDS,
    )
    for row in rows:
        vals = "  ".join(f"{k}={'-' if row[k] is None else row[k]}" for k in
                         ("X breaks", "B breaks", "A-opt", "efficiency", "published A-opt",
                          "deviation", "pass"))
        print(vals)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"table {args.table}: {verdict} -> {out}")
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


COMMANDS = {
    "optimize": cmd_optimize,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "compare": cmd_compare,
    "reproduce-table": cmd_reproduce,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", UserWarning)
            return COMMANDS[args.command](args)
    except (IdentifiabilityError, EstimabilityError, _Infeasible) as exc:
        print(f"infeasible problem: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
