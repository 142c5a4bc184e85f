"""CSV and SVG artifacts.

Floats are written with ``repr`` so that every CSV reads back bit-for-bit.
"""

from __future__ import annotations

import csv
import html
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .designmodel import Design, DesignProblem
from .estimation import CoefficientEstimate, FunctionalDataset

__all__ = [
    "write_design_csv",
    "read_design_csv",
    "design_curves",
    "write_curves_csv",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_surface_csv",
    "write_estimate_csv",
    "write_rows_csv",
    "read_rows_csv",
    "write_svg_lines",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_for_write(path: str | Path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _open_for_read(path: str | Path):
    path = Path(path)
    try:
        return path.open(newline="")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def write_design_csv(path: str | Path, design: Design, problem: DesignProblem) -> Path:
    """One row per run; the intercept column is implied and not written."""
    design.check(problem)
    with _open_for_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(problem.column_names())
        for row in design.coefficients:
            w.writerow([_fmt(v) for v in row])
    return Path(path)


def read_design_csv(path: str | Path, problem: DesignProblem | None = None) -> Design:
    with _open_for_read(path) as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty design file")
    header, body = rows[0], rows[1:]
    if problem is not None and header != problem.column_names():
        raise ValueError(f"{path}: header {header} does not match the problem's columns")
    design = Design.from_coefficients([[float(v) for v in r] for r in body if r])
    if problem is not None:
        design.check(problem)
    return design


def design_curves(design: Design, problem: DesignProblem, grid: np.ndarray) -> list[np.ndarray]:
    """Run curves ``x_ni(s)`` per factor, each of shape (N, len(grid))."""
    out = []
    for sl, basis in zip(problem.factor_slices(), problem.factor_systems()):
        out.append(design.gamma[:, sl] @ basis.eval(grid).T)
    return out


def write_curves_csv(
    path: str | Path, design: Design, problem: DesignProblem, grid_size: int = 201
) -> Path:
    grid = np.linspace(0.0, 1.0, grid_size)
    curves = design_curves(design, problem, grid)
    header = ["s"] + [
        f"x{i + 1}_run{n + 1}" for i, c in enumerate(curves) for n in range(c.shape[0])
    ]
    stacked = np.vstack([grid[None, :]] + curves).T
    with _open_for_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in stacked:
            w.writerow([_fmt(v) for v in row])
    return Path(path)


def write_dataset_csv(path: str | Path, dataset: FunctionalDataset) -> Path:
    """First row is the grid, then one row of responses per run."""
    return write_matrix_csv(path, np.vstack([dataset.grid, dataset.responses]))


def read_dataset_csv(path: str | Path) -> FunctionalDataset:
    data = read_matrix_csv(path)
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need a grid row and at least one response row")
    return FunctionalDataset(data[0], data[1:])


def write_matrix_csv(path: str | Path, matrix: np.ndarray, header: Sequence[str] | None = None) -> Path:
    matrix = np.atleast_2d(matrix)
    with _open_for_write(path) as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(list(header))
        for row in matrix:
            w.writerow([_fmt(v) for v in row])
    return Path(path)


def read_matrix_csv(path: str | Path, header: bool = False) -> np.ndarray:
    with _open_for_read(path) as fh:
        rows = [r for r in csv.reader(fh) if r]
    if header:
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no numeric rows")
    return np.array([[float(v) for v in r] for r in rows])


def write_surface_csv(
    path: str | Path, surface: np.ndarray, s_grid: np.ndarray, t_grid: np.ndarray
) -> Path:
    """Header row holds ``t`` values, first column holds ``s`` values."""
    with _open_for_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(["s\\t"] + [_fmt(t) for t in t_grid])
        for s, row in zip(s_grid, surface):
            w.writerow([_fmt(s)] + [_fmt(v) for v in row])
    return Path(path)


def write_estimate_csv(path: str | Path, estimate: CoefficientEstimate) -> Path:
    header = [f"theta{l + 1}" for l in range(estimate.theta_basis.dimension)]
    return write_matrix_csv(path, estimate.B_hat, header)


def write_rows_csv(path: str | Path, rows: Iterable[Mapping[str, object]], fields: Sequence[str]) -> Path:
    with _open_for_write(path) as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields))
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fields})
    return Path(path)


def read_rows_csv(path: str | Path) -> list[dict[str, str]]:
    with _open_for_read(path) as fh:
        return list(csv.DictReader(fh))


def write_svg_lines(
    path: str | Path,
    x: np.ndarray,
    lines: Sequence[np.ndarray],
    *,
    y_range: tuple[float, float] | None = None,
    title: str = "",
    width: int = 640,
    height: int = 400,
) -> Path:
    """Plain SVG with one polyline per entry of ``lines``."""
    pad = 40
    x = np.asarray(x, dtype=float)
    if y_range is None:
        lo = min(float(np.min(l)) for l in lines)
        hi = max(float(np.max(l)) for l in lines)
        span = hi - lo or 1.0
        y_range = (lo - 0.05 * span, hi + 0.05 * span)
    y0, y1 = y_range
    x0, x1 = float(x.min()), float(x.max())

    def px(xv: np.ndarray) -> np.ndarray:
        return pad + (xv - x0) / (x1 - x0) * (width - 2 * pad)

    def py(yv: np.ndarray) -> np.ndarray:
        return height - pad - (np.clip(yv, y0, y1) - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#888"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle" font-size="14">'
        f"{html.escape(title)}</text>",
        f'<text x="{pad - 4}" y="{py(np.array(y1)):.1f}" text-anchor="end" font-size="10">{y1:g}</text>',
        f'<text x="{pad - 4}" y="{py(np.array(y0)):.1f}" text-anchor="end" font-size="10">{y0:g}</text>',
    ]
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
    for k, line in enumerate(lines):
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x), py(np.asarray(line, dtype=float))))
        parts.append(
            f'<polyline fill="none" stroke="{palette[k % len(palette)]}" '
            f'stroke-width="1.2" points="{pts}"/>'
        )
    parts.append("</svg>")
    with _open_for_write(path) as fh:
        fh.write("\n".join(parts) + "\n")
    return Path(path)
