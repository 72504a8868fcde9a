"""Dataset and fit serialization.

Curves travel in a plain CSV whose first row is the grid and each later
row one curve; covariates and outcome in a headered CSV aligned row by
row.  Fits are JSON documents with the slope curve as (t, value) pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import AlignmentError, DataError, ParameterError, ParseError
from .estimators import AdrfFit
from .fda import FunctionalSample, Grid


@dataclass(frozen=True)
class DatasetFiles:
    """Paths and column mapping for a dataset stored on disk."""

    curves_path: str
    table_path: str
    outcome: str
    covariates: tuple

    def __post_init__(self):
        if not self.covariates:
            raise ParameterError("at least one covariate column is required")
        object.__setattr__(self, "covariates", tuple(self.covariates))


def _parse_float(token: str, path: str, line: int, col: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"{path}:{line}:{col + 1}: not a number: {token!r}") from None
    if not math.isfinite(v):
        raise DataError(f"{path}:{line}:{col + 1}: non-finite value {token!r}")
    return v


def _open(path: str, mode: str):
    try:
        return open(path, mode, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None


def _read_csv_rows(path: str) -> list[list[str]]:
    with _open(path, "r") as fh:
        rows = [line.strip() for line in fh]
    return [r.split(",") for r in rows if r]


def load_curves(path: str) -> tuple[Grid, np.ndarray]:
    """First row: grid points; each later row: one curve."""
    rows = _read_csv_rows(path)
    if len(rows) < 2:
        raise ParseError(f"{path}: need a grid row and at least one curve row")
    grid_vals = [_parse_float(t, path, 1, j) for j, t in enumerate(rows[0])]
    grid = Grid(np.array(grid_vals))
    m = len(grid_vals)
    curves = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != m:
            raise ParseError(f"{path}:{i}: expected {m} values, found {len(row)}")
        curves.append([_parse_float(t, path, i, j) for j, t in enumerate(row)])
    return grid, np.array(curves)


def load_dataset(files: DatasetFiles) -> Dataset:
    """Validated dataset from a curve file and an aligned covariate table."""
    grid, z = load_curves(files.curves_path)
    rows = _read_csv_rows(files.table_path)
    if len(rows) < 2:
        raise ParseError(f"{files.table_path}: need a header row and data rows")
    header = [h.strip() for h in rows[0]]
    for name in (files.outcome, *files.covariates):
        if name not in header:
            raise ParseError(f"{files.table_path}: missing column {name!r}")
    width = len(header)
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(
                f"{files.table_path}:{i}: expected {width} values, found {len(row)}"
            )
        data.append([_parse_float(t, files.table_path, i, j) for j, t in enumerate(row)])
    table = np.array(data)
    if table.shape[0] != z.shape[0]:
        raise AlignmentError(
            f"row counts disagree: {z.shape[0]} curves vs {table.shape[0]} table rows"
        )
    y = table[:, header.index(files.outcome)]
    x = table[:, [header.index(c) for c in files.covariates]]
    return Dataset(grid, z, x, y)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_dataset(dataset: Dataset, files: DatasetFiles) -> None:
    """Inverse of load_dataset; numbers keep 17 significant digits."""
    with _open(files.curves_path, "w") as fh:
        fh.write(",".join(_fmt(t) for t in dataset.grid.points) + "\n")
        for row in dataset.z:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    with _open(files.table_path, "w") as fh:
        fh.write(",".join((*files.covariates, files.outcome)) + "\n")
        for xi, yi in zip(dataset.x, dataset.y):
            fh.write(",".join([_fmt(v) for v in xi] + [_fmt(yi)]) + "\n")


def write_fit(fit: AdrfFit, path: str) -> None:
    """JSON document: intercept, optional theta, tuning, slope samples."""
    doc = {
        "method": fit.method,
        "a_hat": _fmt(fit.a_hat),
        "theta_hat": None if fit.theta_hat is None else [_fmt(v) for v in fit.theta_hat],
        "tuning": {k: (v if not isinstance(v, float) else _fmt(v)) for k, v in fit.tuning.items()},
        "b_coeffs": [_fmt(v) for v in fit.b_coeffs],
        "b_curve": [[_fmt(t), _fmt(v)] for t, v in zip(fit.b_curve.grid.points, fit.b_curve.values)],
    }
    with _open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


@dataclass(frozen=True)
class LoadedFit:
    """Reloaded fit: enough to evaluate the dose-response at new curves."""

    method: str
    a_hat: float
    theta_hat: np.ndarray | None
    tuning: dict
    b_coeffs: np.ndarray
    b_curve: FunctionalSample


def read_fit(path: str) -> LoadedFit:
    with _open(path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid fit document: {exc}") from None
    try:
        pairs = np.array([[float(t), float(v)] for t, v in doc["b_curve"]])
        grid = Grid(pairs[:, 0])
        return LoadedFit(
            method=doc["method"],
            a_hat=float(doc["a_hat"]),
            theta_hat=None if doc["theta_hat"] is None else np.array(
                [float(v) for v in doc["theta_hat"]]
            ),
            tuning=doc.get("tuning", {}),
            b_coeffs=np.array([float(v) for v in doc["b_coeffs"]]),
            b_curve=FunctionalSample(grid, pairs[:, 1]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed fit document: {exc}") from None


def eval_loaded_fit(fit: LoadedFit, z: FunctionalSample) -> float:
    """a_hat + <b_hat, z> for a reloaded fit."""
    from .errors import GridMismatchError

    if z.grid != fit.b_curve.grid:
        raise GridMismatchError("curve is not on the fit's grid")
    w = z.grid.weights
    return float(fit.a_hat + np.dot(fit.b_curve.values * z.values, w))
