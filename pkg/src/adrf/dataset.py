"""Observation container: (covariates X, outcome Y, treatment curve Z)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DataError
from .fda import FunctionalSample, Grid


@dataclass(frozen=True)
class Dataset:
    """n observations of (X in R^p, Y in R, Z a curve on a shared grid)."""

    grid: Grid
    z: np.ndarray  # (n, m) curve evaluations
    x: np.ndarray  # (n, p)
    y: np.ndarray  # (n,)

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.z, dtype=float))
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if z.shape[1] != len(self.grid):
            raise AlignmentError("curve matrix width does not match the grid")
        if not (z.shape[0] == x.shape[0] == y.shape[0]):
            raise AlignmentError(
                f"row counts disagree: z={z.shape[0]}, x={x.shape[0]}, y={y.shape[0]}"
            )
        for name, arr in (("z", z), ("x", x), ("y", y)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"non-finite entries in {name}")
        for name, arr in (("z", z), ("x", x), ("y", y)):
            arr.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def curve(self, i: int) -> FunctionalSample:
        return FunctionalSample(self.grid, self.z[i])

    def curves(self) -> list[FunctionalSample]:
        return [FunctionalSample(self.grid, row) for row in self.z]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.grid, self.z[idx], self.x[idx], self.y[idx])
