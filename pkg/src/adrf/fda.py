"""Functional-data primitives on a shared evaluation grid.

Curves are discretized on one common grid; all integrals are trapezoidal
quadrature on that grid.  The principal component decomposition works on
the quadrature-weighted covariance matrix so that the returned
eigenfunctions are orthonormal in the quadrature inner product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyInputError, GridMismatchError, ParameterError

# Eigenvalues below EIGENVALUE_FLOOR * lambda_1 are treated as exact zeros:
# 1/lambda_j enters every downstream slope estimator.
EIGENVALUE_FLOOR = 1e-10


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Trapezoidal quadrature weights for an increasing point sequence."""
    d = np.diff(points)
    w = np.zeros_like(points)
    w[:-1] += d / 2.0
    w[1:] += d / 2.0
    return w


@dataclass(frozen=True)
class Grid:
    """Strictly increasing evaluation points with trapezoidal weights."""

    points: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 3:
            raise ParameterError("grid needs at least 3 one-dimensional points")
        if not np.all(np.isfinite(pts)):
            raise DataError("grid points must be finite")
        if not np.all(np.diff(pts) > 0):
            raise GridMismatchError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)
        if self.weights is None:
            object.__setattr__(self, "weights", trapezoid_weights(pts))
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != pts.shape or np.any(w <= 0):
                raise ParameterError("quadrature weights must be positive, one per point")
            length = pts[-1] - pts[0]
            if abs(w.sum() - length) > 1e-12 * max(length, 1.0):
                raise ParameterError("quadrature weights must sum to the interval length")
            object.__setattr__(self, "weights", w)
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Grid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.points.size, float(self.points[0]), float(self.points[-1])))

    @staticmethod
    def uniform(a: float, b: float, m: int) -> "Grid":
        return Grid(np.linspace(a, b, m))


@dataclass(frozen=True)
class FunctionalSample:
    """One curve: evaluations of a function on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise GridMismatchError("curve length does not match its grid")
        if not np.all(np.isfinite(v)):
            raise DataError("curve values must be finite")
        object.__setattr__(self, "values", v)
        self.values.setflags(write=False)


def _require_same_grid(*objs):
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid != g:
            raise GridMismatchError("operands live on different grids")
    return g


def inner_product(f: FunctionalSample, g: FunctionalSample) -> float:
    """Quadrature inner product ::int f(t) g(t) dt:: on the shared grid."""
    grid = _require_same_grid(f, g)
    return float(np.dot(f.values * g.values, grid.weights))


def l2_norm(f: FunctionalSample) -> float:
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def mean_function(samples: list[FunctionalSample]) -> FunctionalSample:
    """Pointwise mean curve of a nonempty list sharing one grid."""
    if not samples:
        raise EmptyInputError("cannot average an empty list of curves")
    grid = _require_same_grid(*samples)
    vals = np.mean([s.values for s in samples], axis=0)
    return FunctionalSample(grid, vals)


def stack(samples: list[FunctionalSample]) -> tuple[Grid, np.ndarray]:
    """Validate a common grid and return curves as an (n, m) matrix."""
    if not samples:
        raise EmptyInputError("no curves supplied")
    grid = _require_same_grid(*samples)
    return grid, np.vstack([s.values for s in samples])


@dataclass(frozen=True)
class FpcaModel:
    """Empirical mean, eigenvalues, eigenfunctions and in-sample scores."""

    mean: FunctionalSample
    eigenvalues: np.ndarray  # (J,) nonincreasing, clamped at zero
    phi: np.ndarray          # (J, m) rows orthonormal under quadrature
    scores: np.ndarray       # (n, J)

    @property
    def grid(self) -> Grid:
        return self.mean.grid

    @property
    def n_components(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def n_positive(self) -> int:
        """Number of retained eigenpairs with a strictly positive eigenvalue."""
        return int(np.sum(self.eigenvalues > 0))

    @property
    def eigenfunctions(self) -> list[FunctionalSample]:
        return [FunctionalSample(self.grid, row) for row in self.phi]

    def mean_projections(self, q: int | None = None) -> np.ndarray:
        """<phi_j, mean> for j = 1..q under quadrature."""
        q = self.n_components if q is None else q
        w = self.grid.weights
        return self.phi[:q] @ (w * self.mean.values)


def fpca_from_matrix(grid: Grid, z: np.ndarray, max_components: int) -> FpcaModel:
    """FPCA of the rows of ``z`` (curves on ``grid``), matrix fast path."""
    z = np.asarray(z, dtype=float)
    n, m = z.shape
    if n < 2:
        raise ParameterError("FPCA needs at least two curves")
    if not np.all(np.isfinite(z)):
        raise DataError("curves contain non-finite values")
    if not (1 <= max_components <= min(n, m)):
        raise ParameterError(
            f"max_components must lie in [1, {min(n, m)}], got {max_components}"
        )
    w = grid.weights
    mu = z.mean(axis=0)
    zc = z - mu
    cov = (zc.T @ zc) / n
    sw = np.sqrt(w)
    sym = sw[:, None] * cov * sw[None, :]
    evals, evecs = np.linalg.eigh(sym)
    order = np.argsort(evals)[::-1][:max_components]
    lam = evals[order]
    vecs = evecs[:, order]
    # Back-transform to quadrature-orthonormal eigenfunctions.
    phi = (vecs / sw[:, None]).T
    lam = np.where(lam > EIGENVALUE_FLOOR * max(lam[0], 0.0), lam, 0.0)
    lam = np.maximum(lam, 0.0)
    # Deterministic sign: the entry of largest magnitude is positive.
    flip = np.sign(phi[np.arange(phi.shape[0]), np.argmax(np.abs(phi), axis=1)])
    flip[flip == 0] = 1.0
    phi = phi * flip[:, None]
    scores = zc @ (phi * w[None, :]).T
    return FpcaModel(
        mean=FunctionalSample(grid, mu),
        eigenvalues=lam,
        phi=phi,
        scores=scores,
    )


def fpca(samples: list[FunctionalSample], max_components: int) -> FpcaModel:
    """Empirical covariance eigendecomposition of a curve sample."""
    grid, z = stack(samples)
    return fpca_from_matrix(grid, z, max_components)


def pc_scores(model: FpcaModel, z: FunctionalSample) -> np.ndarray:
    """Scores <z - mean, phi_j> of one curve under a fitted model."""
    if z.grid != model.grid:
        raise GridMismatchError("curve is not on the model grid")
    return pc_scores_matrix(model, z.values[None, :])[0]


def pc_scores_matrix(model: FpcaModel, z: np.ndarray) -> np.ndarray:
    """Scores of the rows of an (n, m) curve matrix on the model grid."""
    w = model.grid.weights
    return (np.asarray(z, dtype=float) - model.mean.values) @ (model.phi * w[None, :]).T
