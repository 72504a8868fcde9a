"""Covariate standardization and the orthonormalized Legendre basis.

Covariates are mapped to [-1, 1] by their training range, expanded in
standard Legendre polynomials coordinate by coordinate, and the resulting
design is orthonormalized against the empirical (1/n) inner product.  The
triangular change of basis is kept so new points can be evaluated in the
same coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CollinearityError, DegenerateCovariateError, ParameterError

# Held-out standardized covariates may fall outside the training range;
# polynomial extrapolation is capped here.
CLIP_RANGE = (-1.5, 1.5)


@dataclass(frozen=True)
class Standardizer:
    """Affine map of each covariate to [-1, 1] by its training range."""

    x_min: np.ndarray
    x_max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.x_min, dtype=float)
        hi = np.asarray(self.x_max, dtype=float)
        if np.any(hi <= lo):
            raise DegenerateCovariateError("constant covariate column: max == min")
        object.__setattr__(self, "x_min", lo)
        object.__setattr__(self, "x_max", hi)

    def transform(self, x: np.ndarray, clip: bool = True) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        st = 2.0 * (x - self.x_min) / (self.x_max - self.x_min) - 1.0
        if clip:
            st = np.clip(st, CLIP_RANGE[0], CLIP_RANGE[1])
        return st


def standardize(x: np.ndarray) -> tuple[np.ndarray, Standardizer]:
    """Map training covariates onto [-1, 1] coordinatewise."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] < 2:
        raise ParameterError("standardization needs at least two rows")
    std = Standardizer(x.min(axis=0), x.max(axis=0))
    return std.transform(x, clip=False), std


def raw_legendre_design(x_st: np.ndarray, k: int) -> np.ndarray:
    """Columns: constant 1, then P_l of each coordinate, l = 1..(k-1)/p."""
    x_st = np.atleast_2d(np.asarray(x_st, dtype=float))
    n, p = x_st.shape
    # k = 1 (constant basis only) is allowed for the degenerate weight case.
    if k < 1 or (k - 1) % p != 0:
        raise ParameterError(f"basis size k={k} needs (k-1)/p a nonnegative integer (p={p})")
    degree = (k - 1) // p
    cols = [np.ones(n)]
    # legvander gives P_0..P_degree per coordinate; drop the constant column.
    for ell in range(1, degree + 1):
        for j in range(p):
            cols.append(np.polynomial.legendre.Legendre.basis(ell)(x_st[:, j]))
    return np.column_stack(cols)


def orthonormalize(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormalize columns under the empirical (1/n) inner product.

    Returns (matrix, transform) with matrix = raw @ transform and
    (1/n) matrix.T @ matrix = I.  The QR diagonal reveals collinear columns.
    """
    n, k = raw.shape
    q, r = scipy.linalg.qr(raw / np.sqrt(n), mode="economic")
    diag = np.abs(np.diag(r))
    tol = max(n, k) * np.finfo(float).eps * max(diag.max(), 1.0)
    bad = np.where(diag < tol)[0]
    if bad.size:
        raise CollinearityError(
            f"raw sieve design is rank deficient at column {int(bad[0])}"
        )
    # Positive diagonal makes the factor (and signs) deterministic.
    signs = np.sign(np.diag(r))
    r = r * signs[:, None]
    transform = scipy.linalg.solve_triangular(r, np.eye(k))
    return raw @ transform, transform


@dataclass(frozen=True)
class SieveDesign:
    """Orthonormalized Legendre design with its evaluation recipe."""

    k: int
    matrix: np.ndarray          # (n, k), (1/n) M'M = I
    transform: np.ndarray       # (k, k) raw -> orthonormal change of basis
    standardizer: Standardizer | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Basis rows nu_k(x) at new covariate points (clipped to the
        training-range-extrapolation cap before Legendre evaluation)."""
        if self.standardizer is not None:
            st = self.standardizer.transform(x, clip=True)
        else:
            st = np.clip(np.atleast_2d(np.asarray(x, dtype=float)), *CLIP_RANGE)
        return raw_legendre_design(st, self.k) @ self.transform


def sieve_design(x_st: np.ndarray, k: int, standardizer: Standardizer | None = None) -> SieveDesign:
    """Build the orthonormalized sieve design from standardized covariates."""
    x_st = np.atleast_2d(np.asarray(x_st, dtype=float))
    n = x_st.shape[0]
    if k > n / 2:
        raise ParameterError(f"basis size k={k} exceeds n/2={n / 2:g}")
    raw = raw_legendre_design(x_st, k)
    matrix, transform = orthonormalize(raw)
    return SieveDesign(k=k, matrix=matrix, transform=transform, standardizer=standardizer)


def design_from_covariates(x: np.ndarray, k: int) -> SieveDesign:
    """standardize + sieve_design in one step (training data path)."""
    x_st, std = standardize(x)
    return sieve_design(x_st, k, std)
