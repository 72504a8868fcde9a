"""Stabilized balancing weights for a functional treatment.

For each observation i the weight is parametrized as rho'(eta' nu_k(X))
where eta maximizes a strictly concave kernel-localized dual objective.
The first-order conditions are the kernel-weighted sieve moment equations
that calibrate the weighted covariate moments in a neighbourhood of Z_i
to their unlocalized sample means.

The solver is a damped Newton iteration with backtracking line search,
vectorized across observations: all local problems share the neighbor
design matrix and differ only in their kernel column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import Dataset
from .errors import ConvergenceError, ParameterError
from .fda import FunctionalSample, stack
from .sieve import SieveDesign, design_from_covariates

WEIGHT_CLIP = (1e-3, 1e3)
GRAD_TOL = 1e-8
MAX_ITER = 100


@dataclass(frozen=True)
class RhoFamily:
    """Strictly increasing, strictly concave criterion rho with derivatives.

    ``domain_low`` bounds the admissible argument v = eta' nu(x) from below
    (only the empirical-likelihood family is restricted), and
    ``uniform_arg`` is the v solving rho'(v) = 1, the uniform-weight start.
    """

    tag: str
    rho: Callable[[np.ndarray], np.ndarray]
    rho_prime: Callable[[np.ndarray], np.ndarray]
    rho_pprime: Callable[[np.ndarray], np.ndarray]
    domain_low: float
    uniform_arg: float
    # Cheap second derivative and value given the first (saves an exp or
    # log per Newton iteration).
    pprime_from_prime: Callable[[np.ndarray], np.ndarray] = None
    rho_from_prime: Callable[[np.ndarray], np.ndarray] = None


_FAMILIES = {
    "exponential-tilting": RhoFamily(
        tag="exponential-tilting",
        rho=lambda v: -np.exp(-v - 1.0),
        rho_prime=lambda v: np.exp(-v - 1.0),
        rho_pprime=lambda v: -np.exp(-v - 1.0),
        domain_low=-np.inf,
        uniform_arg=-1.0,
        pprime_from_prime=lambda p: -p,
        rho_from_prime=lambda p: -p,
    ),
    "empirical-likelihood": RhoFamily(
        tag="empirical-likelihood",
        rho=lambda v: np.log(v) + 1.0,
        rho_prime=lambda v: 1.0 / v,
        rho_pprime=lambda v: -1.0 / v**2,
        domain_low=0.0,
        uniform_arg=1.0,
        pprime_from_prime=lambda p: -(p**2),
        rho_from_prime=lambda p: 1.0 - np.log(p),
    ),
    "continuous-updating": RhoFamily(
        tag="continuous-updating",
        rho=lambda v: -0.5 * (1.0 - v) ** 2,
        rho_prime=lambda v: 1.0 - v,
        rho_pprime=lambda v: -np.ones_like(v),
        domain_low=-np.inf,
        uniform_arg=0.0,
        pprime_from_prime=lambda p: -np.ones_like(p),
        rho_from_prime=lambda p: -0.5 * p**2,
    ),
}


def rho_family(tag: str = "exponential-tilting") -> RhoFamily:
    try:
        return _FAMILIES[tag]
    except KeyError:
        raise ParameterError(
            f"unknown rho family {tag!r}; choose from {sorted(_FAMILIES)}"
        ) from None


def l2_distance_matrix(z: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Pairwise quadrature L2 distances between the rows of ``z``."""
    z = np.asarray(z, dtype=float)
    gram = (z * weights[None, :]) @ z.T
    sq = np.diag(gram)
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def pairwise_distances(samples: list[FunctionalSample]) -> np.ndarray:
    """Symmetric matrix of L2 distances between curves on a common grid."""
    grid, z = stack(samples)
    return l2_distance_matrix(z, grid.weights)


def gaussian_kernel(dist: np.ndarray, h: float) -> np.ndarray:
    """K(u) = exp(-u^2) evaluated at dist / h; h = inf gives flat weights."""
    if not h > 0:
        raise ParameterError("bandwidth h must be positive")
    if np.isinf(h):
        return np.ones_like(dist)
    return np.exp(-((dist / h) ** 2))


@dataclass
class DualDiagnostics:
    """Per-problem solver outcome."""

    grad_norm: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray


def solve_dual_batch(
    design: np.ndarray,
    kernel: np.ndarray,
    targets: np.ndarray,
    rho: RhoFamily,
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
    eta0: np.ndarray | None = None,
) -> tuple[np.ndarray, DualDiagnostics]:
    """Maximize all B local dual objectives at once.

    design : (N, k) sieve rows of the neighbor points.
    kernel : (N, B) nonnegative kernel weights, one column per problem;
             zero entries drop a neighbor (e.g. the point itself).
    targets: (B, k) unlocalized sample moments to calibrate against.

    Returns eta (B, k) and diagnostics.  Damped Newton: the Hessian is
    negative definite, a ridge (escalating from 1e-10 by factors of 10) is
    subtracted only if factorization fails, and backtracking enforces
    ascent plus domain feasibility for the empirical-likelihood family.
    """
    design = np.asarray(design, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n, k = design.shape
    b = kernel.shape[1]
    ksum = kernel.sum(axis=0)
    if np.any(ksum <= 0):
        raise ParameterError("every local problem needs positive total kernel mass")
    kn = kernel / ksum[None, :]

    if eta0 is not None:
        eta = np.array(eta0, dtype=float, copy=True)
        if eta.shape != (b, k):
            raise ParameterError("warm start eta0 has wrong shape")
    else:
        # Uniform-weight start along the constant direction of the basis.
        eta = np.zeros((b, k))
        col0 = design[:, 0]
        if np.allclose(col0, col0[0]) and col0[0] != 0:
            eta[:, 0] = rho.uniform_arg / col0[0]

    # Outer products reused by every Hessian assembly.
    vv = (design[:, :, None] * design[:, None, :]).reshape(n, k * k)

    grad_norm = np.full(b, np.inf)
    iterations = np.zeros(b, dtype=int)
    need = np.ones(b, dtype=bool)  # still iterating (not converged, not stalled)

    def objective(kn_cols, m_cols, eta_cols, tgt_cols):
        # Overflowing trial points evaluate to -inf/nan and are rejected.
        with np.errstate(over="ignore", invalid="ignore"):
            return np.einsum("nb,nb->b", kn_cols, rho.rho(m_cols)) - np.einsum(
                "bk,bk->b", eta_cols, tgt_cols
            )

    m_all = design @ eta.T  # (N, B)
    for _ in range(max_iter):
        cols = np.where(need)[0]
        if cols.size == 0:
            break
        kn_act = kn[:, cols]
        m_act = m_all[:, cols]
        with np.errstate(over="ignore"):
            prime = rho.rho_prime(m_act)
        grad = (kn_act * prime).T @ design - targets[cols]
        gn = np.abs(grad).max(axis=1)
        grad_norm[cols] = gn
        done = gn <= tol
        if done.any():
            need[cols[done]] = False
            keep = ~done
            if not keep.any():
                continue
            cols = cols[keep]
            kn_act = kn_act[:, keep]
            m_act = m_act[:, keep]
            prime = prime[:, keep]
            grad = grad[keep]
            gn = gn[keep]
        iterations[cols] += 1
        tgt_act = targets[cols]
        eta_act = eta[cols]
        g_act = grad
        # Inside the quadratic basin the Armijo gain falls below float
        # resolution of the objective; accept the full Newton step there.
        pure = gn <= 1e-5

        if rho.pprime_from_prime is not None:
            wgt = rho.pprime_from_prime(prime) * kn_act
        else:
            wgt = rho.rho_pprime(m_act) * kn_act  # (N, Ba), nonpositive
        hess = (wgt.T @ vv).reshape(-1, k, k)
        step = _newton_step(hess, g_act)

        # Backtracking line search on the (concave) objective.
        if rho.rho_from_prime is not None:
            f_cur = np.einsum("nb,nb->b", kn_act, rho.rho_from_prime(prime)) - np.einsum(
                "bk,bk->b", eta_act, tgt_act
            )
        else:
            f_cur = objective(kn_act, m_act, eta_act, tgt_act)
        slope = np.einsum("bk,bk->b", g_act, step)
        t = np.ones(len(cols))
        accepted = np.zeros(len(cols), dtype=bool)
        new_eta = eta_act.copy()
        new_m = m_act.copy()
        for _ls in range(50):
            pend = np.where(~accepted)[0]
            if pend.size == 0:
                break
            trial = eta_act[pend] + t[pend, None] * step[pend]
            m_trial = design @ trial.T  # (N, Bp)
            feasible = np.ones(pend.size, dtype=bool)
            if np.isfinite(rho.domain_low):
                mask = kn_act[:, pend] > 0
                low = np.where(mask, m_trial, np.inf).min(axis=0)
                feasible = low > rho.domain_low + 1e-12
            f_trial = np.full(pend.size, -np.inf)
            if feasible.any():
                fi = np.where(feasible)[0]
                f_trial[fi] = objective(
                    kn_act[:, pend[fi]], m_trial[:, fi], trial[fi], tgt_act[pend[fi]]
                )
            ok = feasible & (
                (f_trial >= f_cur[pend] + 1e-4 * t[pend] * slope[pend])
                | (pure[pend] & (t[pend] == 1.0) & np.isfinite(f_trial))
            )
            good = pend[ok]
            new_eta[good] = trial[ok]
            new_m[:, good] = m_trial[:, ok]
            accepted[good] = True
            t[pend[~ok]] *= 0.5
        # A rejected step or one below float resolution cannot improve: stop.
        moved = t * np.abs(step).max(axis=1)
        scale = 1.0 + np.abs(eta_act).max(axis=1)
        stall_now = ~accepted | (moved <= 1e-13 * scale)
        if stall_now.any():
            need[cols[stall_now]] = False
        eta[cols] = new_eta
        m_all[:, cols] = new_m

    with np.errstate(over="ignore"):
        grad = (kn * rho.rho_prime(m_all)).T @ design - targets
    grad_norm = np.abs(grad).max(axis=1)
    converged = grad_norm <= tol
    return eta, DualDiagnostics(grad_norm=grad_norm, iterations=iterations, converged=converged)


def _newton_step(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve -H s = g with escalating ridge damping on failure."""
    k = hess.shape[-1]
    eye = np.eye(k)
    ridge = 0.0
    for _ in range(16):
        try:
            step = np.linalg.solve(-(hess - ridge * eye), grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            ridge = 1e-10 if ridge == 0.0 else ridge * 10.0
            continue
        if np.all(np.isfinite(step)):
            return step
        ridge = 1e-10 if ridge == 0.0 else ridge * 10.0
    raise ConvergenceError("Newton step failed: Hessian damping exhausted")


def _design_matrix(design) -> np.ndarray:
    return design.matrix if isinstance(design, SieveDesign) else np.asarray(design, float)


def fit_local_weight(
    i: int,
    distances: np.ndarray,
    design,
    h: float,
    rho: RhoFamily | str = "exponential-tilting",
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
) -> tuple[np.ndarray, DualDiagnostics]:
    """Solve the local dual at observation i over its leave-one-out set."""
    if isinstance(rho, str):
        rho = rho_family(rho)
    nu = _design_matrix(design)
    n = nu.shape[0]
    if not 0 <= i < n:
        raise ParameterError(f"index {i} out of range for n={n}")
    kern = gaussian_kernel(np.asarray(distances, float)[:, i], h).copy()
    kern[i] = 0.0
    mask = np.arange(n) != i
    target = nu[mask].mean(axis=0)
    eta, diag = solve_dual_batch(nu, kern[:, None], target[None, :], rho, tol, max_iter)
    if not diag.converged[0]:
        raise ConvergenceError(
            f"local dual at index {i} did not converge "
            f"(gradient sup-norm {diag.grad_norm[0]:.3e})",
            grad_norm=float(diag.grad_norm[0]),
            index=i,
        )
    return eta[0], diag


@dataclass(frozen=True)
class WeightFit:
    """Per-observation stabilized weights with solver diagnostics."""

    pi: np.ndarray            # (n,) clipped weights
    eta: np.ndarray           # (n, k) local dual solutions
    h: float
    k: int
    rho: str
    grad_norms: np.ndarray    # (n,) gradient sup-norms at the solutions
    iterations: np.ndarray
    converged: np.ndarray
    clipped: np.ndarray       # (n,) True where pi hit the clip range

    @property
    def n(self) -> int:
        return self.pi.size


def loo_dual_batch(
    design_matrix: np.ndarray,
    kernel: np.ndarray,
    rho: RhoFamily,
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
    eta0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, DualDiagnostics]:
    """All leave-one-out duals for a precomputed kernel (zero diagonal).

    Returns (pi_raw, eta, diagnostics): pi_raw[i] = rho'(eta_i' nu_i),
    unclipped.
    """
    nu = np.asarray(design_matrix, float)
    n = nu.shape[0]
    col_sum = nu.sum(axis=0)
    targets = (col_sum[None, :] - nu) / (n - 1)  # leave-one-out means
    eta, diag = solve_dual_batch(nu, kernel, targets, rho, tol, max_iter, eta0=eta0)
    raw = rho.rho_prime(np.einsum("ik,ik->i", eta, nu))
    return raw, eta, diag


def estimate_weights_from_parts(
    design: SieveDesign,
    distances: np.ndarray,
    h: float,
    rho: RhoFamily,
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
    failure_fraction: float = 0.05,
) -> WeightFit:
    """All-i weight estimation given a prebuilt design and distance matrix."""
    nu = design.matrix
    n = nu.shape[0]
    kern = gaussian_kernel(np.asarray(distances, float), h).copy()
    np.fill_diagonal(kern, 0.0)
    raw, eta, diag = loo_dual_batch(nu, kern, rho, tol, max_iter)
    n_fail = int(np.sum(~diag.converged))
    if n_fail > failure_fraction * n:
        worst = int(np.argmax(diag.grad_norm))
        raise ConvergenceError(
            f"{n_fail}/{n} local weight problems failed to converge "
            f"(worst gradient sup-norm {diag.grad_norm[worst]:.3e} at index {worst})",
            grad_norm=float(diag.grad_norm[worst]),
            index=worst,
        )
    pi = np.clip(raw, WEIGHT_CLIP[0], WEIGHT_CLIP[1])
    clipped = pi != raw
    return WeightFit(
        pi=pi,
        eta=eta,
        h=float(h),
        k=design.k,
        rho=rho.tag,
        grad_norms=diag.grad_norm,
        iterations=diag.iterations,
        converged=diag.converged,
        clipped=clipped,
    )


def estimate_weights(
    dataset: Dataset,
    h: float,
    k: int,
    rho: RhoFamily | str = "exponential-tilting",
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
) -> WeightFit:
    """Stabilized weights at every sample point of a dataset."""
    if isinstance(rho, str):
        rho = rho_family(rho)
    design = design_from_covariates(dataset.x, k)
    dist = l2_distance_matrix(dataset.z, dataset.grid.weights)
    return estimate_weights_from_parts(design, dist, h, rho, tol, max_iter)


def holdout_weights(
    design: SieveDesign,
    z_train: np.ndarray,
    grid_weights: np.ndarray,
    z_new: np.ndarray,
    x_new: np.ndarray,
    h: float,
    rho: RhoFamily,
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
) -> tuple[np.ndarray, DualDiagnostics]:
    """Weights at held-out points: local duals centered at new curves over
    the training neighbors, evaluated at the new covariates."""
    z_train = np.asarray(z_train, float)
    z_new = np.atleast_2d(np.asarray(z_new, float))
    sq_train = (z_train**2) @ grid_weights
    sq_new = (z_new**2) @ grid_weights
    cross = (z_train * grid_weights[None, :]) @ z_new.T
    d2 = sq_train[:, None] + sq_new[None, :] - 2.0 * cross
    np.maximum(d2, 0.0, out=d2)
    kern = gaussian_kernel(np.sqrt(d2), h)  # (N_train, B)
    target = design.matrix.mean(axis=0)
    targets = np.tile(target, (z_new.shape[0], 1))
    eta, diag = solve_dual_batch(design.matrix, kern, targets, rho, tol, max_iter)
    nu_new = design.evaluate(x_new)
    raw = rho.rho_prime(np.einsum("ik,ik->i", eta, nu_new))
    pi = np.clip(raw, WEIGHT_CLIP[0], WEIGHT_CLIP[1])
    return pi, diag
