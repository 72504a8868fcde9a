"""L-fold cross-validation losses and joint grid search over (h, k, q).

Each loss refits everything on the training folds only: the PC basis, the
covariate standardizer, the sieve transform and the weights.  Held-out
weights solve a fresh local dual centered at the held-out curve over the
training-fold neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import AdrfError, ConvergenceError, FoldSizeError, ParameterError
from .estimators import conditional_mean, dr_pseudo_outcome, fit_or, truncated_flr
from .fda import FpcaModel, fpca_from_matrix, pc_scores_matrix
from .sieve import design_from_covariates
from .weights import (
    RhoFamily,
    estimate_weights_from_parts,
    holdout_weights,
    l2_distance_matrix,
    rho_family,
)


@dataclass(frozen=True)
class CvConfig:
    """Fold count, candidate grids, fold-assignment seed and rho family."""

    h_grid: tuple
    k_grid: tuple
    q_grid: tuple
    n_folds: int = 10
    seed: int = 0
    rho: str = "exponential-tilting"

    def __post_init__(self):
        if self.n_folds < 2:
            raise ParameterError("cross validation needs at least 2 folds")
        for name, grid in (("h", self.h_grid), ("k", self.k_grid), ("q", self.q_grid)):
            if len(grid) == 0:
                raise ParameterError(f"empty {name} candidate grid")
        object.__setattr__(self, "h_grid", tuple(float(h) for h in self.h_grid))
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        object.__setattr__(self, "q_grid", tuple(int(q) for q in self.q_grid))


def default_config(dataset: Dataset, n_folds: int = 10, seed: int = 0,
                   rho: str = "exponential-tilting") -> CvConfig:
    """Paper-free defaults: bandwidths scaled by the median pairwise
    distance, sieve sizes (p+1, 2p+1, 3p+1), truncations 1..8."""
    dist = l2_distance_matrix(dataset.z, dataset.grid.weights)
    med = float(np.median(dist[np.triu_indices(dataset.n, k=1)]))
    if med <= 0:
        med = 1.0
    p = dataset.p
    return CvConfig(
        h_grid=tuple(c * med for c in (0.25, 0.5, 1.0, 2.0)),
        k_grid=(p + 1, 2 * p + 1, 3 * p + 1),
        q_grid=tuple(range(1, 9)),
        n_folds=n_folds,
        seed=seed,
        rho=rho,
    )


def make_folds(n: int, n_folds: int, seed: int) -> list[np.ndarray]:
    """Random disjoint cover of 0..n-1 with sizes differing by at most 1."""
    if n_folds < 2 or n_folds > n:
        raise ParameterError(f"fold count {n_folds} invalid for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, n_folds)]


def _check_fold_k(n_train: int, k: int):
    if k > n_train / 2:
        raise FoldSizeError(f"training fold of size {n_train} too small for k={k}")


def _q_max(qs, n_train: int, m: int) -> int:
    q_hi = max(qs)
    if q_hi > min(n_train, m):
        raise ParameterError(f"q={q_hi} exceeds the rank bound min(n, m)")
    return q_hi


def _fsw_residual_pieces(dataset, folds, h, k, qs, rho, fpca_by_fold=None):
    """Held-out squared-residual sums of the weighted regression, per q.

    Returns (losses, errors); a q that fails its rank check on some fold
    gets loss nan and an error string, other q's are unaffected.
    """
    losses = np.zeros(len(qs))
    errors: list[str | None] = [None] * len(qs)
    for f_idx, te in enumerate(folds):
        tr = np.setdiff1d(np.arange(dataset.n), te)
        _check_fold_k(tr.size, k)
        train = dataset.subset(tr)
        model = (
            fpca_by_fold[f_idx]
            if fpca_by_fold is not None
            else fpca_from_matrix(
                dataset.grid, train.z, min(_q_max(qs, tr.size, len(dataset.grid)), tr.size)
            )
        )
        design = design_from_covariates(train.x, k)
        dist = l2_distance_matrix(train.z, dataset.grid.weights)
        wf = estimate_weights_from_parts(design, dist, h, rho)
        pi_te, _ = holdout_weights(
            design, train.z, dataset.grid.weights, dataset.z[te], dataset.x[te], h, rho
        )
        scores_te = pc_scores_matrix(model, dataset.z[te])
        mu_proj = model.mean_projections()
        r_train = train.y * wf.pi
        for q_idx, q in enumerate(qs):
            if errors[q_idx] is not None:
                continue
            try:
                a, b = truncated_flr(r_train, model, q)
            except AdrfError as exc:
                losses[q_idx] = np.nan
                errors[q_idx] = f"{exc.category}: {exc}"
                continue
            fitted = a + (mu_proj[:q] + scores_te[:, :q]) @ b
            resid = dataset.y[te] * pi_te - fitted
            losses[q_idx] += float(resid @ resid)
    return losses, errors


def cv_loss_fsw(dataset: Dataset, h: float, k: int, q: int, folds,
                rho: RhoFamily | str = "exponential-tilting") -> float:
    """Sum of held-out squared residuals of the weighted regression."""
    if isinstance(rho, str):
        rho = rho_family(rho)
    losses, errors = _fsw_residual_pieces(dataset, folds, h, k, [q], rho)
    if errors[0] is not None:
        raise ParameterError(errors[0])
    return float(losses[0])


def cv_loss_or(dataset: Dataset, q: int, folds) -> float:
    """Sum of held-out squared residuals of the partially linear model."""
    loss = 0.0
    for te in folds:
        tr = np.setdiff1d(np.arange(dataset.n), te)
        train = dataset.subset(tr)
        model = fpca_from_matrix(dataset.grid, train.z, _q_max([q], tr.size, len(dataset.grid)))
        fit = fit_or(train, model, q)
        scores_te = pc_scores_matrix(model, dataset.z[te])
        mu_proj = model.mean_projections(q)
        fitted = fit.a_hat + (mu_proj + scores_te[:, :q]) @ fit.b_coeffs
        resid = dataset.y[te] - fitted - dataset.x[te] @ fit.theta_hat
        loss += float(resid @ resid)
    return loss


def cv_loss_dr(dataset: Dataset, h: float, k: int, q: int, folds,
               rho: RhoFamily | str = "exponential-tilting") -> float:
    """Sum of held-out squared residuals of the doubly robust regression.

    The held-out pseudo-outcome averages the fitted conditional mean over
    the held-out fold's covariates only.
    """
    if isinstance(rho, str):
        rho = rho_family(rho)
    loss = 0.0
    w = dataset.grid.weights
    for te in folds:
        tr = np.setdiff1d(np.arange(dataset.n), te)
        _check_fold_k(tr.size, k)
        train = dataset.subset(tr)
        model = fpca_from_matrix(dataset.grid, train.z, _q_max([q], tr.size, len(dataset.grid)))
        design = design_from_covariates(train.x, k)
        dist = l2_distance_matrix(train.z, w)
        wf = estimate_weights_from_parts(design, dist, h, rho)
        or_fit = fit_or(train, model, q)
        r_train = dr_pseudo_outcome(train, or_fit, wf.pi)
        a, b = truncated_flr(r_train, model, q)
        pi_te, _ = holdout_weights(design, train.z, w, dataset.z[te], dataset.x[te], h, rho)
        e_te = conditional_mean(or_fit, dataset.x[te], dataset.z[te], w).ravel()
        x_bar_te = dataset.x[te].mean(axis=0)
        zpart_te = dataset.z[te] @ (or_fit.b_curve.values * w)
        avg_term = or_fit.a_hat + zpart_te + x_bar_te @ or_fit.theta_hat
        pseudo = (dataset.y[te] - e_te) * pi_te + avg_term
        scores_te = pc_scores_matrix(model, dataset.z[te])
        mu_proj = model.mean_projections(q)
        resid = pseudo - a - (mu_proj + scores_te[:, :q]) @ b
        loss += float(resid @ resid)
    return loss


@dataclass(frozen=True)
class TuningResult:
    """Argmin of the grid search plus the full loss table."""

    method: str
    h: float | None
    k: int | None
    q: int
    loss: float
    table: tuple = field(default_factory=tuple)  # records (h, k, q, loss|nan, error)

    def as_dict(self) -> dict:
        return {"method": self.method, "h": self.h, "k": self.k, "q": self.q, "loss": self.loss}


def select_tuning(dataset: Dataset, config: CvConfig, method: str = "fsw") -> TuningResult:
    """Exhaustive grid search; ties go to the smallest q, then k, then h."""
    if method not in ("fsw", "or", "dr"):
        raise ParameterError(f"unknown tuning method {method!r}")
    p = dataset.p
    for k in config.k_grid:
        if (k - 1) % p != 0 or (k - 1) // p < 1:
            raise ParameterError(f"k={k} invalid for p={p}: (k-1)/p must be a positive integer")
    folds = make_folds(dataset.n, config.n_folds, config.seed)
    rho = rho_family(config.rho)
    records: list[dict] = []

    if method == "or":
        for q in sorted(config.q_grid):
            rec = {"h": None, "k": None, "q": q, "loss": np.nan, "error": None}
            try:
                rec["loss"] = cv_loss_or(dataset, q, folds)
            except AdrfError as exc:
                rec["error"] = f"{exc.category}: {exc}"
            records.append(rec)
    elif method == "fsw":
        # The PC basis per fold does not depend on (h, k, q): cache it.
        qs = sorted(config.q_grid)
        fpca_by_fold = []
        for te in folds:
            tr = np.setdiff1d(np.arange(dataset.n), te)
            cap = min(max(qs), tr.size, len(dataset.grid))
            fpca_by_fold.append(
                fpca_from_matrix(dataset.grid, dataset.z[tr], cap)
            )
        for k in sorted(config.k_grid):
            for h in sorted(config.h_grid):
                try:
                    losses, errs = _fsw_residual_pieces(
                        dataset, folds, h, k, qs, rho, fpca_by_fold=fpca_by_fold
                    )
                except AdrfError as exc:
                    losses = np.full(len(qs), np.nan)
                    errs = [f"{exc.category}: {exc}"] * len(qs)
                for q, loss, err in zip(qs, losses, errs):
                    records.append(
                        {"h": h, "k": k, "q": q,
                         "loss": float(loss) if err is None else np.nan,
                         "error": err}
                    )
    else:  # dr
        for k in sorted(config.k_grid):
            for h in sorted(config.h_grid):
                for q in sorted(config.q_grid):
                    rec = {"h": h, "k": k, "q": q, "loss": np.nan, "error": None}
                    try:
                        rec["loss"] = cv_loss_dr(dataset, h, k, q, folds, rho)
                    except AdrfError as exc:
                        rec["error"] = f"{exc.category}: {exc}"
                    records.append(rec)

    best = None
    for rec in sorted(records, key=_tie_key):
        if np.isnan(rec["loss"]):
            continue
        if best is None or rec["loss"] < best["loss"]:
            best = rec
    if best is None:
        failures = "; ".join(
            f"(h={r['h']}, k={r['k']}, q={r['q']}): {r['error']}" for r in records
        )
        raise ConvergenceError(f"all tuning candidates failed: {failures}")
    return TuningResult(
        method=method,
        h=best["h"],
        k=best["k"],
        q=best["q"],
        loss=best["loss"],
        table=tuple(tuple(r[c] for c in ("h", "k", "q", "loss", "error")) for r in records),
    )


def _tie_key(rec):
    return (
        rec["q"],
        rec["k"] if rec["k"] is not None else 0,
        rec["h"] if rec["h"] is not None else 0.0,
    )
