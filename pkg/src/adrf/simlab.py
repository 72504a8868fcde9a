"""Synthetic data generators, ISE metric and the Monte Carlo benchmark.

The treatment curves are a rank-6 Fourier Karhunen-Loeve process on
[0, 1]; four outcome/covariate designs cover linear and nonlinear
confounding.  The benchmark runner reproduces the simulation table:
for each replication it selects (h, k, q) by cross validation of the
weighted regression and fits all requested methods with the shared q.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .dataset import Dataset
from .errors import AdrfError, ConvergenceError, GridMismatchError, ParameterError
from .estimators import fit_dr, fit_fsw, fit_naive, fit_or
from .fda import FunctionalSample, Grid, fpca_from_matrix
from .tuning import CvConfig, default_config, select_tuning
from .weights import estimate_weights

MODEL_IDS = ("i", "ii", "iii", "iv")
METHODS = ("naive", "fsw", "or", "dr")

# Standard deviations of the KL coefficients A_1..A_6.
KL_SCALES = np.array([4.0, 2.0 * np.sqrt(3.0), 2.0 * np.sqrt(2.0), 2.0, 1.0, 1.0 / np.sqrt(2.0)])
TRUE_INTERCEPT = 1.0
# Slope truth in the Fourier basis: 2 phi_1 + phi_2 + phi_3 / 2 + phi_4 / 2.
TRUE_B_COEFFS = np.array([2.0, 1.0, 0.5, 0.5, 0.0, 0.0])


def fourier_basis(points: np.ndarray, n_funcs: int = 6) -> np.ndarray:
    """Rows: sqrt(2) sin(2m pi t), sqrt(2) cos(2m pi t), m = 1, 2, ..."""
    rows = []
    for j in range(1, n_funcs + 1):
        m = (j + 1) // 2
        if j % 2 == 1:
            rows.append(np.sqrt(2.0) * np.sin(2.0 * m * np.pi * points))
        else:
            rows.append(np.sqrt(2.0) * np.cos(2.0 * m * np.pi * points))
    return np.vstack(rows)


@dataclass(frozen=True)
class SimModel:
    """One synthetic design: model id, sample size, seed, grid resolution."""

    id: str
    n: int
    seed: int = 0
    m: int = 101
    eps1_sd: float = 1.0
    eps2_sd: float = 5.0
    independent_x: bool = False  # draw X independently of Z (no confounding)

    def __post_init__(self):
        if self.id not in MODEL_IDS:
            raise ParameterError(f"unknown model id {self.id!r}; choose from {MODEL_IDS}")
        if self.n < 20:
            raise ParameterError("sample size must be at least 20")


@dataclass(frozen=True)
class SimTruth:
    """Ground truth behind a generated dataset."""

    a: float
    b_curve: FunctionalSample
    b_coeffs: np.ndarray
    theta: np.ndarray | None  # None when the covariate effect is nonlinear


def true_slope(grid: Grid) -> FunctionalSample:
    basis = fourier_basis(grid.points, 6)
    return FunctionalSample(grid, TRUE_B_COEFFS @ basis)


def generate(model: SimModel) -> tuple[Dataset, SimTruth]:
    """Draw one dataset; deterministic given the model seed.

    The outcome uses the quadrature inner product <b, Z_i> on the model
    grid, so the noiseless identity Y = a + <b, Z> + theta'X is exact on
    the grid.
    """
    grid = Grid.uniform(0.0, 1.0, model.m)
    basis = fourier_basis(grid.points, 6)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(model.seed).spawn(4)]
    u = streams[0].standard_normal((model.n, 6))
    eps1 = streams[1].standard_normal(model.n) * model.eps1_sd
    eps2 = streams[2].standard_normal(model.n) * model.eps2_sd
    scores = u * KL_SCALES[None, :]
    z = scores @ basis

    if model.independent_x:
        u_x = streams[3].standard_normal((model.n, 2))
    else:
        u_x = u[:, :2]
    if model.id in ("i", "ii"):
        x = (u_x[:, 0] + eps1)[:, None]
    else:
        x = np.column_stack([(u_x[:, 0] + 1.0) ** 2 + eps1, u_x[:, 1]])

    b_vals = TRUE_B_COEFFS @ basis
    bz = z @ (b_vals * grid.weights)
    if model.id == "i":
        effect = 2.0 * x[:, 0]
        theta = np.array([2.0])
    elif model.id == "ii":
        effect = 3.0 * x[:, 0] ** 2 + 1.5 * np.sin(x[:, 0])
        theta = None
    elif model.id == "iii":
        effect = 2.0 * x[:, 0] + 2.0 * x[:, 1]
        theta = np.array([2.0, 2.0])
    else:
        effect = 2.0 * x[:, 0] + 2.0 * np.cos(x[:, 0]) + 5.5 * np.sin(x[:, 1])
        theta = None
    y = TRUE_INTERCEPT + bz + effect + eps2

    dataset = Dataset(grid, z, x, y)
    truth = SimTruth(
        a=TRUE_INTERCEPT,
        b_curve=FunctionalSample(grid, b_vals),
        b_coeffs=TRUE_B_COEFFS.copy(),
        theta=theta,
    )
    return dataset, truth


def ise(b_hat: FunctionalSample, b_true: FunctionalSample) -> float:
    """Integrated squared error of a slope estimate."""
    if b_hat.grid != b_true.grid:
        raise GridMismatchError("slope curves live on different grids")
    diff = b_hat.values - b_true.values
    return float(np.dot(diff * diff, b_hat.grid.weights))


@dataclass
class ReplicationResult:
    """ISE and fitted parameters of one replication."""

    seed: int
    tuning: dict
    ise: dict            # method -> ISE (not scaled)
    a_hat: dict          # method -> intercept
    theta_hat: np.ndarray | None
    error: str | None = None


@dataclass(frozen=True)
class CellStats:
    model: str
    n: int
    method: str
    mean_ise100: float
    sd_ise100: float
    n_ok: int
    n_failed: int


@dataclass(frozen=True)
class BenchmarkReport:
    """Per (model, n, method) ISE summary plus replication detail."""

    rows: tuple
    replications: int
    base_seed: int
    details: dict = field(default_factory=dict)  # (model, n) -> list[ReplicationResult]

    def cell(self, model: str, n: int, method: str) -> CellStats:
        for row in self.rows:
            if (row.model, row.n, row.method) == (model, n, method):
                return row
        raise KeyError((model, n, method))

    def render(self) -> str:
        lines = ["model  n     method  mean_ise_x100  sd_ise_x100  reps  failed"]
        for row in self.rows:
            lines.append(
                f"{row.model:<6} {row.n:<5} {row.method:<7} "
                f"{row.mean_ise100:>12.2f} {row.sd_ise100:>12.2f} "
                f"{row.n_ok:>5} {row.n_failed:>6}"
            )
        return "\n".join(lines)


def run_replication(
    model_id: str,
    n: int,
    seed: int,
    methods=METHODS,
    cv_config: CvConfig | None = None,
    grid_m: int = 101,
) -> ReplicationResult:
    """Generate, tune by the weighted-regression CV loss, fit, score."""
    dataset, truth = generate(SimModel(id=model_id, n=n, seed=seed, m=grid_m))
    try:
        if cv_config is None:
            config = default_config(dataset, seed=seed)
        else:
            # Fold assignment varies with the replication but stays reproducible.
            config = dataclasses.replace(cv_config, seed=cv_config.seed + seed)
        sel = select_tuning(dataset, config, method="fsw")
        model = fpca_from_matrix(dataset.grid, dataset.z, min(sel.q, dataset.n, grid_m))
        weights = None
        if any(m in methods for m in ("fsw", "dr")):
            weights = estimate_weights(dataset, sel.h, sel.k, config.rho)
        fits = {}
        if "naive" in methods:
            fits["naive"] = fit_naive(dataset, model, sel.q)
        if "fsw" in methods:
            fits["fsw"] = fit_fsw(dataset, model, weights, sel.q)
        or_fit = None
        if "or" in methods or "dr" in methods:
            or_fit = fit_or(dataset, model, sel.q)
        if "or" in methods:
            fits["or"] = or_fit
        if "dr" in methods:
            fits["dr"] = fit_dr(dataset, model, or_fit, weights, sel.q)
        return ReplicationResult(
            seed=seed,
            tuning=sel.as_dict(),
            ise={m: ise(f.b_curve, truth.b_curve) for m, f in fits.items()},
            a_hat={m: f.a_hat for m, f in fits.items()},
            theta_hat=None if or_fit is None else or_fit.theta_hat,
        )
    except AdrfError as exc:
        return ReplicationResult(
            seed=seed, tuning={}, ise={}, a_hat={}, theta_hat=None,
            error=f"{exc.category}: {exc}",
        )


def resolve_threads(flag: int | None = None) -> int:
    """--threads flag wins over the ADRF_THREADS environment variable."""
    if flag is not None and flag > 0:
        return flag
    env = os.environ.get("ADRF_THREADS", "")
    if env.strip():
        try:
            v = int(env)
            if v > 0:
                return v
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_benchmark(
    models=MODEL_IDS,
    sizes=(200, 500),
    methods=METHODS,
    replications: int = 200,
    base_seed: int = 2024,
    cv_config: CvConfig | None = None,
    threads: int | None = None,
    keep_details: bool = True,
    max_failure_fraction: float = 0.05,
) -> BenchmarkReport:
    """Monte Carlo table: mean and sd of ISE x 100 per (model, n, method).

    Replication r of every cell uses seed base_seed + r, so the report is
    reproducible bit for bit regardless of scheduling.
    """
    if replications < 1:
        raise ParameterError("need at least one replication")
    for m in methods:
        if m not in METHODS:
            raise ParameterError(f"unknown method {m!r}")
    n_jobs = resolve_threads(threads)
    tasks = [
        (model_id, n, base_seed + r)
        for model_id in models
        for n in sizes
        for r in range(replications)
    ]
    results = Parallel(n_jobs=n_jobs, prefer="processes")(
        delayed(run_replication)(model_id, n, seed, methods, cv_config)
        for model_id, n, seed in tasks
    )
    by_cell: dict = {}
    for (model_id, n, _), res in zip(tasks, results):
        by_cell.setdefault((model_id, n), []).append(res)

    rows = []
    details = {}
    for model_id in models:
        for n in sizes:
            reps = by_cell[(model_id, n)]
            if keep_details:
                details[(model_id, n)] = reps
            failed = [r for r in reps if r.error is not None]
            if len(failed) > max_failure_fraction * replications:
                raise ConvergenceError(
                    f"benchmark cell ({model_id}, n={n}): {len(failed)}/{replications}"
                    f" replications failed; first error: {failed[0].error}"
                )
            ok = [r for r in reps if r.error is None]
            for method in methods:
                vals = 100.0 * np.array([r.ise[method] for r in ok])
                rows.append(
                    CellStats(
                        model=model_id,
                        n=n,
                        method=method,
                        mean_ise100=float(vals.mean()),
                        sd_ise100=float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
                        n_ok=len(ok),
                        n_failed=len(failed),
                    )
                )
    return BenchmarkReport(
        rows=tuple(rows),
        replications=replications,
        base_seed=base_seed,
        details=details,
    )
