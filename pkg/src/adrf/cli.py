"""Batch command line interface.

Subcommands: simulate, estimate, cv, adrf, ate, benchmark.  Every command
is deterministic given its flags and --seed; failures exit nonzero with a
single machine-parsable line ``error:<category>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io as adrf_io
from .dataset import Dataset
from .errors import AdrfError, ParameterError
from .estimators import ate as ate_of
from .estimators import fit_dr, fit_fsw, fit_naive, fit_or
from .fda import FunctionalSample, fpca_from_matrix
from .simlab import MODEL_IDS, SimModel, generate, resolve_threads, run_benchmark
from .tuning import CvConfig, cv_loss_dr, cv_loss_fsw, cv_loss_or, default_config, make_folds, select_tuning
from .weights import estimate_weights

METHOD_CHOICES = ("naive", "fsw", "or", "dr")


def _dataset_args(p: argparse.ArgumentParser):
    p.add_argument("--curves", required=True, help="curve CSV: grid row, then one curve per row")
    p.add_argument("--table", required=True, help="covariate/outcome CSV with header")
    p.add_argument("--outcome", default="y", help="outcome column name")
    p.add_argument("--covariates", default=None,
                   help="comma-separated covariate columns (default: all non-outcome)")


def _load_dataset(args) -> Dataset:
    if args.covariates:
        covs = tuple(c.strip() for c in args.covariates.split(",") if c.strip())
    else:
        rows = adrf_io._read_csv_rows(args.table)
        if not rows:
            raise ParameterError(f"{args.table}: empty table")
        covs = tuple(h.strip() for h in rows[0] if h.strip() != args.outcome)
    files = adrf_io.DatasetFiles(
        curves_path=args.curves, table_path=args.table,
        outcome=args.outcome, covariates=covs,
    )
    return adrf_io.load_dataset(files)


def _cmd_simulate(args) -> int:
    model = SimModel(id=args.model, n=args.n, seed=args.seed, m=args.m)
    dataset, _ = generate(model)
    covs = tuple(f"x{j + 1}" for j in range(dataset.p))
    files = adrf_io.DatasetFiles(
        curves_path=args.curves, table_path=args.table, outcome="y", covariates=covs
    )
    adrf_io.write_dataset(dataset, files)
    print(f"wrote {dataset.n} observations: curves -> {args.curves}, table -> {args.table}")
    return 0


def _select(args, dataset, method):
    config = default_config(dataset, n_folds=args.folds, seed=args.seed, rho=args.rho)
    loss_method = {"naive": "fsw", "fsw": "fsw", "or": "or", "dr": "dr"}[method]
    return select_tuning(dataset, config, loss_method)


def _cmd_estimate(args) -> int:
    dataset = _load_dataset(args)
    method = args.method
    if args.cv:
        sel = _select(args, dataset, method)
        h, k, q = sel.h, sel.k, sel.q
    else:
        if args.q is None:
            raise ParameterError("either --cv or an explicit --q is required")
        h, k, q = args.h, args.k, args.q
        if method in ("fsw", "dr") and (h is None or k is None):
            raise ParameterError(f"method {method} needs --h and --k (or --cv)")
    model = fpca_from_matrix(dataset.grid, dataset.z, min(q, dataset.n, len(dataset.grid)))
    weights = None
    if method in ("fsw", "dr"):
        weights = estimate_weights(dataset, h, k, args.rho)
    if method == "naive":
        fit = fit_naive(dataset, model, q)
    elif method == "fsw":
        fit = fit_fsw(dataset, model, weights, q)
    elif method == "or":
        fit = fit_or(dataset, model, q)
    else:
        or_fit = fit_or(dataset, model, q)
        fit = fit_dr(dataset, model, or_fit, weights, q)
    adrf_io.write_fit(fit, args.out)
    extras = "" if fit.theta_hat is None else f", theta_hat={np.array2string(fit.theta_hat, precision=6)}"
    print(f"{method}: a_hat={fit.a_hat:.6g}, q={q}{extras} -> {args.out}")
    return 0


def _cmd_cv(args) -> int:
    dataset = _load_dataset(args)
    config = default_config(dataset, n_folds=args.folds, seed=args.seed, rho=args.rho)
    folds = make_folds(dataset.n, config.n_folds, config.seed)
    print("h,k,q,loss")
    if args.method == "or":
        for q in config.q_grid:
            try:
                loss = cv_loss_or(dataset, q, folds)
                print(f",,{q},{loss:.17g}")
            except AdrfError as exc:
                print(f",,{q},failed:{exc.category}")
        return 0
    loss_fn = cv_loss_fsw if args.method in ("fsw", "naive") else cv_loss_dr
    for k in config.k_grid:
        for h in config.h_grid:
            for q in config.q_grid:
                try:
                    loss = loss_fn(dataset, h, k, q, folds, config.rho)
                    print(f"{h:.17g},{k},{q},{loss:.17g}")
                except AdrfError as exc:
                    print(f"{h:.17g},{k},{q},failed:{exc.category}")
    return 0


def _cmd_adrf(args) -> int:
    fit = adrf_io.read_fit(args.fit)
    grid, z = adrf_io.load_curves(args.curves)
    for row in z:
        value = adrf_io.eval_loaded_fit(fit, FunctionalSample(grid, row))
        print(format(value, ".17g"))
    return 0


def _cmd_ate(args) -> int:
    fit = adrf_io.read_fit(args.fit)
    grid, z = adrf_io.load_curves(args.curves)
    if z.shape[0] != 2:
        raise ParameterError(f"ate needs exactly two curves, found {z.shape[0]}")
    v1 = adrf_io.eval_loaded_fit(fit, FunctionalSample(grid, z[0]))
    v2 = adrf_io.eval_loaded_fit(fit, FunctionalSample(grid, z[1]))
    print(format(v1 - v2, ".17g"))
    return 0


def _cmd_benchmark(args) -> int:
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    sizes = tuple(int(s) for s in args.sizes.split(","))
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    report = run_benchmark(
        models=models,
        sizes=sizes,
        methods=methods,
        replications=args.reps,
        base_seed=args.seed,
        threads=resolve_threads(args.threads),
        keep_details=False,
    )
    print(report.render())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adrf",
        description="Dose-response estimation for functional treatments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic dataset to CSV files")
    p.add_argument("--model", choices=MODEL_IDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=101, help="grid resolution")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--curves", required=True)
    p.add_argument("--table", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="fit one estimator and save the fit")
    _dataset_args(p)
    p.add_argument("--method", choices=METHOD_CHOICES, required=True)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--cv", action="store_true", help="tune (h, k, q) by cross validation")
    p.add_argument("--rho", default="exponential-tilting")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("cv", help="print the cross-validation loss table")
    _dataset_args(p)
    p.add_argument("--method", choices=METHOD_CHOICES, default="fsw")
    p.add_argument("--rho", default="exponential-tilting")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("adrf", help="evaluate a saved fit at curves")
    p.add_argument("--fit", required=True)
    p.add_argument("--curves", required=True)
    p.set_defaults(func=_cmd_adrf)

    p = sub.add_parser("ate", help="treatment effect between two curves under a saved fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--curves", required=True, help="curve file with exactly two curves")
    p.set_defaults(func=_cmd_ate)

    p = sub.add_parser("benchmark", help="Monte Carlo ISE table")
    p.add_argument("--models", default=",".join(MODEL_IDS))
    p.add_argument("--sizes", default="200,500")
    p.add_argument("--methods", default="naive,fsw,or,dr")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdrfError as exc:
        print(f"error:{exc.category}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
