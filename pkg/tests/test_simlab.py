"""Synthetic designs, ISE scoring and the Monte Carlo benchmark driver."""

import numpy as np
import pytest

from adrf.errors import ConvergenceError, GridMismatchError, ParameterError
from adrf.fda import FunctionalSample, inner_product
from adrf.simlab import (
    KL_SCALES,
    SimModel,
    fourier_basis,
    generate,
    ise,
    resolve_threads,
    run_benchmark,
    run_replication,
    true_slope,
)
from adrf.tuning import CvConfig


TINY_CV = CvConfig(h_grid=(5.0,), k_grid=(2,), q_grid=(2, 4), n_folds=4, seed=0)


class TestGenerate:
    def test_slope_at_zero(self, grid101):
        # b(0) = 1 * sqrt(2) + 0.5 * sqrt(2) = 1.5 sqrt(2): only the cosine
        # modes contribute at t = 0.
        b = true_slope(grid101)
        assert b.values[0] == pytest.approx(1.5 * np.sqrt(2.0), abs=1e-12)

    def test_noiseless_identity_exact(self):
        dataset, truth = generate(SimModel("i", 50, seed=5, eps1_sd=0.0, eps2_sd=0.0))
        w = dataset.grid.weights
        recon = truth.a + dataset.z @ (truth.b_curve.values * w) + dataset.x @ truth.theta
        assert np.array_equal(dataset.y, recon) or np.abs(dataset.y - recon).max() == 0.0

    def test_score_variances(self):
        dataset, _ = generate(SimModel("i", 5000, seed=6))
        basis = fourier_basis(dataset.grid.points, 6)
        w = dataset.grid.weights
        scores = (dataset.z - dataset.z.mean(axis=0)) @ (basis * w).T
        var = scores.var(axis=0)
        assert np.all(np.abs(var / KL_SCALES**2 - 1.0) < 0.1)

    def test_determinism_and_seed_sensitivity(self):
        d1, _ = generate(SimModel("ii", 40, seed=9))
        d2, _ = generate(SimModel("ii", 40, seed=9))
        d3, _ = generate(SimModel("ii", 40, seed=10))
        assert np.array_equal(d1.z, d2.z) and np.array_equal(d1.y, d2.y)
        assert not np.array_equal(d1.y, d3.y)

    def test_covariate_shapes(self):
        for mid, p in (("i", 1), ("ii", 1), ("iii", 2), ("iv", 2)):
            dataset, truth = generate(SimModel(mid, 30, seed=1))
            assert dataset.x.shape == (30, p)
            if mid in ("i", "iii"):
                assert truth.theta is not None
            else:
                assert truth.theta is None

    def test_independent_x_breaks_confounding(self):
        dep, _ = generate(SimModel("i", 3000, seed=11))
        ind, _ = generate(SimModel("i", 3000, seed=11, independent_x=True))
        basis = fourier_basis(dep.grid.points, 6)
        w = dep.grid.weights
        s1_dep = (dep.z @ (basis[0] * w))
        s1_ind = (ind.z @ (basis[0] * w))
        assert abs(np.corrcoef(s1_dep, dep.x[:, 0])[0, 1]) > 0.5
        assert abs(np.corrcoef(s1_ind, ind.x[:, 0])[0, 1]) < 0.1

    def test_invalid_model(self):
        with pytest.raises(ParameterError):
            SimModel("v", 100)
        with pytest.raises(ParameterError):
            SimModel("i", 10)


class TestIse:
    def test_identical_zero(self, grid101):
        b = true_slope(grid101)
        assert ise(b, b) == 0.0

    def test_unit_mode_offset(self, grid101):
        b = true_slope(grid101)
        phi1 = np.sqrt(2.0) * np.sin(2 * np.pi * grid101.points)
        shifted = FunctionalSample(grid101, b.values + phi1)
        assert ise(shifted, b) == pytest.approx(1.0, abs=1e-3)

    def test_zero_estimate(self, grid101):
        # ||b||^2 = 4 + 1 + 0.25 + 0.25 = 5.5 by orthonormality.
        b = true_slope(grid101)
        zero = FunctionalSample(grid101, np.zeros(len(grid101)))
        assert ise(zero, b) == pytest.approx(5.5, abs=1e-3)

    def test_grid_mismatch(self, grid101, grid21):
        with pytest.raises(GridMismatchError):
            ise(true_slope(grid101), true_slope(grid21))


class TestReplication:
    def test_success_payload(self):
        res = run_replication("i", 80, seed=3, cv_config=TINY_CV)
        assert res.error is None
        assert set(res.ise) == {"naive", "fsw", "or", "dr"}
        assert all(v >= 0 for v in res.ise.values())
        assert res.tuning["q"] in (2, 4)
        assert res.theta_hat is not None

    def test_determinism(self):
        r1 = run_replication("iii", 80, seed=4, cv_config=TINY_CV)
        r2 = run_replication("iii", 80, seed=4, cv_config=TINY_CV)
        assert r1.ise == r2.ise and r1.a_hat == r2.a_hat and r1.tuning == r2.tuning

    def test_method_subset(self):
        res = run_replication("i", 80, seed=3, methods=("naive", "or"), cv_config=TINY_CV)
        assert set(res.ise) == {"naive", "or"}

    def test_failure_captured_not_raised(self):
        bad = CvConfig(h_grid=(1.0,), k_grid=(2,), q_grid=(200,), n_folds=4)
        res = run_replication("i", 80, seed=3, cv_config=bad)
        assert res.error is not None and res.ise == {}


class TestBenchmark:
    def test_small_run_determinism(self):
        kw = dict(models=("i",), sizes=(80,), methods=("naive", "or"),
                  replications=2, base_seed=7, cv_config=TINY_CV, threads=1)
        rep1 = run_benchmark(**kw)
        rep2 = run_benchmark(**kw)
        assert rep1.rows == rep2.rows
        cell = rep1.cell("i", 80, "or")
        assert cell.n_ok == 2 and cell.n_failed == 0
        assert cell.mean_ise100 > 0

    def test_render_contains_cells(self):
        rep = run_benchmark(models=("i",), sizes=(80,), methods=("naive",),
                            replications=1, base_seed=7, cv_config=TINY_CV, threads=1)
        text = rep.render()
        assert "mean_ise_x100" in text and "naive" in text

    def test_failure_threshold(self, monkeypatch):
        import adrf.simlab as simlab

        def boom(model_id, n, seed, methods=None, cv_config=None):
            return simlab.ReplicationResult(seed=seed, tuning={}, ise={},
                                            a_hat={}, theta_hat=None,
                                            error="convergence: forced")

        monkeypatch.setattr(simlab, "run_replication", boom)
        with pytest.raises(ConvergenceError, match="replications failed"):
            simlab.run_benchmark(models=("i",), sizes=(80,), replications=2,
                                 base_seed=0, cv_config=TINY_CV, threads=1)

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            run_benchmark(replications=0)
        with pytest.raises(ParameterError):
            run_benchmark(methods=("ipw",), replications=1)


class TestThreads:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv("ADRF_THREADS", "3")
        assert resolve_threads(2) == 2

    def test_env_fallback(self, monkeypatch):
        monkeypatch.setenv("ADRF_THREADS", "3")
        assert resolve_threads(None) == 3

    def test_bad_env_ignored(self, monkeypatch):
        monkeypatch.setenv("ADRF_THREADS", "zero")
        assert resolve_threads(None) >= 1
