"""Covariate standardization and the orthonormalized Legendre design."""

import numpy as np
import pytest

from adrf.errors import CollinearityError, DegenerateCovariateError, ParameterError
from adrf.sieve import (
    CLIP_RANGE,
    design_from_covariates,
    orthonormalize,
    raw_legendre_design,
    sieve_design,
    standardize,
)


class TestStandardize:
    def test_endpoints_map_to_plus_minus_one(self):
        x = np.array([[1.0], [2.0], [5.0]])
        x_st, _ = standardize(x)
        assert x_st.min() == -1.0
        assert x_st.max() == 1.0

    def test_hand_evaluated_column(self):
        x = np.array([[0.0], [1.0], [3.0]])
        x_st, _ = standardize(x)
        assert np.allclose(x_st.ravel(), [-1.0, -1.0 / 3.0, 1.0])

    def test_constant_column_rejected(self):
        with pytest.raises(DegenerateCovariateError):
            standardize(np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]))

    def test_single_row_rejected(self):
        with pytest.raises(ParameterError):
            standardize(np.array([[1.0]]))

    def test_held_out_points_clipped(self):
        x = np.array([[0.0], [1.0]])
        _, std = standardize(x)
        out = std.transform(np.array([[-10.0], [0.5], [10.0]]))
        assert out.min() >= CLIP_RANGE[0]
        assert out.max() <= CLIP_RANGE[1]
        assert out[1, 0] == 0.0

    def test_transform_without_clip(self):
        x = np.array([[0.0], [1.0]])
        _, std = standardize(x)
        out = std.transform(np.array([[2.0]]), clip=False)
        assert out[0, 0] == 3.0


class TestRawLegendre:
    def test_standard_values_at_half(self):
        # P_2(x) = (3x^2 - 1) / 2
        row = raw_legendre_design(np.array([[0.5]]), 3)
        assert np.allclose(row, [[1.0, 0.5, -0.125]])

    def test_constant_only_when_k_is_one(self):
        row = raw_legendre_design(np.array([[0.3], [0.7]]), 1)
        assert np.array_equal(row, np.ones((2, 1)))

    def test_invalid_k_rejected(self):
        x = np.zeros((4, 2))
        with pytest.raises(ParameterError):
            raw_legendre_design(x, 4)  # (k-1)/p = 3/2 not integral
        with pytest.raises(ParameterError):
            raw_legendre_design(x, 0)

    def test_column_layout_two_covariates(self):
        x = np.array([[0.5, -0.5]])
        row = raw_legendre_design(x, 5)
        expect = [1.0, 0.5, -0.5, -0.125, -0.125]
        assert np.allclose(row.ravel(), expect)


class TestSieveDesign:
    def test_gram_identity(self):
        rng = np.random.default_rng(21)
        x_st = rng.uniform(-1, 1, size=(200, 2))
        design = sieve_design(x_st, 5)
        gram = design.matrix.T @ design.matrix / 200
        assert np.abs(gram - np.eye(5)).max() < 1e-8

    def test_span_invariance(self):
        rng = np.random.default_rng(22)
        x_st = rng.uniform(-1, 1, size=(60, 1))
        raw = raw_legendre_design(x_st, 4)
        design = sieve_design(x_st, 4)
        # Projecting each raw column onto the new columns leaves no residual.
        proj = design.matrix @ np.linalg.lstsq(design.matrix, raw, rcond=None)[0]
        assert np.abs(raw - proj).max() < 1e-8

    def test_evaluate_reproduces_training_rows(self):
        rng = np.random.default_rng(23)
        x = rng.normal(size=(50, 1))
        design = design_from_covariates(x, 3)
        again = design.evaluate(x)
        assert np.abs(again - design.matrix).max() < 1e-10

    def test_orthonormal_input_transform_is_signed_identity(self):
        rng = np.random.default_rng(24)
        raw = np.linalg.qr(rng.normal(size=(40, 3)))[0] * np.sqrt(40)
        mat, transform = orthonormalize(raw)
        off = transform - np.diag(np.diag(transform))
        assert np.abs(off).max() < 1e-8
        assert np.allclose(np.abs(np.diag(transform)), 1.0, atol=1e-8)

    def test_collinear_design_names_column(self):
        x = np.array([[v, v] for v in np.linspace(-1, 1, 30)])
        with pytest.raises(CollinearityError, match="column"):
            sieve_design(x, 3)

    def test_k_exceeding_half_n_rejected(self):
        rng = np.random.default_rng(25)
        x_st = rng.uniform(-1, 1, size=(8, 1))
        with pytest.raises(ParameterError):
            sieve_design(x_st, 5)

    def test_transform_applies_after_raw_evaluation(self):
        rng = np.random.default_rng(26)
        x = rng.normal(size=(80, 1))
        design = design_from_covariates(x, 3)
        new = rng.normal(size=(5, 1))
        st = design.standardizer.transform(new)
        expect = raw_legendre_design(st, 3) @ design.transform
        assert np.allclose(design.evaluate(new), expect)
