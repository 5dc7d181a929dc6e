import numpy as np
import pytest

from cclust import simplex
from cclust.errors import (
    NegativeEntryError,
    NonFiniteInputError,
    SumOutOfToleranceError,
)


class TestValidate:
    def test_exact_point_passes(self):
        v = simplex.validate([0.5, 0.5], tol=1e-9)
        np.testing.assert_array_equal(v, [0.5, 0.5])

    def test_sum_violation(self):
        with pytest.raises(SumOutOfToleranceError):
            simplex.validate([0.5, 0.6])

    def test_negative_entry(self):
        with pytest.raises(NegativeEntryError):
            simplex.validate([-1e-3, 1.001])

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteInputError):
            simplex.validate([np.nan, 1.0])

    def test_repair_mode_renormalizes(self):
        v = simplex.validate([0.5, 0.5000001], repair=True)
        assert abs(v.sum() - 1.0) < 1e-15

    def test_no_silent_repair(self):
        with pytest.raises(SumOutOfToleranceError):
            simplex.validate([0.5, 0.5000001])

    def test_label_matrix_reports_row(self):
        Y = np.array([[0.5, 0.5], [0.7, 0.2]])
        with pytest.raises(SumOutOfToleranceError, match="row 1"):
            simplex.validate_label_matrix(Y)


class TestSoftmax:
    def test_equal_logits_uniform(self):
        np.testing.assert_allclose(simplex.softmax([0.0, 0.0, 0.0]), 1 / 3, atol=1e-15)

    def test_overflow_safe(self):
        p = simplex.softmax([1000.0, 0.0])
        assert np.all(np.isfinite(p))
        assert p[0] == pytest.approx(1.0)

    def test_hand_value(self):
        p = simplex.softmax([np.log(2.0), 0.0])
        np.testing.assert_allclose(p, [2 / 3, 1 / 3], atol=1e-15)

    def test_output_validates_tightly(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = simplex.softmax(rng.standard_normal(rng.integers(2, 50)))
            simplex.validate(p, tol=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            l = rng.standard_normal(8)
            c = rng.uniform(-50, 50)
            np.testing.assert_allclose(simplex.softmax(l), simplex.softmax(l + c),
                                       atol=1e-12)

    def test_rows_match_single(self):
        rng = np.random.default_rng(2)
        L = rng.standard_normal((40, 6))
        batch = simplex.softmax_rows(L)
        for i in range(40):
            np.testing.assert_array_equal(batch[i], simplex.softmax(L[i]))


class TestProjection:
    def test_feasible_point_unchanged(self):
        v = np.array([0.2, 0.3, 0.5])
        np.testing.assert_array_equal(simplex.project_simplex(v), v)

    def test_nearest_vertex(self):
        np.testing.assert_allclose(simplex.project_simplex([2.0, 0.0]), [1.0, 0.0],
                                   atol=1e-15)

    def test_symmetric_split(self):
        np.testing.assert_allclose(simplex.project_simplex([0.6, 0.6]), [0.5, 0.5],
                                   atol=1e-15)

    def test_idempotent_exactly(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            v = rng.uniform(-2, 2, size=rng.integers(2, 30))
            p1 = simplex.project_simplex(v)
            p2 = simplex.project_simplex(p1)
            np.testing.assert_array_equal(p1, p2)

    def test_optimality_against_grid(self):
        # dense grid over the simplex, resolution 1e-3, K in {2, 3}
        rng = np.random.default_rng(4)
        t = np.linspace(0.0, 1.0, 1001)
        grid2 = np.column_stack([t, 1.0 - t])
        n = 1000
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        keep = i + j <= n
        grid3 = np.column_stack([i[keep], j[keep], n - i[keep] - j[keep]]) / n
        for grid, K in ((grid2, 2), (grid3, 3)):
            for _ in range(20):
                v = rng.uniform(-2, 2, size=K)
                p = simplex.project_simplex(v)
                best = grid[np.argmin(((grid - v) ** 2).sum(axis=1))]
                assert np.abs(p - best).max() <= 2e-3

    def test_rows_match_single_on_infeasible(self):
        rng = np.random.default_rng(5)
        V = rng.uniform(-2, 2, size=(60, 7))
        batch = simplex.project_simplex_rows(V)
        for i in range(60):
            np.testing.assert_allclose(batch[i], simplex.project_simplex(V[i]),
                                       atol=1e-15)

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteInputError):
            simplex.project_simplex([np.inf, 0.0])
