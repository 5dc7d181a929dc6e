import numpy as np
import pytest

from cclust import mstep
from cclust.errors import ZeroWeightError
from cclust.pgd import mstep_grid_oracle, mstep_oracle
from cclust.simplex import softmax_rows, validate


def random_instance(rng, K, lam_range=(-0.3, 2.0)):
    sigma = softmax_rows(rng.standard_normal((1, K)))[0]
    weights = rng.dirichlet(np.ones(K)) / K
    lam = float(10.0 ** rng.uniform(*lam_range))
    return mstep.MStepInstance(sigma=sigma, support_weights=weights, lam=lam)


class TestLeftEndpoint:
    def test_hand_value(self):
        inst = mstep.MStepInstance(sigma=np.array([0.8, 0.2]),
                                   support_weights=np.array([0.25, 0.25]), lam=1.0)
        assert mstep.left_endpoint(inst) == pytest.approx(0.64, abs=1e-15)

    def test_symmetric_instance(self):
        inst = mstep.MStepInstance(sigma=np.array([0.5, 0.5]),
                                   support_weights=np.array([0.25, 0.25]), lam=1.0)
        assert mstep.left_endpoint(inst) == pytest.approx(0.4, abs=1e-15)

    def test_interval_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            inst = random_instance(rng, int(rng.integers(2, 20)))
            l = mstep.left_endpoint(inst)
            b = inst.lam * inst.support_weights.sum() + 1.0
            smax = inst.sigma.max()
            assert smax / b < l <= smax

    def test_zero_weight_rejected(self):
        inst = mstep.MStepInstance(sigma=np.array([0.5, 0.5]),
                                   support_weights=np.array([0.0, 0.5]), lam=1.0)
        with pytest.raises(ZeroWeightError):
            mstep.left_endpoint(inst)


class TestNewton:
    def test_symmetric_uniform_solution(self):
        for lam in (0.1, 1.0, 100.0):
            inst = mstep.MStepInstance(sigma=np.array([0.5, 0.5]),
                                       support_weights=np.array([0.25, 0.25]), lam=lam)
            sol = mstep.newton_solve(inst)
            np.testing.assert_allclose(sol.y, [0.5, 0.5], atol=1e-12)

    def test_golden_value(self):
        # frozen from the K=2 exhaustive grid at resolution 1e-6 and the PGD oracle
        inst = mstep.MStepInstance(sigma=np.array([0.9, 0.1]),
                                   support_weights=np.array([0.25, 0.25]), lam=1.0)
        sol = mstep.newton_solve(inst)
        np.testing.assert_allclose(sol.y, [0.8171614, 0.1828386], atol=1e-6)

    def test_bracketing(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            inst = random_instance(rng, int(rng.integers(2, 25)))
            a = inst.lam * inst.support_weights
            b = inst.lam * inst.support_weights.sum() + 1.0
            l = mstep.left_endpoint(inst)
            smax = inst.sigma.max()
            f_l = (a / (b - inst.sigma / l)).sum() - 1.0
            f_r = (a / (b - inst.sigma / smax)).sum() - 1.0
            assert f_l >= -1e-12
            assert f_r <= 1e-12

    def test_monotone_iterates_below_root(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            inst = random_instance(rng, int(rng.integers(2, 15)))
            sol = mstep.newton_solve(inst, keep_iterates=True)
            xs = np.asarray(sol.iterates)
            assert np.all(np.diff(xs) >= 0)
            assert np.all(xs <= sol.x + 1e-15)

    def test_residual_and_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            inst = random_instance(rng, int(rng.integers(2, 30)))
            sol = mstep.newton_solve(inst, eps=1e-10)
            assert sol.residual <= 1e-10
            b = inst.lam * inst.support_weights.sum() + 1.0
            assert inst.sigma.max() / b < sol.x <= inst.sigma.max()
            assert np.all(sol.y > 0)
            validate(sol.y, tol=1e-9)

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(4)
        for K in (2, 5, 20):
            for _ in range(60):
                inst = random_instance(rng, K)
                sol = mstep.newton_solve(inst)
                y_o = mstep_oracle(inst.sigma[None, :], inst.support_weights[None, :],
                                   inst.lam)[0]
                gap = mstep.objective(sol.y, inst) - mstep.objective(y_o, inst)
                assert gap <= 1e-8
                assert np.abs(sol.y - y_o).max() <= 1e-4

    def test_tightened_interval_same_solution(self):
        rng = np.random.default_rng(5)
        hits = 0
        for _ in range(300):
            inst = random_instance(rng, int(rng.integers(2, 6)), lam_range=(0.5, 2.0))
            b = inst.lam * inst.support_weights.sum() + 1.0
            if inst.sigma.min() > inst.sigma.max() / b:
                hits += 1
                y_a = mstep.newton_solve(inst).y
                y_b = mstep.newton_solve(inst, tighten_interval=True).y
                np.testing.assert_allclose(y_a, y_b, atol=1e-9)
        assert hits > 10

    def test_zero_weight_rejected(self):
        inst = mstep.MStepInstance(sigma=np.array([0.5, 0.5]),
                                   support_weights=np.array([0.5, 0.0]), lam=1.0)
        with pytest.raises(ZeroWeightError):
            mstep.newton_solve(inst)


class TestDegenerate:
    def test_closed_form_case(self):
        # dominant unweighted prediction; verified against the 1e-3 grid on the 3-simplex
        inst = mstep.MStepInstance(sigma=np.array([0.2, 0.3, 0.5]),
                                   support_weights=np.array([0.5, 0.5, 0.0]), lam=0.5)
        sol = mstep.degenerate_solve(inst)
        assert sol.branch == "closed_form"
        assert sol.y.sum() == pytest.approx(1.0, abs=1e-12)
        expect0 = 0.25 / (1.5 * (1 - 0.2 / 0.5))
        expect1 = 0.25 / (1.5 * (1 - 0.3 / 0.5))
        np.testing.assert_allclose(sol.y, [expect0, expect1, 1 - expect0 - expect1],
                                   atol=1e-12)
        y_grid = mstep_grid_oracle(inst.sigma, inst.support_weights, inst.lam,
                                   resolution=1e-3)
        assert np.abs(sol.y - y_grid).max() <= 2e-3

    def test_kkt_fallback_boundary(self):
        inst = mstep.MStepInstance(sigma=np.array([0.9, 0.1]),
                                   support_weights=np.array([1.0, 0.0]), lam=1.0)
        sol = mstep.degenerate_solve(inst)
        assert sol.branch == "kkt_reduced"
        np.testing.assert_allclose(sol.y, [1.0, 0.0], atol=1e-12)

    def test_all_zero_weights(self):
        inst = mstep.MStepInstance(sigma=np.array([0.3, 0.7]),
                                   support_weights=np.array([0.0, 0.0]), lam=1.0)
        sol = mstep.degenerate_solve(inst)
        assert sol.branch == "all_zero"
        np.testing.assert_array_equal(sol.y, [0.0, 1.0])

    def test_all_zero_tie_breaks_to_smallest_index(self):
        inst = mstep.MStepInstance(sigma=np.array([0.4, 0.2, 0.4]),
                                   support_weights=np.zeros(3), lam=2.0)
        sol = mstep.degenerate_solve(inst)
        np.testing.assert_array_equal(sol.y, [1.0, 0.0, 0.0])

    def test_grid_agreement_random_degenerate(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            sigma = softmax_rows(rng.standard_normal((1, 3)))[0]
            weights = rng.dirichlet(np.ones(3)) / 3
            weights[int(rng.integers(3))] = 0.0
            lam = float(10.0 ** rng.uniform(-0.5, 1.0))
            inst = mstep.MStepInstance(sigma=sigma, support_weights=weights, lam=lam)
            sol = mstep.solve(inst)
            y_grid = mstep_grid_oracle(sigma, weights, lam, resolution=1e-3)
            gap = mstep.objective(sol.y, inst) - mstep.objective(y_grid, inst)
            assert gap <= 1e-8
            assert np.abs(sol.y - y_grid).max() <= 2e-3

    def test_continuity_at_zero_weight_boundary(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(200):
            sigma = softmax_rows(rng.standard_normal((1, 4)))[0]
            weights = rng.dirichlet(np.ones(4)) / 4
            k0 = int(np.argmin(sigma))  # zeroed class must not be the argmax
            w_tiny = weights.copy()
            w_tiny[k0] = 1e-12
            w_zero = weights.copy()
            w_zero[k0] = 0.0
            lam = 1.0
            sol_tiny = mstep.newton_solve(
                mstep.MStepInstance(sigma=sigma, support_weights=w_tiny, lam=lam))
            sol_zero = mstep.solve(
                mstep.MStepInstance(sigma=sigma, support_weights=w_zero, lam=lam))
            if sol_zero.branch == "kkt_reduced":
                checked += 1
                assert np.abs(sol_tiny.y - sol_zero.y).max() <= 1e-4
        assert checked > 50

    def test_no_zero_weights_rejected(self):
        inst = mstep.MStepInstance(sigma=np.array([0.5, 0.5]),
                                   support_weights=np.array([0.3, 0.3]), lam=1.0)
        with pytest.raises(ValueError):
            mstep.degenerate_solve(inst)
