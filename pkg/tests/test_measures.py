import numpy as np
import pytest

from cclust import measures
from cclust.errors import EmptyBatchError, InvalidOrderError
from cclust.simplex import softmax


def random_probvecs(rng, count, K):
    return [softmax(rng.standard_normal(K)) for _ in range(count)]


class TestShannon:
    def test_one_hot_zero(self):
        assert measures.shannon_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_uniform_max(self):
        assert measures.shannon_entropy([0.25] * 4) == pytest.approx(np.log(4), abs=1e-15)

    def test_binary(self):
        assert measures.shannon_entropy([0.5, 0.5]) == pytest.approx(np.log(2), abs=1e-15)

    def test_cross_entropy_matching_one_hot(self):
        assert measures.shannon_cross_entropy([1.0, 0.0], [1.0, 0.0]) == 0.0

    def test_cross_entropy_zero_support(self):
        assert measures.shannon_cross_entropy([1.0, 0.0], [0.0, 1.0]) == np.inf

    def test_cross_entropy_hand_value(self):
        got = measures.shannon_cross_entropy([0.5, 0.5], [0.8, 0.2])
        want = -0.5 * np.log(0.8) - 0.5 * np.log(0.2)
        assert got == pytest.approx(want, abs=1e-15)


class TestKL:
    def test_identical_zero(self):
        p = [0.3, 0.7]
        assert measures.kl_divergence(p, p) == 0.0

    def test_one_hot_vs_uniform(self):
        assert measures.kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(np.log(2))

    def test_support_mismatch_infinite(self):
        assert measures.kl_divergence([0.5, 0.5], [1.0, 0.0]) == np.inf

    def test_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p, q = random_probvecs(rng, 2, 6)
            assert measures.kl_divergence(p, q) >= 0


class TestRenyi:
    def test_uniform_all_orders(self):
        u = [0.2] * 5
        for alpha in (0.5, 2.0, 3.0, 10.0):
            assert measures.renyi_entropy(u, alpha) == pytest.approx(np.log(5), abs=1e-12)

    def test_order_two_is_collision(self):
        assert measures.renyi_entropy([0.5, 0.5], 2.0) == pytest.approx(np.log(2), abs=1e-15)

    def test_limit_to_shannon(self):
        rng = np.random.default_rng(1)
        for p in random_probvecs(rng, 20, 5):
            h = measures.shannon_entropy(p)
            for alpha in (1 - 1e-4, 1 + 1e-4):
                assert measures.renyi_entropy(p, alpha) == pytest.approx(h, abs=1e-3)

    def test_divergence_zero_on_equal(self):
        rng = np.random.default_rng(2)
        for p in random_probvecs(rng, 10, 4):
            for alpha in (0.5, 2.0, 5.0):
                assert measures.renyi_divergence(p, p, alpha) == pytest.approx(0.0, abs=1e-12)

    def test_divergence_half_is_bhattacharyya(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p, q = random_probvecs(rng, 2, 6)
            want = -2.0 * np.log(np.sqrt(np.asarray(p) * np.asarray(q)).sum())
            assert measures.renyi_divergence(p, q, 0.5) == pytest.approx(want, abs=1e-12)

    def test_divergence_limit_to_kl(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            p, q = random_probvecs(rng, 2, 5)
            kl = measures.kl_divergence(p, q)
            for alpha in (1 - 1e-4, 1 + 1e-4):
                assert measures.renyi_divergence(p, q, alpha) == pytest.approx(kl, abs=1e-3)

    def test_invalid_orders(self):
        for alpha in (0.0, -1.0, 1.0):
            with pytest.raises(InvalidOrderError):
                measures.renyi_entropy([0.5, 0.5], alpha)
            with pytest.raises(InvalidOrderError):
                measures.renyi_divergence([0.5, 0.5], [0.5, 0.5], alpha)


class TestCollision:
    def test_entropy_one_hot(self):
        assert measures.collision_entropy([0.0, 1.0]) == 0.0

    def test_entropy_uniform(self):
        assert measures.collision_entropy([0.1] * 10) == pytest.approx(np.log(10), abs=1e-12)

    def test_entropy_hand_value(self):
        assert measures.collision_entropy([0.8, 0.2]) == pytest.approx(-np.log(0.68), abs=1e-15)

    def test_cross_matching_one_hot(self):
        assert measures.collision_cross_entropy([1.0, 0.0], [1.0, 0.0]) == 0.0

    def test_cross_uniform_prediction_independent(self):
        rng = np.random.default_rng(5)
        K = 7
        u = np.full(K, 1.0 / K)
        for q in random_probvecs(rng, 50, K):
            assert measures.collision_cross_entropy(u, q) == pytest.approx(np.log(K), abs=1e-12)

    def test_cross_hand_value(self):
        got = measures.collision_cross_entropy([0.5, 0.5], [0.8, 0.2])
        assert got == pytest.approx(np.log(2), abs=1e-15)

    def test_cross_disjoint_infinite(self):
        assert measures.collision_cross_entropy([1.0, 0.0], [0.0, 1.0]) == np.inf

    def test_symmetry_exact(self):
        rng = np.random.default_rng(6)
        for _ in range(10000):
            K = int(rng.integers(2, 12))
            p, q = random_probvecs(rng, 2, K)
            a = measures.collision_cross_entropy(p, q)
            b = measures.collision_cross_entropy(q, p)
            assert abs(a - b) <= 1e-15

    def test_one_hot_agreement_with_shannon(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            K = int(rng.integers(2, 10))
            q = softmax(rng.standard_normal(K))
            k = int(rng.integers(K))
            y = np.zeros(K)
            y[k] = 1.0
            h2 = measures.collision_cross_entropy(y, q)
            h = measures.shannon_cross_entropy(y, q)
            assert h2 == pytest.approx(h, abs=1e-12)
            assert h2 == pytest.approx(-np.log(q[k]), abs=1e-12)

    def test_bounded_for_interior_labels(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            K = int(rng.integers(2, 8))
            y, q = random_probvecs(rng, 2, K)
            assert measures.collision_cross_entropy(y, q) <= -np.log(y.min()) + 1e-12

    def test_self_cross_equals_entropy(self):
        rng = np.random.default_rng(9)
        for p in random_probvecs(rng, 100, 6):
            a = measures.collision_cross_entropy(p, p)
            b = measures.collision_entropy(p)
            assert abs(a - b) <= 1e-15


class TestDecomposition:
    def test_zero_angle_on_equal(self):
        p = softmax(np.arange(4.0))
        ang, ent = measures.cce_decomposition(p, p)
        assert ang == pytest.approx(0.0, abs=1e-15)
        assert ang + ent == pytest.approx(measures.collision_entropy(p), abs=1e-12)

    def test_orthogonal_infinite_angle(self):
        ang, _ = measures.cce_decomposition([1.0, 0.0], [0.0, 1.0])
        assert ang == np.inf

    def test_sum_identity(self):
        rng = np.random.default_rng(10)
        for _ in range(1000):
            K = int(rng.integers(2, 15))
            p, q = random_probvecs(rng, 2, K)
            ang, ent = measures.cce_decomposition(p, q)
            assert ang + ent == pytest.approx(
                measures.collision_cross_entropy(p, q), abs=1e-12)

    def test_angular_nonnegative(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            p, q = random_probvecs(rng, 2, 5)
            ang, _ = measures.cce_decomposition(p, q)
            assert ang >= -1e-15


class TestMiLoss:
    def test_balanced_one_hot(self):
        K = 4
        P = np.tile(np.eye(K), (3, 1))
        assert measures.mi_loss_estimate(P) == pytest.approx(-np.log(K), abs=1e-12)

    def test_identical_uniform(self):
        P = np.full((6, 5), 0.2)
        assert measures.mi_loss_estimate(P) == pytest.approx(0.0, abs=1e-12)

    def test_repeated_one_hot_same_class(self):
        P = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert measures.mi_loss_estimate(P) == pytest.approx(0.0, abs=1e-12)

    def test_empty_batch(self):
        with pytest.raises(EmptyBatchError):
            measures.mi_loss_estimate(np.empty((0, 3)))
