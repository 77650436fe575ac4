import itertools

import numpy as np
import pytest

from sparseobs.exceptions import BatchOutOfRange, DimensionMismatch
from sparseobs.objectives import LeastSquaresObjective, SmoothnessProbe, probe_constants


def finite_diff_gradient(fun, theta, rel_step=1e-6):
    """Central differences with the step scaled per coordinate."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(theta.shape[0]):
        h = rel_step * (1.0 + abs(theta[i]))
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fun(up) - fun(dn)) / (2.0 * h)
    return grad


class TestLeastSquares:
    def test_exact_fit(self):
        obj = LeastSquaresObjective(np.eye(2), [1.0, 0.0])
        assert obj.value([1.0, 0.0]) == 0.0
        np.testing.assert_allclose(obj.gradient([1.0, 0.0]), [0.0, 0.0])

    def test_identity_design(self):
        obj = LeastSquaresObjective(np.eye(2), [0.0, 0.0])
        assert obj.value([1.0, 1.0]) == 2.0
        np.testing.assert_allclose(obj.gradient([1.0, 1.0]), [2.0, 2.0])
        np.testing.assert_allclose(obj.hessian(), 2.0 * np.eye(2))

    def test_gradient_matches_finite_differences(self, rng):
        X = rng.standard_normal((8, 4))
        y = rng.standard_normal(8)
        obj = LeastSquaresObjective(X, y)
        theta = rng.standard_normal(4)
        fd = finite_diff_gradient(obj.value, theta)
        grad = obj.gradient(theta)
        assert np.linalg.norm(grad - fd) <= 1e-5 * max(np.linalg.norm(grad), 1.0)

    def test_hessian_is_gradient_derivative(self, rng):
        X = rng.standard_normal((10, 5))
        obj = LeastSquaresObjective(X, rng.standard_normal(10))
        theta = rng.standard_normal(5)
        w = rng.standard_normal(5)
        w /= np.linalg.norm(w)
        eps = 1e-6
        fd = (obj.gradient(theta + eps * w) - obj.gradient(theta - eps * w)) / (2 * eps)
        hw = obj.hessian() @ w
        assert np.linalg.norm(hw - fd) <= 1e-5 * max(np.linalg.norm(hw), 1.0)

    def test_hessian_symmetric(self, rng):
        X = rng.standard_normal((9, 6))
        obj = LeastSquaresObjective(X, rng.standard_normal(9))
        h = obj.hessian()
        assert np.max(np.abs(h - h.T)) <= 1e-12

    def test_noiseless_optimum_has_zero_gradient(self, rng):
        X = rng.standard_normal((12, 6))
        theta_star = rng.standard_normal(6)
        obj = LeastSquaresObjective(X, X @ theta_star)
        g = obj.gradient(theta_star)
        assert np.linalg.norm(g) <= 1e-10 * np.linalg.norm(X)

    def test_dimension_mismatch(self):
        obj = LeastSquaresObjective(np.eye(3), [1.0, 2.0, 3.0])
        with pytest.raises(DimensionMismatch):
            obj.value([1.0, 2.0])


class TestStochasticGradient:
    def test_full_batch_equals_gradient(self, rng):
        X = rng.standard_normal((6, 4))
        obj = LeastSquaresObjective(X, rng.standard_normal(6))
        theta = rng.standard_normal(4)
        g = obj.stochastic_gradient(theta, rng, batch_size=6)
        np.testing.assert_allclose(g, obj.gradient(theta), rtol=1e-12)

    @pytest.mark.parametrize("n,b", [(3, 1), (4, 2)])
    def test_enumerated_batches_average_to_gradient(self, rng, n, b):
        X = rng.standard_normal((n, 3))
        y = rng.standard_normal(n)
        obj = LeastSquaresObjective(X, y)
        theta = rng.standard_normal(3)
        total = np.zeros(3)
        count = 0
        for rows in itertools.combinations(range(n), b):
            rows = list(rows)
            total += (n / b) * 2.0 * (X[rows].T @ (X[rows] @ theta - y[rows]))
            count += 1
        mean = total / count
        assert np.linalg.norm(mean - obj.gradient(theta)) <= 1e-12 * max(
            1.0, np.linalg.norm(mean)
        )

    def test_sample_is_one_of_the_enumerated_values(self, rng):
        X = rng.standard_normal((4, 2))
        y = rng.standard_normal(4)
        obj = LeastSquaresObjective(X, y)
        theta = rng.standard_normal(2)
        candidates = []
        for rows in itertools.combinations(range(4), 2):
            rows = list(rows)
            candidates.append((4 / 2) * 2.0 * (X[rows].T @ (X[rows] @ theta - y[rows])))
        g = obj.stochastic_gradient(theta, rng, batch_size=2)
        assert any(np.allclose(g, c) for c in candidates)

    def test_batch_out_of_range(self, rng):
        obj = LeastSquaresObjective(np.eye(3), [1.0, 2.0, 3.0])
        with pytest.raises(BatchOutOfRange):
            obj.stochastic_gradient([0.0, 0.0, 0.0], rng, batch_size=0)
        with pytest.raises(BatchOutOfRange):
            obj.stochastic_gradient([0.0, 0.0, 0.0], rng, batch_size=4)


class TestProbeConstants:
    def test_constant_hessian_has_zero_lipschitz(self, rng):
        X = rng.standard_normal((8, 4))
        obj = LeastSquaresObjective(X, rng.standard_normal(8))
        probe = probe_constants(obj, [rng.standard_normal(4) for _ in range(3)], k=2, rng=rng)
        assert probe.hessian_lipschitz == 0.0

    def test_identity_design_constants(self, rng):
        obj = LeastSquaresObjective(np.eye(4), np.zeros(4))
        probe = probe_constants(obj, [np.zeros(4)], k=2, rng=rng)
        assert probe.strong_convexity == pytest.approx(2.0, rel=1e-8)
        assert probe.restricted_smoothness == pytest.approx(2.0, rel=1e-8)

    def test_mu_matches_dense_eigensolver(self, rng):
        X = rng.standard_normal((20, 8))
        obj = LeastSquaresObjective(X, rng.standard_normal(20))
        probe = probe_constants(obj, [np.zeros(8)], k=3, rng=rng)
        truth = float(np.linalg.eigvalsh(obj.hessian())[0])
        assert abs(probe.strong_convexity - truth) <= 1e-6 * max(truth, 1.0)

    def test_mu_does_not_exceed_smoothness(self, rng):
        X = rng.standard_normal((16, 6))
        obj = LeastSquaresObjective(X, rng.standard_normal(16))
        probe = probe_constants(obj, [rng.standard_normal(6) for _ in range(2)], k=2, rng=rng)
        assert probe.strong_convexity <= probe.restricted_smoothness

    def test_invalid_constants_rejected(self):
        with pytest.raises(ValueError):
            SmoothnessProbe(strong_convexity=2.0, restricted_smoothness=1.0, hessian_lipschitz=0.0)
        with pytest.raises(ValueError):
            SmoothnessProbe(strong_convexity=-1.0, restricted_smoothness=1.0, hessian_lipschitz=0.0)

    def test_requires_samples(self, rng):
        obj = LeastSquaresObjective(np.eye(2), [0.0, 0.0])
        with pytest.raises(ValueError):
            probe_constants(obj, [], k=1, rng=rng)
