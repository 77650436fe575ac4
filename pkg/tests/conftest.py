import numpy as np
import pytest

from sparseobs.objectives import Objective


def random_spd(rng, d, jitter=0.5):
    """Well-conditioned random SPD matrix: Gram of a tall Gaussian plus jitter*I."""
    a = rng.standard_normal((2 * d, d))
    return a.T @ a / (2 * d) + jitter * np.eye(d)


def random_sparse(rng, d, k):
    """Vector with exactly k standard-normal entries on a random support."""
    v = np.zeros(d)
    idx = rng.choice(d, size=k, replace=False)
    v[idx] = rng.standard_normal(k)
    return v


class Quadratic(Objective):
    """f(theta) = 0.5 (theta - m)^T A (theta - m) with SPD A; minimizer m."""

    constant_hessian = True

    def __init__(self, a, minimizer):
        self.a = np.asarray(a, dtype=np.float64)
        self.m = np.asarray(minimizer, dtype=np.float64)
        self.d = self.m.shape[0]

    def value(self, theta):
        delta = np.asarray(theta) - self.m
        return float(0.5 * delta @ self.a @ delta)

    def gradient(self, theta):
        return self.a @ (np.asarray(theta) - self.m)

    def hessian(self, theta=None):
        return self.a


def random_quadratic(rng, d, k_min=None):
    """Random SPD quadratic with a sparse minimizer (support size k_min or d//3+1)."""
    k = k_min if k_min is not None else d // 3 + 1
    return Quadratic(random_spd(rng, d), random_sparse(rng, d, k))


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)
