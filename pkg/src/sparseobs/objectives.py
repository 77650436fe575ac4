"""Twice-differentiable objectives and empirical curvature probes.

The linear-measurement least-squares objective uses the internally consistent
calculus

    value(theta)    = ||y - X theta||^2
    gradient(theta) = 2 X^T (X theta - y)
    hessian(theta)  = 2 X^T X

i.e. the Hessian is exactly the derivative of the gradient.  Auto step sizes
are computed from this Hessian, so the overall iteration is invariant to the
constant factor.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .exceptions import BatchOutOfRange
from .validation import as_matrix, as_vector


class Objective:
    """Interface: dimension ``d`` plus value/gradient/hessian at a point.

    Implementations with cheap mini-batch gradients additionally provide
    ``stochastic_gradient(theta, rng, batch_size)`` returning an unbiased
    estimate of the full gradient.
    """

    d = 0
    constant_hessian = False

    def value(self, theta):
        raise NotImplementedError

    def gradient(self, theta):
        raise NotImplementedError

    def hessian(self, theta):
        raise NotImplementedError


class LeastSquaresObjective(Objective):
    """||y - X theta||^2 for an n x d sensing matrix X."""

    constant_hessian = True

    def __init__(self, X, y):
        self.X = as_matrix(X, name="X")
        self.y = as_vector(y, dim=self.X.shape[0], name="y")
        self._hessian = None

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def value(self, theta):
        theta = as_vector(theta, dim=self.d, name="theta")
        r = self.y - self.X @ theta
        return float(r @ r)

    def gradient(self, theta):
        theta = as_vector(theta, dim=self.d, name="theta")
        return 2.0 * (self.X.T @ (self.X @ theta - self.y))

    def hessian(self, theta=None):
        if self._hessian is None:
            self._hessian = 2.0 * (self.X.T @ self.X)
        return self._hessian

    def stochastic_gradient(self, theta, rng, batch_size):
        """Unbiased mini-batch gradient from a uniform without-replacement row subset.

        Scaled by n/b so the average over all C(n, b) subsets equals the full
        gradient exactly.
        """
        theta = as_vector(theta, dim=self.d, name="theta")
        n = self.n
        if batch_size < 1 or batch_size > n:
            raise BatchOutOfRange(f"batch_size={batch_size} outside [1, {n}]")
        rows = rng.choice(n, size=batch_size, replace=False)
        Xb = self.X[rows]
        yb = self.y[rows]
        return (n / batch_size) * 2.0 * (Xb.T @ (Xb @ theta - yb))


@dataclass(frozen=True)
class SmoothnessProbe:
    """Empirical curvature constants: diagnostics only, solvers never need them."""

    strong_convexity: float      # min Hessian eigenvalue over the sample points
    restricted_smoothness: float  # max v^T H v over sparse unit directions
    hessian_lipschitz: float     # max ||H - H'||_2 / ||theta - theta'||_2

    def __post_init__(self):
        if self.strong_convexity < 0 or self.restricted_smoothness < 0 or self.hessian_lipschitz < 0:
            raise ValueError("probe constants must be nonnegative")
        if self.strong_convexity > self.restricted_smoothness + 1e-9:
            raise ValueError("strong convexity estimate exceeds smoothness estimate")


def probe_constants(obj, theta_samples, k, rng=None, n_directions=64):
    """Estimate curvature constants of ``obj`` from sample points.

    strong_convexity: smallest Hessian eigenvalue seen (shifted power iteration).
    restricted_smoothness: largest Rayleigh quotient over random (d-k)-sparse
    unit directions.
    hessian_lipschitz: largest spectral-norm difference quotient over sample
    pairs (zero for constant Hessians).
    """
    samples = [as_vector(t, dim=obj.d, name="theta") for t in theta_samples]
    if not samples:
        raise ValueError("need at least one sample point")
    rng = rng or np.random.default_rng(0)
    d = obj.d
    sparsity = d - k if d - k >= 1 else d

    hessians = [linalg.symmetrize(obj.hessian(t)) for t in samples]
    mu = min(linalg.lambda_min(h).value for h in hessians)

    big_l = 0.0
    for h in hessians:
        for _ in range(n_directions):
            idx = rng.choice(d, size=sparsity, replace=False)
            v = np.zeros(d)
            v[idx] = rng.standard_normal(sparsity)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                continue
            v /= norm
            big_l = max(big_l, float(v @ h @ v))

    big_m = 0.0
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            gap = np.linalg.norm(samples[i] - samples[j])
            if gap == 0.0:
                continue
            diff = linalg.spectral_norm(hessians[i] - hessians[j]).value
            big_m = max(big_m, diff / gap)

    return SmoothnessProbe(
        strong_convexity=max(mu, 0.0),
        restricted_smoothness=max(big_l, max(mu, 0.0)),
        hessian_lipschitz=big_m,
    )
