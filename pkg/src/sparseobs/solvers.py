"""Sparsity-constrained iterative solvers.

Four step rules over a twice-differentiable objective:

* ``iht``        -- gradient step followed by top-k hard thresholding.
* ``topk-iobs``  -- full Newton step followed by top-k hard thresholding.
* ``exact-iobs`` -- Newton step with the prune set chosen by exhaustive
                    search over the curvature cost of zeroing coordinates,
                    then exact re-optimization of the kept coordinates.
* ``stoch-iobs`` -- mini-batch gradient with a curvature-adaptive scalar
                    step size, followed by top-k.

The exact mode is an oracle for small dimensions (the mask search is
combinatorial); the top-k mode is the practical path.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .exceptions import (
    KOutOfRange,
    NotPositiveDefinite,
    SearchTooLarge,
    SingularSubmatrix,
    ZeroGradient,
)
from .sparsity import Mask, restrict, support, top_k
from .validation import as_vector

METHOD_NAMES = ("iht", "topk-iobs", "exact-iobs", "stoch-iobs")

BRUTE_FORCE_DIM_LIMIT = 24
BRUTE_FORCE_CANDIDATE_LIMIT = 2_000_000


@dataclass
class SolverConfig:
    """Knobs shared by all methods; stochastic fields are ignored elsewhere.

    ``eta="auto"`` resolves to 1/lambda_max of the Hessian at the starting
    point.  ``tol=0`` runs the full iteration budget.
    """

    k: int
    max_iters: int = 750
    eta: object = "auto"
    damp: float = 0.0
    stoch_lambda: float = 1.0
    batch_size: int = 32
    tol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise KOutOfRange(f"sparsity budget k={self.k} must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not (self.eta == "auto" or (isinstance(self.eta, (int, float)) and self.eta > 0)):
            raise ValueError("eta must be 'auto' or a positive real")
        if self.damp < 0:
            raise ValueError("damp must be nonnegative")
        if self.stoch_lambda < 0:
            raise ValueError("stoch_lambda must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")


@dataclass
class TraceRecord:
    t: int
    loss: float
    dist_to_opt: Optional[float] = None
    support_recall: Optional[float] = None
    step_norm: float = 0.0


@dataclass
class SolverState:
    theta: np.ndarray
    t: int
    trace: list = field(default_factory=list)
    converged: bool = False


def resolve_eta(obj, theta, cfg):
    """Concrete step size; 'auto' = 1/lambda_max of the Hessian at theta."""
    if cfg.eta != "auto":
        return float(cfg.eta)
    lam = linalg.lambda_max(obj.hessian(theta)).value
    if lam <= 0:
        raise ValueError("auto step size undefined for a zero Hessian")
    return 1.0 / lam


def iht_step(obj, theta, cfg, eta=None):
    """Hard-thresholded gradient step: top_k(theta - eta * grad)."""
    theta = as_vector(theta, dim=obj.d, name="theta")
    if eta is None:
        eta = resolve_eta(obj, theta, cfg)
    out, _ = top_k(theta - eta * obj.gradient(theta), cfg.k)
    return out


def _newton_parts(obj, theta, damp):
    """Dense Newton point and inverse Hessian at theta (damped)."""
    theta = as_vector(theta, dim=obj.d, name="theta")
    factor = linalg.cholesky(obj.hessian(theta), damp)
    theta_plus = theta - linalg.solve(factor, obj.gradient(theta))
    return theta_plus, linalg.inverse(factor)


def _pruned_multiplier(h_inv, theta_plus, s_idx):
    """Solve the |S| x |S| system (H^-1)[S,S] z = theta_plus[S]."""
    block = h_inv[np.ix_(s_idx, s_idx)]
    try:
        bfac = linalg.cholesky(block, 0.0)
    except NotPositiveDefinite as exc:
        raise SingularSubmatrix(
            "inverse-Hessian principal block is not positive definite; increase damp"
        ) from exc
    return linalg.solve(bfac, theta_plus[s_idx])


def masked_newton_update(obj, theta, prune_set, damp=0.0):
    """Newton step constrained to zero out the coordinates in ``prune_set``.

    Solves the local quadratic model exactly subject to the equality
    constraints; the kept coordinates absorb the effect of the pruned ones
    through the inverse-Hessian coupling.  The result is exactly zero on the
    prune set.
    """
    if prune_set.dim != obj.d:
        raise KOutOfRange(f"prune set ambient dim {prune_set.dim} != objective dim {obj.d}")
    if len(prune_set) >= obj.d:
        raise KOutOfRange("prune set must leave at least one active coordinate")
    theta_plus, h_inv = _newton_parts(obj, theta, damp)
    if len(prune_set) == 0:
        return theta_plus
    s_idx = prune_set.array
    z = _pruned_multiplier(h_inv, theta_plus, s_idx)
    out = theta_plus - h_inv[:, s_idx] @ z
    out[s_idx] = 0.0
    return out


def mask_objective(obj, theta, prune_set, damp=0.0):
    """Curvature cost of zeroing ``prune_set``: the quantity the exact mask
    search minimizes.  Equals twice the quadratic-model increase caused by
    the constraint."""
    if prune_set.dim != obj.d:
        raise KOutOfRange(f"prune set ambient dim {prune_set.dim} != objective dim {obj.d}")
    if len(prune_set) >= obj.d:
        raise KOutOfRange("prune set must leave at least one active coordinate")
    theta_plus, h_inv = _newton_parts(obj, theta, damp)
    if len(prune_set) == 0:
        return 0.0
    s_idx = prune_set.array
    z = _pruned_multiplier(h_inv, theta_plus, s_idx)
    return float(theta_plus[s_idx] @ z)


def _check_search_size(d, k):
    n_masks = math.comb(d, d - k)
    if d > BRUTE_FORCE_DIM_LIMIT and n_masks > BRUTE_FORCE_CANDIDATE_LIMIT:
        raise SearchTooLarge(
            f"d={d} with C({d},{d - k})={n_masks} masks exceeds brute-force limits"
        )


def select_mask_exact(obj, theta, k, damp=0.0):
    """Prune set of size d-k minimizing the curvature cost, by enumeration.

    Ties resolve to the lexicographically smallest index list.  The search is
    exponential; guarded by the brute-force limits.
    """
    d = obj.d
    if k < 1 or k > d:
        raise KOutOfRange(f"k={k} outside [1, {d}]")
    _check_search_size(d, k)
    if k == d:
        return Mask.empty(d)
    theta_plus, h_inv = _newton_parts(obj, theta, damp)
    best_val = np.inf
    best = None
    for combo in itertools.combinations(range(d), d - k):
        s_idx = np.asarray(combo, dtype=np.intp)
        z = _pruned_multiplier(h_inv, theta_plus, s_idx)
        val = float(theta_plus[s_idx] @ z)
        if val < best_val:
            best_val = val
            best = combo
    return Mask(d, best)


def iobs_step_exact(obj, theta, cfg):
    """One exact step: optimal prune set, then the constrained Newton update."""
    prune = select_mask_exact(obj, theta, cfg.k, cfg.damp)
    if len(prune) == 0:
        theta_plus, _ = _newton_parts(obj, theta, cfg.damp)
        return theta_plus
    return masked_newton_update(obj, theta, prune, cfg.damp)


def iobs_step_topk(obj, theta, cfg):
    """One practical step: top_k of the dense Newton point."""
    theta = as_vector(theta, dim=obj.d, name="theta")
    factor = linalg.cholesky(obj.hessian(theta), cfg.damp)
    theta_plus = theta - linalg.solve(factor, obj.gradient(theta))
    out, _ = top_k(theta_plus, cfg.k)
    return out


def stochastic_step_size(g, keep, lam):
    """Scalar step 1 / (lambda + ||g_keep||^2 / ||g||) for the stochastic rule.

    The curvature term is taken as 0 when the gradient vanishes.  Raises
    ZeroGradient when the whole denominator is zero (lambda = 0 and no
    usable gradient signal).
    """
    g = as_vector(g)
    norm_g = float(np.linalg.norm(g))
    term = 0.0
    if norm_g > 0.0:
        kept = restrict(g, keep)
        term = float(kept @ kept) / norm_g
    denom = lam + term
    if denom <= 0.0:
        raise ZeroGradient("step size undefined: lambda + gradient term is zero")
    return 1.0 / denom


def fixed_mask_stochastic_update(theta, g, lam, keep):
    """Closed-form minimizer of the rank-one-regularized model on a fixed mask."""
    theta = as_vector(theta)
    eta = stochastic_step_size(g, keep, lam)
    return restrict(theta - eta * g, keep)


def stochastic_iobs_step(obj, theta, cfg, rng):
    """Mini-batch step: adaptive scalar step size from the current support,
    then top-k.

    At a zero iterate the support is empty, so the step size degenerates to
    1/lambda by construction.
    """
    theta = as_vector(theta, dim=obj.d, name="theta")
    g = obj.stochastic_gradient(theta, rng, cfg.batch_size)
    eta = stochastic_step_size(g, support(theta), cfg.stoch_lambda)
    out, _ = top_k(theta - eta * g, cfg.k)
    return out


def quadratic_model_value(obj, theta_t, theta, damp=0.0):
    """Local quadratic model m(theta) = g^T d + 0.5 d^T (H + damp I) d, d = theta - theta_t."""
    theta_t = as_vector(theta_t, dim=obj.d)
    theta = as_vector(theta, dim=obj.d)
    delta = theta - theta_t
    h = linalg.symmetrize(obj.hessian(theta_t)) + damp * np.eye(obj.d)
    return float(obj.gradient(theta_t) @ delta + 0.5 * delta @ h @ delta)


def _make_record(obj, theta, t, step_norm, theta_star, star_support, k_star):
    dist = None
    recall = None
    if theta_star is not None:
        dist = float(np.linalg.norm(theta - theta_star))
        if k_star == 0:
            recall = 1.0
        else:
            hits = len(set(np.flatnonzero(theta)) & star_support)
            recall = hits / k_star
    return TraceRecord(
        t=t, loss=float(obj.value(theta)), dist_to_opt=dist,
        support_recall=recall, step_norm=float(step_norm),
    )


def run(obj, method, theta0, cfg, theta_star=None):
    """Iterate the chosen step rule, recording one trace row per iteration.

    Runs ``max_iters`` steps, or stops early once the step norm falls to
    ``cfg.tol`` (when tol > 0).  The t=0 row records the starting point.
    """
    if method not in METHOD_NAMES:
        raise ValueError(f"unknown method {method!r}; expected one of {METHOD_NAMES}")
    theta = as_vector(theta0, dim=obj.d, name="theta0").copy()
    if cfg.k > obj.d:
        raise KOutOfRange(f"k={cfg.k} exceeds dimension {obj.d}")
    star_support = set()
    k_star = 0
    if theta_star is not None:
        theta_star = as_vector(theta_star, dim=obj.d, name="theta_star")
        star_support = set(np.flatnonzero(theta_star))
        k_star = len(star_support)

    rng = np.random.default_rng(cfg.seed)
    eta = resolve_eta(obj, theta, cfg) if method == "iht" else None
    steps = {
        "iht": lambda th: iht_step(obj, th, cfg, eta=eta),
        "topk-iobs": lambda th: iobs_step_topk(obj, th, cfg),
        "exact-iobs": lambda th: iobs_step_exact(obj, th, cfg),
        "stoch-iobs": lambda th: stochastic_iobs_step(obj, th, cfg, rng),
    }
    step = steps[method]

    trace = [_make_record(obj, theta, 0, 0.0, theta_star, star_support, k_star)]
    converged = False
    for t in range(1, cfg.max_iters + 1):
        try:
            new_theta = step(theta)
        except ZeroGradient:
            converged = True
            break
        step_norm = float(np.linalg.norm(new_theta - theta))
        theta = new_theta
        trace.append(_make_record(obj, theta, t, step_norm, theta_star, star_support, k_star))
        if cfg.tol > 0.0 and step_norm <= cfg.tol:
            converged = True
            break
    return SolverState(theta=theta, t=trace[-1].t, trace=trace, converged=converged)
