"""Second-order layerwise pruning.

A row of a linear layer is pruned by repeated single-weight removal: score
each active weight by weight^2 / (H^-1)_ii, remove the cheapest, compensate
the remaining weights through the inverse-Hessian column, and downdate the
inverse.  For quadratic reconstruction losses the accumulated compensations
land exactly on the restricted least-squares optimum of the final mask.

The iterative loop alternates layerwise pruning on a fresh calibration batch
with one dense gradient step (no mask is enforced between rounds), and ends
with a terminal prune so the returned network satisfies the budget.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .exceptions import (
    DimensionMismatch,
    KOutOfRange,
    NonFiniteLoss,
    NumericallySingularDiagonal,
)
from .sparsity import Mask
from .validation import as_matrix, as_vector

DIAG_RTOL = 1e-12
DEFAULT_DAMP_FRACTION = 0.01


def default_damp(gram):
    """Dampening scaled to the matrix: 0.01 times the mean diagonal."""
    gram = as_matrix(gram, square=True)
    return DEFAULT_DAMP_FRACTION * float(np.mean(np.diag(gram)))


@dataclass(frozen=True)
class PruneDecision:
    """Chosen coordinate, its saliency score, and the compensating update."""

    index: int
    score: float
    delta: np.ndarray


def _check_diagonal(h_inv, positions=None):
    d = h_inv.shape[0]
    thresh = DIAG_RTOL * float(np.trace(h_inv)) / d
    diag = np.diag(h_inv) if positions is None else np.diag(h_inv)[positions]
    if np.any(diag <= thresh):
        raise NumericallySingularDiagonal(
            f"inverse-Hessian diagonal at or below {thresh:.3e}; increase damp"
        )


def obs_remove_one(theta, h_inv, active):
    """Pick the cheapest active weight to zero and its compensation.

    ``h_inv`` is the inverse Hessian restricted to the active coordinates
    (rows/cols in active index order).  The score of coordinate i is
    theta_i^2 / (H^-1)_ii; ties resolve to the lowest index.  The returned
    delta is full-dimensional and zeroes the chosen coordinate exactly.
    """
    theta = as_vector(theta)
    h_inv = as_matrix(h_inv, square=True)
    if len(active) == 0:
        raise ValueError("active set must be nonempty")
    if h_inv.shape[0] != len(active):
        raise DimensionMismatch(
            f"h_inv is {h_inv.shape[0]}x{h_inv.shape[0]} but active set has {len(active)} entries"
        )
    _check_diagonal(h_inv)
    act = active.array
    diag = np.diag(h_inv)
    scores = theta[act] ** 2 / diag
    j = int(np.argmin(scores))  # argmin returns the first minimum: lowest index
    index = int(act[j])
    delta = np.zeros_like(theta)
    delta[act] = -(theta[index] / diag[j]) * h_inv[:, j]
    delta[index] = -theta[index]
    return PruneDecision(index=index, score=float(scores[j]), delta=delta)


def shrink_inverse(h_inv, i):
    """Downdate an inverse after deleting row/column ``i`` of the original matrix.

    One rank-one correction keeps the result equal to the direct inverse of
    the shrunken matrix.
    """
    h_inv = as_matrix(h_inv, square=True)
    d = h_inv.shape[0]
    if not 0 <= i < d:
        raise KOutOfRange(f"index {i} outside [0, {d})")
    _check_diagonal(h_inv, positions=[i])
    col = h_inv[:, i]
    out = h_inv - np.outer(col, col) / h_inv[i, i]
    out = np.delete(np.delete(out, i, axis=0), i, axis=1)
    return 0.5 * (out + out.T)


def prune_row_greedy(w_row, h_layer, damp, k_row):
    """Reduce a weight row to ``k_row`` nonzeros by repeated removal.

    Returns ``(pruned_row, recon_loss)`` where the loss is the quadratic
    reconstruction error 0.5 * delta^T H delta of the final row against the
    original (H being the undamped layer Hessian).
    """
    w_row = as_vector(w_row)
    d_in = w_row.shape[0]
    if k_row < 0 or k_row > d_in:
        raise KOutOfRange(f"k_row={k_row} outside [0, {d_in}]")
    h_layer = linalg.symmetrize(h_layer)
    if h_layer.shape[0] != d_in:
        raise DimensionMismatch(
            f"layer Hessian is {h_layer.shape[0]}x{h_layer.shape[0]}, row has {d_in}"
        )
    if k_row == d_in:
        return w_row.copy(), 0.0

    h_inv = linalg.inverse(linalg.cholesky(h_layer, damp))
    w = w_row.copy()
    active = Mask.full(d_in)
    for _ in range(d_in - k_row):
        decision = obs_remove_one(w, h_inv, active)
        w = w + decision.delta
        w[decision.index] = 0.0
        pos = active.indices.index(decision.index)
        h_inv = shrink_inverse(h_inv, pos)
        active = active.without(decision.index)
    delta = w - w_row
    loss = 0.5 * float(delta @ h_layer @ delta)
    return w, loss


@dataclass
class LayerProblem:
    """One linear layer plus the calibration Gram matrix of its inputs.

    ``gram`` is 2 * C C^T for calibration inputs C (d_in x n_samples), the
    Hessian of the row-wise reconstruction loss ||w C - w_hat C||^2.
    ``damp=None`` selects the scaled default.
    """

    weights: np.ndarray
    gram: np.ndarray
    k_row: int
    damp: Optional[float] = None

    def __post_init__(self):
        self.weights = as_matrix(self.weights, name="weights")
        self.gram = as_matrix(self.gram, square=True, name="gram")
        if self.gram.shape[0] != self.weights.shape[1]:
            raise DimensionMismatch("gram dimension must match the layer input width")
        if self.k_row < 0 or self.k_row > self.weights.shape[1]:
            raise KOutOfRange(f"k_row={self.k_row} outside [0, {self.weights.shape[1]}]")
        if self.damp is None:
            self.damp = default_damp(self.gram)

    @classmethod
    def from_calibration(cls, weights, inputs, k_row, damp=None):
        """Build from raw calibration inputs (d_in x n_samples)."""
        inputs = as_matrix(inputs, name="inputs")
        return cls(weights=weights, gram=2.0 * (inputs @ inputs.T), k_row=k_row, damp=damp)


def prune_layer(problem):
    """Prune every row of the layer independently against the shared Gram.

    Returns ``(pruned_weights, row_losses)``.
    """
    out = np.empty_like(problem.weights)
    losses = np.empty(problem.weights.shape[0])
    for r in range(problem.weights.shape[0]):
        out[r], losses[r] = prune_row_greedy(
            problem.weights[r], problem.gram, problem.damp, problem.k_row
        )
    return out, losses


_ACTIVATIONS = ("relu", "identity")


class TinyMlp:
    """Feedforward net as a list of (weight matrix, activation name) pairs.

    Inputs are column-major: X has shape (d_in, n_samples).  The training
    loss is the mean squared error over the batch against teacher outputs,
    summed over output coordinates.
    """

    def __init__(self, layers):
        self.layers = []
        prev = None
        for weight, activation in layers:
            weight = as_matrix(weight, name="layer weight")
            if activation not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {activation!r}")
            if prev is not None and weight.shape[1] != prev:
                raise DimensionMismatch("consecutive layer dimensions are incompatible")
            prev = weight.shape[0]
            self.layers.append((weight, activation))

    def copy(self):
        return TinyMlp([(w.copy(), act) for w, act in self.layers])

    def layer_inputs(self, X):
        """Input seen by each layer (the first entry is X itself)."""
        X = as_matrix(X, name="X")
        inputs = [X]
        h = X
        for weight, activation in self.layers:
            z = weight @ h
            h = np.maximum(z, 0.0) if activation == "relu" else z
            inputs.append(h)
        return inputs[:-1]

    def forward(self, X):
        X = as_matrix(X, name="X")
        h = X
        for weight, activation in self.layers:
            z = weight @ h
            h = np.maximum(z, 0.0) if activation == "relu" else z
        return h

    def loss(self, X, Y):
        Y = as_matrix(Y, name="Y")
        r = self.forward(X) - Y
        return float(np.sum(r * r)) / X.shape[1]


def backprop(mlp, X, Y):
    """Exact loss gradients per layer weight; relu subgradient at 0 is 0."""
    X = as_matrix(X, name="X")
    Y = as_matrix(Y, name="Y")
    n = X.shape[1]
    pre = []
    post = [X]
    h = X
    for weight, activation in mlp.layers:
        z = weight @ h
        pre.append(z)
        h = np.maximum(z, 0.0) if activation == "relu" else z
        post.append(h)
    if post[-1].shape != Y.shape:
        raise DimensionMismatch(f"output shape {post[-1].shape} != target shape {Y.shape}")
    grad_h = 2.0 * (post[-1] - Y) / n
    grads = [None] * len(mlp.layers)
    for idx in range(len(mlp.layers) - 1, -1, -1):
        weight, activation = mlp.layers[idx]
        grad_z = grad_h * (pre[idx] > 0.0) if activation == "relu" else grad_h
        grads[idx] = grad_z @ post[idx].T
        grad_h = weight.T @ grad_z
    return grads


@dataclass(frozen=True)
class PruneRoundRecord:
    round: int
    layer: int
    recon_loss: float
    train_loss: float
    sparsity: float


def _prune_all_layers(mlp, X, k_rows, damp):
    """Prune layers in order, recomputing downstream inputs as weights change."""
    recon = []
    h = X
    for idx, (weight, activation) in enumerate(mlp.layers):
        problem = LayerProblem.from_calibration(weight, h, k_rows[idx], damp)
        pruned, losses = prune_layer(problem)
        mlp.layers[idx] = (pruned, activation)
        recon.append(float(np.sum(losses)))
        z = pruned @ h
        h = np.maximum(z, 0.0) if activation == "relu" else z
    return recon


def _layer_sparsity(weight):
    return float(np.count_nonzero(weight == 0.0)) / weight.size


def iterative_prune_loop(mlp, data_gen, rounds, lr, k_rows, rng, damp=None):
    """Alternate layerwise pruning and one dense gradient step per round.

    ``data_gen(rng)`` yields a ``(X, Y)`` calibration batch.  After the last
    round a terminal prune (on a fresh batch) restores the sparsity budget
    that the dense step relaxed.  Returns ``(pruned_mlp, records)``.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if len(k_rows) != len(mlp.layers):
        raise DimensionMismatch("need one per-row budget per layer")
    model = mlp.copy()
    records = []
    for t in range(1, rounds + 1):
        X, Y = data_gen(rng)
        recon = _prune_all_layers(model, X, k_rows, damp)
        train_loss = model.loss(X, Y)
        if not math.isfinite(train_loss):
            raise NonFiniteLoss(f"round {t}: training loss {train_loss}")
        for idx in range(len(model.layers)):
            records.append(
                PruneRoundRecord(
                    round=t, layer=idx, recon_loss=recon[idx],
                    train_loss=train_loss, sparsity=_layer_sparsity(model.layers[idx][0]),
                )
            )
        if lr != 0.0:
            grads = backprop(model, X, Y)
            for idx, (weight, activation) in enumerate(model.layers):
                model.layers[idx] = (weight - lr * grads[idx], activation)

    X, Y = data_gen(rng)
    recon = _prune_all_layers(model, X, k_rows, damp)
    train_loss = model.loss(X, Y)
    if not math.isfinite(train_loss):
        raise NonFiniteLoss(f"terminal prune: training loss {train_loss}")
    for idx in range(len(model.layers)):
        records.append(
            PruneRoundRecord(
                round=rounds + 1, layer=idx, recon_loss=recon[idx],
                train_loss=train_loss, sparsity=_layer_sparsity(model.layers[idx][0]),
            )
        )
    return model, records
