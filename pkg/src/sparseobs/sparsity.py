"""Top-k hard thresholding and index-set masks.

Masks are stored as sorted index tuples, never as dense 0/1 matrices; the
coordinate-projection and row-selection products they stand for are realized
as gather/scatter/fancy-indexing.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, KOutOfRange
from .validation import as_matrix, as_vector


@dataclass(frozen=True)
class Mask:
    """A subset of coordinate indices of an ambient dimension ``dim``."""

    dim: int
    indices: tuple = field(default=())

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("ambient dimension must be nonnegative")
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 or i >= self.dim for i in idx):
            raise ValueError(f"mask index out of range [0, {self.dim})")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("mask indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_indices(cls, dim, indices):
        """Build a mask from an arbitrary iterable of unique indices."""
        return cls(dim, tuple(sorted(int(i) for i in indices)))

    @classmethod
    def full(cls, dim):
        return cls(dim, tuple(range(dim)))

    @classmethod
    def empty(cls, dim):
        return cls(dim, ())

    def cardinality(self):
        return len(self.indices)

    def __len__(self):
        return len(self.indices)

    def complement(self):
        """Indices not in this mask; cardinalities sum to ``dim``."""
        members = set(self.indices)
        return Mask(self.dim, tuple(i for i in range(self.dim) if i not in members))

    def without(self, index):
        if index not in self.indices:
            raise ValueError(f"index {index} not in mask")
        return Mask(self.dim, tuple(i for i in self.indices if i != index))

    @property
    def array(self):
        return np.asarray(self.indices, dtype=np.intp)

    def to_text(self):
        """Serialize as ``<d>:i1,i2,...`` (e.g. ``8:0,3,7``)."""
        return f"{self.dim}:" + ",".join(str(i) for i in self.indices)

    @classmethod
    def from_text(cls, text):
        head, _, tail = text.strip().partition(":")
        dim = int(head)
        indices = tuple(int(tok) for tok in tail.split(",") if tok != "")
        return cls(dim, indices)


def top_k(v, k):
    """Keep the k largest-magnitude entries of ``v``; zero the rest.

    Returns ``(vector, mask)``.  Ties in magnitude are broken toward the
    lowest index so the result is deterministic.
    """
    v = as_vector(v)
    d = v.shape[0]
    if k < 0 or k > d:
        raise KOutOfRange(f"k={k} outside [0, {d}]")
    order = np.argsort(-np.abs(v), kind="stable")
    mask = Mask.from_indices(d, order[:k])
    out = np.zeros_like(v)
    out[mask.array] = v[mask.array]
    return out, mask


def support(v):
    """Mask of the exactly-nonzero coordinates of ``v``."""
    v = as_vector(v)
    return Mask(v.shape[0], tuple(np.flatnonzero(v)))


def restrict(v, mask):
    """Same-dimension projection: copy entries on ``mask``, zero elsewhere."""
    v = as_vector(v)
    if mask.dim != v.shape[0]:
        raise DimensionMismatch(f"mask dim {mask.dim} != vector dim {v.shape[0]}")
    out = np.zeros_like(v)
    out[mask.array] = v[mask.array]
    return out


def gather(v, mask):
    """The ``len(mask)``-vector of entries of ``v`` on the mask, in index order."""
    v = as_vector(v)
    if mask.dim != v.shape[0]:
        raise DimensionMismatch(f"mask dim {mask.dim} != vector dim {v.shape[0]}")
    return v[mask.array]


def scatter(values, mask):
    """Inverse of gather: place ``values`` at the mask's indices in a zero vector."""
    values = as_vector(values)
    if values.shape[0] != len(mask):
        raise DimensionMismatch(f"{values.shape[0]} values for a mask of size {len(mask)}")
    out = np.zeros(mask.dim)
    out[mask.array] = values
    return out


def submatrix(h, rows, cols):
    """Extract the |rows| x |cols| block of a square matrix in index order."""
    h = as_matrix(h, square=True)
    if rows.dim != h.shape[0] or cols.dim != h.shape[0]:
        raise DimensionMismatch("mask ambient dims must equal the matrix dimension")
    return h[np.ix_(rows.array, cols.array)]
