"""Input validation helpers: canonical float64 arrays with finiteness checks."""

import numpy as np

from .exceptions import DimensionMismatch


def as_vector(x, dim=None, name="vector"):
    """Return ``x`` as a finite, 1-D float64 array.

    Raises DimensionMismatch if ``x`` is not 1-D or does not have length
    ``dim`` (when given), and ValueError on NaN/inf entries.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_matrix(x, shape=None, square=False, name="matrix"):
    """Return ``x`` as a finite, 2-D float64 array, optionally shape-checked."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise DimensionMismatch(f"{name} has shape {m.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m
