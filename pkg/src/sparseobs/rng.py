"""Deterministic per-trial RNG stream derivation.

Trial ``i`` of a benchmark gets its own generator seeded by a splitmix64-style
mix of ``(seed, i)``.  The derivation is a pure function of the pair, so
adding trials never perturbs earlier ones.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z):
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def derive_stream(seed, index):
    """64-bit child seed for stream ``index`` of master ``seed``."""
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    state = (int(seed) + (index + 1) * _GAMMA) & _MASK64
    return int(_mix(state))


def stream_rng(seed, index):
    """numpy Generator for stream ``index`` of master ``seed``."""
    return np.random.default_rng(derive_stream(seed, index))
