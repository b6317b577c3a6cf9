"""Deterministic seed derivation.

Restart loops, grid cells, and bootstrap replicas each get their own seed
derived from a single user seed, so results are reproducible and do not
depend on the execution schedule. The derivation is the splitmix64 output
stream: ``subseed(seed, i)`` is the i-th value emitted by a splitmix64
generator whose state starts at ``seed``.
"""

from __future__ import annotations

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(x: int) -> int:
    # splitmix64 finalizer (Steele, Lea & Flood 2014)
    x = x & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def subseed(seed: int, index: int) -> int:
    """The ``index``-th 64-bit sub-seed in the stream rooted at ``seed``."""
    if index < 0:
        raise ValueError("index must be nonnegative")
    return _mix((seed + (index + 1) * _GOLDEN) & _MASK)
