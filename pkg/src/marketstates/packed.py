"""Packed upper-triangle storage for symmetric matrices.

Every symmetric matrix in this package is stored as its upper triangle,
diagonal included, flattened row-major: entry (i, j) with i <= j lives at
``i*n - i*(i-1)//2 + (j - i)``. A matrix of dimension n packs into
``n*(n+1)//2`` float64 values.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def packed_length(dim: int) -> int:
    return dim * (dim + 1) // 2


def dim_from_length(length: int) -> int:
    """Matrix dimension whose packed upper triangle has ``length`` entries."""
    dim = int((np.sqrt(8 * length + 1) - 1) / 2)
    for cand in (dim - 1, dim, dim + 1):
        if cand > 0 and packed_length(cand) == length:
            return cand
    raise ValueError(f"{length} is not a triangular-with-diagonal length")


@lru_cache(maxsize=128)
def upper_indices(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the packed entries, in packing order."""
    rows, cols = np.triu_indices(dim)
    rows.flags.writeable = False
    cols.flags.writeable = False
    return rows, cols


@lru_cache(maxsize=128)
def diagonal_positions(dim: int) -> np.ndarray:
    """Packed positions holding the diagonal entries (i, i)."""
    i = np.arange(dim)
    pos = i * dim - i * (i - 1) // 2
    pos.flags.writeable = False
    return pos


@lru_cache(maxsize=128)
def strict_upper_mask(dim: int) -> np.ndarray:
    """Boolean mask over packed entries that excludes the diagonal."""
    mask = np.ones(packed_length(dim), dtype=bool)
    mask[diagonal_positions(dim)] = False
    mask.flags.writeable = False
    return mask


def pack(square: np.ndarray) -> np.ndarray:
    """Pack a symmetric square matrix; only the upper triangle is read."""
    square = np.asarray(square, dtype=np.float64)
    if square.ndim != 2 or square.shape[0] != square.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {square.shape}")
    rows, cols = upper_indices(square.shape[0])
    return square[rows, cols].copy()


def unpack(packed: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Expand a packed vector back to the full symmetric matrix."""
    packed = np.asarray(packed, dtype=np.float64)
    if dim is None:
        dim = dim_from_length(packed.shape[-1])
    rows, cols = upper_indices(dim)
    full = np.empty((dim, dim), dtype=np.float64)
    full[rows, cols] = packed
    full[cols, rows] = packed
    return full


def packed_l1(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of absolute entrywise differences between two packed vectors."""
    return float(np.abs(np.asarray(a) - np.asarray(b)).sum())
