"""Rolling correlation matrices, noise suppression, and sector coarse graining.

One Pearson correlation matrix is computed per epoch: a window of
consecutive return days (20 by convention) slid forward by a fixed shift
(1 day by convention). The power map suppresses noise entrywise,
``x -> sign(x) |x|^(1+eps)``, and coarse graining averages correlation
entries over sector-pair blocks, producing the much smaller sectorial
Guhr matrix whose diagonal is no longer 1.

Distances between matrices are L1 sums over the packed upper triangle.
For correlation matrices the diagonal contributes nothing (both are 1);
for Guhr matrices the diagonal is included deliberately, since
intra-sector averages carry state information.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, replace
from datetime import date
from typing import Iterator, NamedTuple

import numpy as np

from . import packed
from .errors import (
    DegenerateColumn,
    DimensionMismatch,
    InsufficientData,
    ParameterRange,
    SingletonSectorWarning,
    ValidationError,
)
from .ingest import ReturnTable, SectorMap


@dataclass(frozen=True)
class EpochSpec:
    """Sliding-window geometry: window length and shift, in trading days."""

    length: int = 20
    shift: int = 1

    def __post_init__(self):
        if self.length < 2:
            raise ParameterRange(f"epoch length must be >= 2, got {self.length}")
        if self.shift < 1:
            raise ParameterRange(f"epoch shift must be >= 1, got {self.shift}")

    def window_count(self, rows: int) -> int:
        """Number of epochs available over ``rows`` return days."""
        if rows < self.length:
            raise InsufficientData(
                f"{rows} return rows < epoch length {self.length}"
            )
        return (rows - self.length) // self.shift + 1


@dataclass(frozen=True)
class CorrMatrix:
    """Packed symmetric correlation matrix for one epoch (unit diagonal)."""

    dim: int
    data: np.ndarray
    epoch_end: date
    epoch_index: int
    tickers: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.data.shape != (packed.packed_length(self.dim),):
            raise ValidationError(
                f"packed data length {self.data.shape} does not match dim {self.dim}"
            )

    def full(self) -> np.ndarray:
        return packed.unpack(self.data, self.dim)


@dataclass(frozen=True)
class GuhrMatrix:
    """Packed sector-level coarse-grained matrix (diagonal not unit)."""

    dim: int
    data: np.ndarray
    epoch_end: date
    sectors: tuple[str, ...]
    epoch_index: int = 0

    def __post_init__(self):
        if self.data.shape != (packed.packed_length(self.dim),):
            raise ValidationError(
                f"packed data length {self.data.shape} does not match dim {self.dim}"
            )
        if len(self.sectors) != self.dim:
            raise ValidationError(
                f"{len(self.sectors)} sector labels for dim {self.dim}"
            )

    def full(self) -> np.ndarray:
        return packed.unpack(self.data, self.dim)


def epoch_correlation(
    returns: ReturnTable,
    start: int,
    spec: EpochSpec,
    epoch_index: int | None = None,
) -> CorrMatrix:
    """Pearson correlation matrix over one window of return rows.

    Covariances use population normalization (divide by window length);
    the choice cancels in the correlation ratio. The diagonal is set to
    exactly 1 and off-diagonals are clipped into [-1, 1] against rounding.

    Raises ``DegenerateColumn`` naming the ticker and window when a column
    has zero variance inside the window.
    """
    rows = returns.n_rows
    if start < 0 or start + spec.length > rows:
        raise InsufficientData(
            f"window [{start}, {start + spec.length}) outside {rows} return rows"
        )
    window = returns.returns[start : start + spec.length]
    centered = window - window.mean(axis=0)
    cov = centered.T @ centered / spec.length
    var = np.diag(cov).copy()
    if (var <= 0.0).any():
        j = int(np.flatnonzero(var <= 0.0)[0])
        raise DegenerateColumn(
            ticker=returns.tickers[j],
            start=start,
            end=start + spec.length,
            epoch_index=epoch_index,
        )
    sd = np.sqrt(var)
    corr = cov / np.outer(sd, sd)
    np.clip(corr, -1.0, 1.0, out=corr)
    np.fill_diagonal(corr, 1.0)
    return CorrMatrix(
        dim=len(returns.tickers),
        data=packed.pack(corr),
        epoch_end=returns.dates[start + spec.length - 1],
        epoch_index=start if epoch_index is None else epoch_index,
        tickers=returns.tickers,
    )


def iter_rolling_correlations(
    returns: ReturnTable, spec: EpochSpec
) -> Iterator[CorrMatrix]:
    """Stream epoch correlation matrices without materializing the sequence."""
    count = spec.window_count(returns.n_rows)
    for i in range(count):
        yield epoch_correlation(returns, i * spec.shift, spec, epoch_index=i)


def rolling_correlations(returns: ReturnTable, spec: EpochSpec) -> list[CorrMatrix]:
    """All epoch correlation matrices: ``(rows - length) // shift + 1`` of them."""
    return list(iter_rolling_correlations(returns, spec))


def power_map(matrix, epsilon: float):
    """Entrywise noise suppression ``x -> sign(x) |x|^(1+eps)``.

    ``epsilon`` must lie in [0, 1]; 0 is the identity. Works on both
    matrix kinds and returns the same kind. A correlation diagonal stays
    at 1 since 1 is a fixed point of the map.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ParameterRange(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon == 0.0:
        return matrix
    data = matrix.data
    mapped = np.sign(data) * np.abs(data) ** (1.0 + epsilon)
    return replace(matrix, data=mapped)


def coarse_grain(
    c: CorrMatrix, sectors: SectorMap, tickers=None
) -> GuhrMatrix:
    """Average correlation entries over sector-pair blocks.

    Diagonal blocks exclude the self-correlations, so a block of n members
    averages over n*(n-1) entries; off-diagonal blocks over n_i*n_j. A
    singleton sector has no intra-sector pairs: its diagonal entry is set
    to 1.0 and a ``SingletonSectorWarning`` is emitted.
    """
    if tickers is None:
        tickers = c.tickers
    if tickers is None:
        raise ValidationError(
            "correlation matrix carries no tickers; pass them explicitly"
        )
    if len(tickers) != c.dim:
        raise DimensionMismatch(
            f"{len(tickers)} tickers for a dim-{c.dim} matrix"
        )
    idx = sectors.indices(tickers)
    n_s = sectors.n_sectors
    counts = np.bincount(idx, minlength=n_s).astype(np.float64)

    full = c.full()
    onehot = np.zeros((c.dim, n_s))
    onehot[np.arange(c.dim), idx] = 1.0
    block_sums = onehot.T @ full @ onehot
    # diagonal blocks: remove self-correlations before averaging
    diag_by_sector = np.bincount(idx, weights=np.diag(full), minlength=n_s)
    denom = np.outer(counts, counts)
    np.fill_diagonal(denom, counts * (counts - 1.0))
    block_sums[np.diag_indices(n_s)] -= diag_by_sector

    g = np.empty((n_s, n_s))
    singleton = denom == 0.0
    np.divide(block_sums, denom, out=g, where=~singleton)
    if singleton.any():
        g[singleton] = 1.0
        names = [sectors.sectors[i] for i in np.flatnonzero(np.diag(singleton))]
        warnings.warn(
            f"singleton sector(s) {names}: diagonal set to 1.0",
            SingletonSectorWarning,
            stacklevel=2,
        )
    return GuhrMatrix(
        dim=n_s,
        data=packed.pack(g),
        epoch_end=c.epoch_end,
        sectors=sectors.sectors,
        epoch_index=c.epoch_index,
    )


def matrix_distance(a, b) -> float:
    """L1 distance over the packed upper triangle of two same-kind matrices.

    For correlation matrices the unit diagonals cancel, matching the
    strict ``i < j`` sum; for Guhr matrices the diagonal differences count.
    """
    if type(a) is not type(b):
        raise DimensionMismatch(
            f"cannot compare {type(a).__name__} with {type(b).__name__}"
        )
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")
    return packed.packed_l1(a.data, b.data)


def average_correlation(matrix) -> float:
    """Mean of the strict upper triangle (diagonal excluded for both kinds)."""
    if matrix.dim < 2:
        raise ValidationError("average correlation needs dim >= 2")
    mask = packed.strict_upper_mask(matrix.dim)
    return float(matrix.data[mask].mean())


def iter_pipeline_matrices(
    returns: ReturnTable,
    spec: EpochSpec,
    epsilon: float = 0.0,
    sectors: SectorMap | None = None,
) -> Iterator[CorrMatrix | GuhrMatrix]:
    """Stream the canonical per-epoch pipeline: correlation, power map, then
    coarse graining when a sector map is given."""
    if not 0.0 <= epsilon <= 1.0:
        raise ParameterRange(f"epsilon must be in [0, 1], got {epsilon}")
    for corr in iter_rolling_correlations(returns, spec):
        m = power_map(corr, epsilon)
        if sectors is not None:
            m = coarse_grain(m, sectors)
        yield m


def pipeline_matrices(
    returns: ReturnTable,
    spec: EpochSpec,
    epsilon: float = 0.0,
    sectors: SectorMap | None = None,
) -> list[CorrMatrix | GuhrMatrix]:
    """Materialized form of :func:`iter_pipeline_matrices`."""
    return list(iter_pipeline_matrices(returns, spec, epsilon, sectors))


class MatrixDump(NamedTuple):
    """Parsed matrix dump: metadata plus the packed values."""

    dim: int
    epoch_index: int
    epoch_end: date
    data: np.ndarray


def dump_matrix(matrix) -> str:
    """Text dump: header ``dim,epoch_index,epoch_end`` then the packed
    upper triangle, comma-separated, 17 significant digits."""
    out = io.StringIO()
    out.write(f"{matrix.dim},{matrix.epoch_index},{matrix.epoch_end.isoformat()}\n")
    out.write(",".join(format(x, ".17g") for x in matrix.data))
    out.write("\n")
    return out.getvalue()


def load_matrix_dump(text: str) -> MatrixDump:
    """Parse the output of :func:`dump_matrix`; values round-trip exactly."""
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) != 2:
        raise ValidationError("matrix dump must have a header line and a data line")
    dim_s, idx_s, end_s = lines[0].split(",")
    dim = int(dim_s)
    data = np.array([float(x) for x in lines[1].split(",")], dtype=np.float64)
    if data.shape[0] != packed.packed_length(dim):
        raise ValidationError(
            f"expected {packed.packed_length(dim)} packed values, got {data.shape[0]}"
        )
    return MatrixDump(dim, int(idx_s), date.fromisoformat(end_s), data)
