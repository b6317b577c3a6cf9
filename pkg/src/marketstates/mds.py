"""Classical (Torgerson) multidimensional scaling of the matrix cloud.

The pairwise L1 distances between packed matrices are generally not
Euclidean-realizable, so the double-centered Gram matrix can have
negative eigenvalues. Those are clamped to zero columns, reported via a
warning, and the captured-mass fraction accounts only for positive
eigenvalue mass; nothing is hidden or renormalized away.

Coordinates follow a fixed sign convention (the entry of largest
absolute value in each column is positive), which makes embeddings
stable across runs and eigensolver backends.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import date

import numpy as np
from scipy.sparse.linalg import eigsh
from scipy.spatial.distance import pdist

from . import packed
from .errors import DegradedRankWarning, DimensionMismatch, ParameterRange, ValidationError

PALETTE = (
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a",
    "#66a61e", "#e6ab02", "#a6761d", "#666666",
)

DENSE_CUTOFF = 1500


@dataclass(frozen=True)
class DistanceMatrix:
    """Packed symmetric nonnegative distances with a zero diagonal."""

    n: int
    d: np.ndarray

    def __post_init__(self):
        if self.d.shape != (packed.packed_length(self.n),):
            raise ValidationError(
                f"packed length {self.d.shape} does not match n={self.n}"
            )
        if (self.d < 0).any():
            raise ValidationError("distances must be nonnegative")
        if self.d[packed.diagonal_positions(self.n)].any():
            raise ValidationError("distance diagonal must be zero")

    def full(self) -> np.ndarray:
        return packed.unpack(self.d, self.n)


@dataclass(frozen=True)
class Embedding:
    """Centered coordinates, one row per point, columns by descending
    eigenvalue. ``eigenvalues`` are the raw top values before clamping;
    ``captured`` is the fraction of positive eigenvalue mass they carry."""

    coords: np.ndarray
    eigenvalues: tuple[float, ...]
    positive_mass: float
    captured: float
    states: np.ndarray | None = None
    epoch_ends: tuple[date, ...] | None = None

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    @property
    def dim(self) -> int:
        return int(self.coords.shape[1])

    def axis_fraction(self, axis: int) -> float:
        """Positive-mass share of one 1-based axis."""
        lam = max(self.eigenvalues[axis - 1], 0.0)
        return lam / self.positive_mass if self.positive_mass > 0 else 0.0


def distance_matrix(matrices) -> DistanceMatrix:
    """All pairwise matrix distances, computed once into packed storage."""
    seq = list(matrices)
    if len(seq) < 2:
        raise ValidationError("need at least 2 matrices")
    kinds = {type(m) for m in seq}
    if len(kinds) > 1:
        names = sorted(t.__name__ for t in kinds)
        raise DimensionMismatch(f"mixed matrix kinds {names}")
    dims = {m.dim for m in seq}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed matrix dimensions {sorted(dims)}")
    pts = np.vstack([m.data for m in seq])
    n = len(seq)
    d = np.zeros(packed.packed_length(n))
    d[packed.strict_upper_mask(n)] = pdist(pts, "cityblock")
    return DistanceMatrix(n=n, d=d)


def _double_center(d_full: np.ndarray) -> np.ndarray:
    a = -0.5 * d_full**2
    row = a.mean(axis=1, keepdims=True)
    col = a.mean(axis=0, keepdims=True)
    return a - row - col + a.mean()


def classical_mds(
    d: DistanceMatrix,
    dim: int,
    states: np.ndarray | None = None,
    epoch_ends: tuple[date, ...] | None = None,
    dense_cutoff: int = DENSE_CUTOFF,
) -> Embedding:
    """Torgerson scaling: eigendecompose B = -1/2 J D^2 J and scale the
    top eigenvectors by sqrt(eigenvalue).

    Below ``dense_cutoff`` points the full spectrum is computed, so the
    captured fraction is exact. Above it only the top ``dim`` eigenpairs
    are solved iteratively and the positive mass is estimated from
    trace(B), which undercounts it; the reported fraction is then an
    upper bound. Negative eigenvalues among the top ``dim`` become zero
    columns and raise a DegradedRankWarning.
    """
    n = d.n
    if dim < 1:
        raise ParameterRange(f"dim must be >= 1, got {dim}")
    if dim > n - 1:
        raise ParameterRange(f"dim={dim} exceeds n-1={n - 1}")
    b = _double_center(d.full())

    if n < dense_cutoff:
        vals, vecs = np.linalg.eigh(b)
        order = np.argsort(vals, kind="stable")[::-1]
        vals, vecs = vals[order], vecs[:, order]
        positive_mass = float(vals[vals > 0].sum())
        top_vals, top_vecs = vals[:dim], vecs[:, :dim]
    else:
        # the all-ones vector is B's null direction; a fixed random start
        # keeps the iteration away from it and stays deterministic
        v0 = np.random.default_rng(0).standard_normal(n)
        vals, vecs = eigsh(b, k=dim, which="LA", v0=v0)
        order = np.argsort(vals, kind="stable")[::-1]
        top_vals, top_vecs = vals[order], vecs[:, order]
        captured_sum = float(top_vals[top_vals > 0].sum())
        positive_mass = max(float(np.trace(b)), captured_sum)

    clamped = np.maximum(top_vals, 0.0)
    if (top_vals < 0).any():
        warnings.warn(
            f"{int((top_vals < 0).sum())} of the top {dim} eigenvalues are "
            "negative; their columns are zero",
            DegradedRankWarning,
            stacklevel=2,
        )
    coords = top_vecs * np.sqrt(clamped)
    for j in range(dim):
        col = coords[:, j]
        if col.any() and col[np.abs(col).argmax()] < 0:
            coords[:, j] = -col

    captured_sum = float(clamped.sum())
    captured = captured_sum / positive_mass if positive_mass > 0 else 1.0
    return Embedding(
        coords=coords,
        eigenvalues=tuple(float(v) for v in top_vals),
        positive_mass=positive_mass,
        captured=min(captured, 1.0),
        states=states,
        epoch_ends=epoch_ends,
    )


def _check_axis(e: Embedding, axis: int):
    if not 1 <= axis <= e.dim:
        raise ParameterRange(f"axis {axis} out of range 1..{e.dim}")


def project_2d(e: Embedding, axis_a: int = 1, axis_b: int = 2):
    """Planar view: (x, y, state, epoch_end) per point, axes 1-based."""
    _check_axis(e, axis_a)
    _check_axis(e, axis_b)
    if axis_a == axis_b:
        raise ParameterRange("projection axes must be distinct")
    states = e.states if e.states is not None else np.zeros(e.n, dtype=np.int64)
    ends = e.epoch_ends if e.epoch_ends is not None else (None,) * e.n
    x = e.coords[:, axis_a - 1]
    y = e.coords[:, axis_b - 1]
    return [
        (float(x[i]), float(y[i]), int(states[i]), ends[i]) for i in range(e.n)
    ]


def embedding_table(e: Embedding) -> str:
    """CSV export ``epoch_end,state,x,y,z``; missing axes are zero."""
    states = e.states if e.states is not None else np.zeros(e.n, dtype=np.int64)
    ends = e.epoch_ends if e.epoch_ends is not None else (None,) * e.n
    xyz = np.zeros((e.n, 3))
    take = min(3, e.dim)
    xyz[:, :take] = e.coords[:, :take]
    lines = ["epoch_end,state,x,y,z"]
    for i in range(e.n):
        end = ends[i].isoformat() if ends[i] is not None else ""
        lines.append(
            f"{end},{int(states[i])},"
            f"{format(xyz[i, 0], '.17g')},{format(xyz[i, 1], '.17g')},"
            f"{format(xyz[i, 2], '.17g')}"
        )
    return "\n".join(lines) + "\n"


def embedding_svg(
    e: Embedding,
    axis_a: int = 1,
    axis_b: int = 2,
    width: int = 640,
    height: int = 480,
) -> str:
    """Standalone scatter SVG, one circle per point, colored by state
    from a fixed 8-color palette; axis labels carry each axis's share of
    positive eigenvalue mass."""
    points = project_2d(e, axis_a, axis_b)
    margin = 48.0
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])

    def scale(v: np.ndarray, lo: float, hi: float) -> np.ndarray:
        span = v.max() - v.min()
        if span == 0:
            return np.full(v.shape, (lo + hi) / 2.0)
        return lo + (v - v.min()) / span * (hi - lo)

    px = scale(xs, margin, width - margin)
    # svg y axis points down
    py = scale(ys, height - margin, margin)

    label_a = f"axis {axis_a} ({100 * e.axis_fraction(axis_a):.1f}% of positive mass)"
    label_b = f"axis {axis_b} ({100 * e.axis_fraction(axis_b):.1f}% of positive mass)"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{label_a}</text>',
        f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {height / 2:.1f})">{label_b}</text>',
    ]
    for i, (_, _, state, _) in enumerate(points):
        color = PALETTE[(state - 1) % len(PALETTE)] if state >= 1 else PALETTE[-1]
        parts.append(
            f'<circle cx="{px[i]:.2f}" cy="{py[i]:.2f}" r="3" '
            f'fill="{color}" fill-opacity="0.75"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
