"""Seeded k-means over matrix sequences and the sigma_intra model selection.

Matrices are clustered as points in packed-triangle space under the same
L1 distance used everywhere else (``metric="l1"``, the default); centroids
are element-wise means. The mean/L1 hybrid lacks a textbook monotone
convergence guarantee, so max_iter bounds every run; ``metric="l2"``
selects classical Lloyd with its usual guarantees.

Model selection follows the dispersion-of-restarts signal: run k-means
n_init times from different seeded starts, take the population standard
deviation of the per-run d_intra values, and pick the (k, epsilon) grid
cell where that deviation is smallest among cells with k at or above an
explicit admissibility floor.

Determinism contract: given (matrices, k, seed, max_iter, metric) the
assignment vector is bit-identical across runs, thread counts, and
schedules. Restarts derive sub-seeds from the base seed by index, so a
parallel restart pool returns exactly what the serial loop returns.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from . import packed
from .corrmat import (
    EpochSpec,
    average_correlation,
    coarse_grain,
    power_map,
    rolling_correlations,
)
from .errors import (
    InsufficientData,
    MarketStatesError,
    ParameterRange,
    TieWarning,
    ValidationError,
)
from .ingest import ReturnTable, SectorMap
from .rng import subseed

_METRICS = ("l1", "l2")


def _as_points(matrices) -> np.ndarray:
    """Stack a matrix sequence (or accept a prepacked 2-D array) as rows."""
    if isinstance(matrices, np.ndarray):
        pts = np.asarray(matrices, dtype=np.float64)
        if pts.ndim != 2:
            raise ValidationError("expected a 2-D array of packed rows")
        return pts
    rows = [m.data for m in matrices]
    if not rows:
        raise InsufficientData("no matrices to cluster")
    dims = {m.dim for m in matrices}
    if len(dims) > 1:
        raise ValidationError(f"mixed matrix dimensions {sorted(dims)}")
    return np.vstack(rows)


def _point_distances(pts: np.ndarray, centroids: np.ndarray, metric: str) -> np.ndarray:
    if metric == "l1":
        return cdist(pts, centroids, "cityblock")
    # squared form: same argmin, cheaper; sqrt taken where a true distance is needed
    return cdist(pts, centroids, "sqeuclidean")


def _to_distance(values: np.ndarray, metric: str) -> np.ndarray:
    return values if metric == "l1" else np.sqrt(values)


@dataclass(frozen=True)
class Clustering:
    """One converged (or max_iter-truncated) k-means run."""

    k: int
    assignments: np.ndarray
    centroids: np.ndarray
    d_intra: float
    seed: int
    iterations: int
    converged: bool
    metric: str = "l1"
    d_intra_history: tuple[float, ...] = ()

    @property
    def n_points(self) -> int:
        return int(self.assignments.shape[0])

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def kmeans(
    matrices,
    k: int,
    seed: int,
    max_iter: int = 300,
    metric: str = "l1",
) -> Clustering:
    """Lloyd-style k-means with seeded initialization.

    Initialization draws k distinct data points uniformly without
    replacement. Assignment ties go to the lowest centroid index; an
    empty cluster is repaired by seizing the point currently farthest
    from its own centroid (points that are sole members stay put).
    d_intra is the mean point-to-assigned-centroid distance under the
    active metric.
    """
    pts = _as_points(matrices)
    n = pts.shape[0]
    if k < 1:
        raise ParameterRange(f"k must be >= 1, got {k}")
    if k > n:
        raise InsufficientData(f"k={k} exceeds {n} matrices")
    if max_iter < 1:
        raise ParameterRange(f"max_iter must be >= 1, got {max_iter}")
    if metric not in _METRICS:
        raise ParameterRange(f"metric must be one of {_METRICS}, got {metric!r}")

    rng = np.random.default_rng(seed)
    centroids = pts[rng.choice(n, size=k, replace=False)].copy()
    assign = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    iterations = 0
    converged = False

    for _ in range(max_iter):
        iterations += 1
        dist = _point_distances(pts, centroids, metric)
        new_assign = dist.argmin(axis=1)
        own = _to_distance(dist[np.arange(n), new_assign], metric)
        history.append(float(own.mean()))

        sizes = np.bincount(new_assign, minlength=k)
        for empty in np.flatnonzero(sizes == 0):
            movable = sizes[new_assign] > 1
            candidates = np.where(movable, own, -np.inf)
            j = int(candidates.argmax())
            sizes[new_assign[j]] -= 1
            new_assign[j] = empty
            sizes[empty] = 1
            own[j] = 0.0

        if np.array_equal(new_assign, assign):
            converged = True
            break
        assign = new_assign
        for g in range(k):
            centroids[g] = pts[assign == g].mean(axis=0)

    final = _point_distances(pts, centroids, metric)
    d_intra = float(_to_distance(final[np.arange(n), assign], metric).mean())
    return Clustering(
        k=k,
        assignments=assign,
        centroids=centroids,
        d_intra=d_intra,
        seed=seed,
        iterations=iterations,
        converged=converged,
        metric=metric,
        d_intra_history=tuple(history),
    )


class SigmaIntraResult(NamedTuple):
    mean_d_intra: float
    sigma_intra: float
    best: Clustering
    d_intras: tuple[float, ...]


def sigma_intra(
    matrices,
    k: int,
    n_init: int,
    seed: int,
    max_iter: int = 300,
    metric: str = "l1",
    threads: int | None = None,
) -> SigmaIntraResult:
    """Restart k-means n_init times; σ_intra is the population standard
    deviation of the per-run d_intra values.

    Sub-seed i is a fixed 64-bit mix of (seed, i), so the restart set is
    reproducible and independent of execution order. The best run is the
    minimal d_intra, ties broken by the lowest sub-seed value.
    """
    if n_init < 2:
        raise ParameterRange(f"n_init must be >= 2, got {n_init}")
    pts = _as_points(matrices)
    seeds = [subseed(seed, i) for i in range(n_init)]

    def run(s: int) -> Clustering:
        return kmeans(pts, k, s, max_iter=max_iter, metric=metric)

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(run, seeds))
    else:
        runs = [run(s) for s in seeds]

    d = np.array([r.d_intra for r in runs])
    best_i = min(range(n_init), key=lambda i: (d[i], seeds[i]))
    return SigmaIntraResult(
        mean_d_intra=float(d.mean()),
        sigma_intra=float(d.std()),
        best=runs[best_i],
        d_intras=tuple(float(x) for x in d),
    )


@dataclass(frozen=True)
class GridCell:
    k: int
    epsilon: float
    sigma_intra: float
    mean_d_intra: float
    error: str | None = None


@dataclass(frozen=True)
class GridResult:
    """σ_intra surface over the (k, epsilon) grid plus the chosen cell."""

    cells: tuple[GridCell, ...]
    chosen_k: int
    chosen_epsilon: float
    k_min: int
    n_init: int
    seed: int

    @property
    def chosen(self) -> tuple[int, float]:
        return self.chosen_k, self.chosen_epsilon

    def cell(self, k: int, epsilon: float) -> GridCell:
        for c in self.cells:
            if c.k == k and c.epsilon == epsilon:
                return c
        raise KeyError((k, epsilon))


def optimize_states(
    returns: ReturnTable,
    spec: EpochSpec,
    sectors: SectorMap | None,
    epsilon_grid: Sequence[float],
    k_range: Sequence[int],
    k_min_admissible: int,
    n_init: int,
    seed: int,
    max_iter: int = 300,
    metric: str = "l1",
    threads: int | None = None,
) -> GridResult:
    """Scan the (k, epsilon) grid and pick the σ_intra minimum.

    Per epsilon: rolling Pearson matrices, power map, coarse graining
    when a sector map is given; per k: sigma_intra with the same base
    seed in every cell so columns differ only through the data. The
    chosen cell minimizes σ_intra over error-free cells with
    k >= k_min_admissible; exact ties fall to smaller k, then smaller
    epsilon. Per-cell failures are recorded, not raised.
    """
    eps_list = [float(e) for e in epsilon_grid]
    k_list = [int(k) for k in k_range]
    if not eps_list or not k_list:
        raise ValidationError("epsilon grid and k range must be nonempty")
    for e in eps_list:
        if not 0.0 <= e <= 1.0:
            raise ParameterRange(f"epsilon must be in [0, 1], got {e}")
    if not any(k >= k_min_admissible for k in k_list):
        raise ValidationError(
            f"no k in {k_list} reaches the admissibility floor {k_min_admissible}"
        )

    base = rolling_correlations(returns, spec)
    cells: list[GridCell] = []
    for eps in eps_list:
        pts = None
        col_error = None
        try:
            mats = [power_map(c, eps) for c in base]
            if sectors is not None:
                mats = [coarse_grain(m, sectors) for m in mats]
            pts = _as_points(mats)
        except MarketStatesError as exc:
            col_error = f"{type(exc).__name__}: {exc}"
        for k in k_list:
            if col_error is not None:
                cells.append(GridCell(k, eps, float("nan"), float("nan"), col_error))
                continue
            try:
                res = sigma_intra(
                    pts, k, n_init, seed,
                    max_iter=max_iter, metric=metric, threads=threads,
                )
                cells.append(GridCell(k, eps, res.sigma_intra, res.mean_d_intra))
            except MarketStatesError as exc:
                cells.append(
                    GridCell(k, eps, float("nan"), float("nan"),
                             f"{type(exc).__name__}: {exc}")
                )

    admissible = [c for c in cells if c.error is None and c.k >= k_min_admissible]
    if not admissible:
        raise ValidationError(
            "every admissible grid cell failed; see per-cell errors"
        )
    best = min(admissible, key=lambda c: (c.sigma_intra, c.k, c.epsilon))
    return GridResult(
        cells=tuple(cells),
        chosen_k=best.k,
        chosen_epsilon=best.epsilon,
        k_min=k_min_admissible,
        n_init=n_init,
        seed=seed,
    )


@dataclass(frozen=True)
class StateSequence:
    """Epoch states relabeled 1..k by ascending mean average correlation."""

    states: np.ndarray
    k: int
    epoch_ends: tuple[date, ...] | None = None
    state_means: tuple[float, ...] | None = None

    def __len__(self) -> int:
        return int(self.states.shape[0])


def order_states(c: Clustering, matrices) -> StateSequence:
    """Relabel raw cluster ids so label 1 has the lowest mean average
    correlation over its members and label k the highest. Ties between
    cluster means go to the lower raw id, with a TieWarning."""
    if isinstance(matrices, np.ndarray):
        pts = _as_points(matrices)
        dim = packed.dim_from_length(pts.shape[1])
        mask = packed.strict_upper_mask(dim)
        avg = pts[:, mask].mean(axis=1)
        epoch_ends = None
    else:
        avg = np.array([average_correlation(m) for m in matrices])
        epoch_ends = tuple(m.epoch_end for m in matrices)
    if avg.shape[0] != c.n_points:
        raise ValidationError(
            f"{avg.shape[0]} matrices for a clustering of {c.n_points} points"
        )

    means = np.array([avg[c.assignments == g].mean() for g in range(c.k)])
    order = np.argsort(means, kind="stable")
    if np.unique(means).size < c.k:
        warnings.warn(
            "identical per-cluster mean correlations; ties broken by raw id",
            TieWarning,
            stacklevel=2,
        )
    label_of = np.empty(c.k, dtype=np.int64)
    label_of[order] = np.arange(1, c.k + 1)
    return StateSequence(
        states=label_of[c.assignments],
        k=c.k,
        epoch_ends=epoch_ends,
        state_means=tuple(float(means[g]) for g in order),
    )


def grid_csv(result: GridResult) -> str:
    """One row per grid cell: ``k,epsilon,sigma_intra,mean_d_intra``."""
    lines = ["k,epsilon,sigma_intra,mean_d_intra"]
    for c in result.cells:
        lines.append(
            f"{c.k},{format(c.epsilon, '.17g')},"
            f"{format(c.sigma_intra, '.17g')},{format(c.mean_d_intra, '.17g')}"
        )
    return "\n".join(lines) + "\n"


def grid_summary(result: GridResult) -> dict:
    chosen = result.cell(result.chosen_k, result.chosen_epsilon)
    return {
        "chosen_k": result.chosen_k,
        "chosen_epsilon": result.chosen_epsilon,
        "sigma_intra": chosen.sigma_intra,
        "mean_d_intra": chosen.mean_d_intra,
        "k_min_admissible": result.k_min,
        "n_init": result.n_init,
        "seed": result.seed,
        "cell_errors": {
            f"k={c.k},epsilon={c.epsilon}": c.error
            for c in result.cells
            if c.error is not None
        },
    }


def grid_summary_json(result: GridResult) -> str:
    return json.dumps(grid_summary(result), indent=2, sort_keys=True) + "\n"
