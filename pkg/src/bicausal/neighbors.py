"""Exact nearest-neighbour and range queries with deterministic tie-breaking.

All queries are exact (kd-tree backed, brute force for tiny sets). Ties in
distance are always resolved toward the smaller point index so that every
downstream estimator is deterministic, including on rounded/discretised data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InsufficientPointsError, ValidationError

_MINKOWSKI = {"l1": 1.0, "l2": 2.0, "linf": np.inf}

# below this library size a vectorised brute-force scan beats the tree
_BRUTE_LIMIT = 64

# distances this close (relative) are treated as tied and resolved exactly
_TIE_RTOL = 1e-9


def metric_p(metric: str) -> float:
    try:
        return _MINKOWSKI[metric]
    except KeyError:
        raise ValidationError(f"unknown metric {metric!r}; expected one of {sorted(_MINKOWSKI)}")


def pairwise_distance(diff: np.ndarray, p: float) -> np.ndarray:
    """Distance along the last axis of a difference array.

    This is the package's single decisive distance formula: kd-trees only
    pre-select candidates, and any ordering or tie decision is made on these
    values, keeping tie-breaking reproducible across query paths.
    """
    if p == 1.0:
        return np.abs(diff).sum(axis=-1)
    if p == 2.0:
        return np.sqrt((diff * diff).sum(axis=-1))
    return np.abs(diff).max(axis=-1)


@dataclass(frozen=True, eq=False)
class PointSet:
    """Immutable set of fixed-dimension points, queried via a shared kd-tree."""

    points: np.ndarray = field(repr=False)
    _tree: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValidationError("points must be a non-empty (n, d) array")
        if not np.isfinite(pts).all():
            raise ValidationError("points must be finite")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            object.__setattr__(self, "_tree", cKDTree(self.points))
        return self._tree


def _exact_neighbors(pset: PointSet, query: np.ndarray, k: int, p: float,
                     exclude: int) -> tuple[np.ndarray, np.ndarray]:
    """k nearest points of `query`, ordered by (distance, index), optionally
    excluding one point index. Exact under arbitrary ties."""
    # upper bound on the k-th distance: any k+1 candidates suffice
    kq = min(k + (1 if exclude >= 0 else 0), pset.n)
    d_cand, _ = pset.tree.query(query, k=kq, p=p)
    radius = float(np.max(d_cand))
    # inflate: the tree's arithmetic may disagree with pairwise_distance by
    # an ulp, and a dropped boundary point would silently shrink the set
    radius += max(1e-12, 1e-6 * radius)
    cand = pset.tree.query_ball_point(query, r=radius, p=p)
    cand = np.array(sorted(cand), dtype=int)
    if exclude >= 0:
        cand = cand[cand != exclude]
    dist = pairwise_distance(pset.points[cand] - query, p)
    order = np.argsort(dist, kind="stable")  # stable => ties by ascending index
    chosen = order[:k]
    return cand[chosen], dist[chosen]


def knn(pset: PointSet, query_index: int, k: int, metric: str = "l2",
        exclude_self: bool = True) -> list[tuple[int, float]]:
    """k nearest neighbours of one member point, sorted by ascending
    distance with ties broken by smaller index."""
    p = metric_p(metric)
    if k < 1:
        raise ValidationError("k must be >= 1")
    available = pset.n - 1 if exclude_self else pset.n
    if k > available:
        raise InsufficientPointsError(f"asked for {k} neighbours, only {available} available")
    q = pset.points[query_index]
    idx, dist = _exact_neighbors(pset, q, k, p, query_index if exclude_self else -1)
    return [(int(i), float(d)) for i, d in zip(idx, dist)]


def knn_points(pset: PointSet, queries: np.ndarray, k: int, metric: str = "l2",
               exclude_index: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Bulk k-NN of arbitrary query points against `pset`.

    exclude_index[i] >= 0 removes that member index from query i's candidates
    (use it for self-exclusion when the queries live in the set). Returns
    (indices, distances) of shape (n_queries, k), each row in exact
    (distance, index) order.
    """
    p = metric_p(metric)
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    nq = queries.shape[0]
    if exclude_index is None:
        exclude_index = np.full(nq, -1, dtype=int)
    else:
        exclude_index = np.asarray(exclude_index, dtype=int)
    max_excluded = int((exclude_index >= 0).any())
    if k + max_excluded > pset.n:
        raise InsufficientPointsError(f"asked for {k} neighbours of {pset.n} points")

    if pset.n <= _BRUTE_LIMIT:
        return _brute_knn_points(pset, queries, k, p, exclude_index)

    kq = min(k + max_excluded + 1, pset.n)
    _, idx = pset.tree.query(queries, k=kq, p=p)
    # decisive distances come from the package formula, not the tree's
    dist = pairwise_distance(pset.points[idx] - queries[:, None, :], p)
    order = np.argsort(dist, axis=1, kind="stable")
    dist = np.take_along_axis(dist, order, axis=1)
    idx = np.take_along_axis(idx, order, axis=1)

    out_idx = np.empty((nq, k), dtype=int)
    out_dist = np.empty((nq, k))
    for i in range(nq):
        d_row, i_row = dist[i], idx[i]
        excl = exclude_index[i]
        if excl >= 0:
            keep = i_row != excl
            if keep.all():
                # excluded member not retrieved: only possible when a heap of
                # coincident points pushed it out, so resolve exactly
                out_idx[i], out_dist[i] = _exact_neighbors(pset, queries[i], k, p, excl)
                continue
            d_row, i_row = d_row[keep], i_row[keep]
        if len(d_row) > k and d_row[k] - d_row[k - 1] <= _TIE_RTOL * d_row[k]:
            # (near-)tie across the cut boundary: membership is ambiguous
            # because the tree pre-selection may rank ulp-level ties either
            # way, so resolve exactly
            out_idx[i], out_dist[i] = _exact_neighbors(
                pset, queries[i], k, p, exclude_index[i])
            continue
        d_row, i_row = d_row[:k], i_row[:k]
        order = np.lexsort((i_row, d_row))
        out_idx[i] = i_row[order]
        out_dist[i] = d_row[order]
    return out_idx, out_dist


def _brute_knn_points(pset, queries, k, p, exclude_index):
    d = pairwise_distance(queries[:, None, :] - pset.points[None, :, :], p)
    excl_rows = np.nonzero(exclude_index >= 0)[0]
    d[excl_rows, exclude_index[excl_rows]] = np.inf
    order = np.argsort(d, axis=1, kind="stable")[:, :k]
    return order, np.take_along_axis(d, order, axis=1)


def knn_all(pset: PointSet, k: int, metric: str = "l2",
            exclude_self: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """k nearest neighbours of every member point against its own set."""
    exclude = np.arange(pset.n) if exclude_self else None
    return knn_points(pset, pset.points, k, metric, exclude)


def count_within(pset: PointSet, query_index: int, radius: float,
                 metric: str = "l2", strict: bool = False) -> int:
    """Number of *other* points with distance < radius (strict) or <= radius."""
    p = metric_p(metric)
    if radius < 0:
        raise ValidationError("radius must be non-negative")
    r = radius
    if strict:
        r = np.nextafter(radius, -np.inf)
        if r < 0:
            return 0
    hits = pset.tree.query_ball_point(pset.points[query_index], r=r, p=p,
                                      return_length=True)
    return int(hits) - 1  # the centre itself is always within any r >= 0


def range_query(pset: PointSet, center_index: int, radius: float,
                metric: str = "l2") -> list[int]:
    """All points (excluding the centre) within `radius`, ascending index."""
    p = metric_p(metric)
    if radius < 0:
        raise ValidationError("radius must be non-negative")
    hits = pset.tree.query_ball_point(pset.points[center_index], r=radius, p=p)
    return sorted(i for i in hits if i != center_index)


def seeded_jitter(points: np.ndarray, scale: float, seed) -> np.ndarray:
    """Add seeded Gaussian jitter, amplitude scale x per-column std.

    Constant columns get absolute amplitude `scale`. Used by neighbour-based
    estimators to break exact distance ties on discretised data.
    """
    pts = np.asarray(points, dtype=float)
    rng = np.random.default_rng(seed)
    amp = np.where(pts.std(axis=0) == 0.0, 1.0, pts.std(axis=0))
    return pts + rng.normal(0.0, 1.0, size=pts.shape) * (scale * amp)
