"""State-space similarity indices and convergent cross mapping."""

from __future__ import annotations

import time
from dataclasses import dataclass, asdict

import numpy as np

from .core import STATUS_DEGENERATE, STATUS_OK, DelayMatrix, IndexEstimate
from .errors import InsufficientPointsError, ValidationError
from .neighbors import PointSet, knn_all, knn_points, metric_p

_SQDIST_FLOOR = float(np.finfo(float).eps)


@dataclass(frozen=True)
class SiParams:
    R: int = 20
    metric: str = "l2"

    def __post_init__(self):
        if self.R < 1:
            raise ValidationError("need at least one neighbour")
        metric_p(self.metric)


@dataclass(frozen=True)
class CcmParams:
    """Cross-map settings: n_t random contiguous library segments per size,
    convergence when rho(largest) - rho(smallest) exceeds delta_rho."""

    n_t: int = 40
    delta_rho: float = 0.05
    library_sizes: tuple | None = None
    n_grid: int = 20
    metric: str = "l2"
    seed: int = 0

    def __post_init__(self):
        if self.n_t < 1:
            raise ValidationError("need at least one segment per size")
        if self.n_grid < 2:
            raise ValidationError("need at least the two endpoint sizes")
        metric_p(self.metric)


def _mean_sq_dist_to_all(emb: np.ndarray) -> np.ndarray:
    """Mean squared euclidean distance from each point to all others,
    via the moment identity (no n^2 matrix)."""
    n = emb.shape[0]
    sq = (emb**2).sum(axis=1)
    total = n * sq + sq.sum() - 2.0 * emb @ emb.sum(axis=0)
    return total / (n - 1)


def si_pair(dm: DelayMatrix, p: SiParams = SiParams()) -> tuple[IndexEstimate, IndexEstimate]:
    """Both similarity indices at once.

    With own-space neighbour distances r^R(t), cross-mapped distances
    r^R(t | other) (distances to the points picked by the *other* series'
    neighbour indices) and the all-points mean r(t):

        si1 = mean log( r(t) / r^R(t | other) )
        si2 = mean log( r^R(t) / r^R(t | other) )

    Squared euclidean distances throughout; identical series give si2 = 0.
    """
    n = dm.n_rows
    if n <= p.R + 1:
        raise InsufficientPointsError("need more rows than neighbours")
    params = {"m": dm.spec.m, "tau": dm.spec.tau, "h": dm.spec.h, **asdict(p)}

    t0 = time.perf_counter()
    idx_x, _ = knn_all(PointSet(dm.x_emb), p.R, p.metric)
    idx_y, _ = knn_all(PointSet(dm.y_emb), p.R, p.metric)

    def direction(emb, own_idx, mapped_idx):
        # mean squared distance to a set of neighbour indices, in emb's space
        def msd(nbr):
            diff = emb[:, None, :] - emb[nbr]
            return (diff**2).sum(axis=2).mean(axis=1)

        r_own = msd(own_idx)
        r_map = msd(mapped_idx)
        r_all = _mean_sq_dist_to_all(emb)
        floored = bool((r_map < _SQDIST_FLOOR).any() or (r_own < _SQDIST_FLOOR).any())
        r_map = np.maximum(r_map, _SQDIST_FLOOR)
        r_own = np.maximum(r_own, _SQDIST_FLOOR)
        si1 = float(np.mean(np.log(r_all / r_map)))
        si2 = float(np.mean(np.log(r_own / r_map)))
        return si1, si2, floored

    si1_yx, si2_yx, f1 = direction(dm.x_emb, idx_x, idx_y)
    si1_xy, si2_xy, f2 = direction(dm.y_emb, idx_y, idx_x)
    elapsed = (time.perf_counter() - t0) / 4

    status = STATUS_DEGENERATE if (f1 or f2) else STATUS_OK
    return (
        IndexEstimate("si1", si1_xy, si1_yx, elapsed, elapsed, params, status),
        IndexEstimate("si2", si2_xy, si2_yx, elapsed, elapsed, params, status),
    )


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def _rho_for_size(emb, target_vals, size, k, metric, n_t, seed, dir_flag):
    """Mean cross-map correlation over n_t seeded random contiguous library
    segments of the given size."""
    n = emb.shape[0]
    rng = np.random.default_rng([seed, dir_flag, size])
    starts = rng.integers(0, n - size + 1, size=n_t)
    uniq, counts = np.unique(starts, return_counts=True)
    rhos = np.empty(len(uniq))
    row_pos = np.arange(n)
    for i, start in enumerate(uniq):
        lib = emb[start:start + size]
        inside = (row_pos >= start) & (row_pos < start + size)
        exclude = np.where(inside, row_pos - start, -1)
        idx, dist = knn_points(PointSet(lib), emb, k, metric, exclude)
        d1 = dist[:, :1]
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.exp(-dist / d1)
        u[d1[:, 0] == 0.0] = 1.0  # equal weights when the nearest hit is exact
        w = u / u.sum(axis=1, keepdims=True)
        estimates = (w * target_vals[start + idx]).sum(axis=1)
        rhos[i] = _pearson(estimates, target_vals)
    return float(np.average(rhos, weights=counts))


def converged_value(rho_start: float, rho_end: float, delta_rho: float) -> float:
    """The cross-map index: rho at the largest library if convergence holds,
    else zero."""
    return float(rho_end) if (rho_end - rho_start) > delta_rho else 0.0


def default_library_sizes(n_rows: int, m: int, n_grid: int = 20) -> list[int]:
    """Geometric ladder of library sizes from m+2 to the full row count."""
    lo, hi = m + 2, n_rows
    if hi <= lo:
        raise InsufficientPointsError("too few rows for any cross-map library")
    sizes = np.unique(np.round(np.geomspace(lo, hi, n_grid)).astype(int))
    return [int(s) for s in sizes]


def ccm_rho_curve(dm: DelayMatrix, p: CcmParams, sizes: list[int],
                  direction: str) -> list[float]:
    """rho(library size) for one direction ("yx" cross-maps from the x
    manifold and detects Y -> X, per the cross-mapping inversion)."""
    if direction == "yx":
        emb, target = dm.x_emb, dm.y_emb[:, -1]
        dir_flag = 0
    elif direction == "xy":
        emb, target = dm.y_emb, dm.x_emb[:, -1]
        dir_flag = 1
    else:
        raise ValidationError(f"unknown direction {direction!r}")
    n = dm.n_rows
    k = dm.m + 1
    for size in sizes:
        if not (dm.m + 2 <= size <= n):
            raise ValidationError("library sizes must lie in [m+2, n_rows]")
    return [_rho_for_size(emb, target, size, k, p.metric, p.n_t, p.seed, dir_flag)
            for size in sizes]


def ccm(dm: DelayMatrix, p: CcmParams = CcmParams()) -> IndexEstimate:
    """Convergent cross mapping, both directions.

    Only the smallest (m+2) and largest (full) library sizes enter the index;
    use ccm_rho_curve for the whole convergence curve.
    """
    n = dm.n_rows
    if n < dm.m + 3:
        raise InsufficientPointsError("too few rows for cross mapping")
    sizes = list(p.library_sizes) if p.library_sizes else [dm.m + 2, n]
    if sorted(sizes) != sizes:
        raise ValidationError("library sizes must be increasing")
    params = {"m": dm.spec.m, "tau": dm.spec.tau, "h": dm.spec.h,
              "T_max": n, **asdict(p)}

    t0 = time.perf_counter()
    curve_yx = ccm_rho_curve(dm, p, sizes, "yx")
    t1 = time.perf_counter()
    curve_xy = ccm_rho_curve(dm, p, sizes, "xy")
    t2 = time.perf_counter()

    v_yx = converged_value(curve_yx[0], curve_yx[-1], p.delta_rho)
    v_xy = converged_value(curve_xy[0], curve_xy[-1], p.delta_rho)
    return IndexEstimate("ccm", v_xy, v_yx, t2 - t1, t1 - t0, params, STATUS_OK)
