"""Regression-error causality indices: local linear (neighbourhood-based),
global RBF, and locally constant predictability improvement."""

from __future__ import annotations

import time
from dataclasses import dataclass, asdict, field

import numpy as np

from .core import STATUS_DEGENERATE, STATUS_OK, DelayMatrix, IndexEstimate
from .errors import InsufficientPointsError, ValidationError
from .neighbors import PointSet, knn_all, metric_p

# relative floor below which a local self-fit counts as deterministic
_EPS_FLOOR = 1e-13


@dataclass(frozen=True)
class EgcParams:
    """Locally linear index over L random delta-neighbourhoods (joint space)."""

    L: int = 100
    delta: float = 0.5
    metric: str = "l1"
    min_points: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise ValidationError("need at least one neighbourhood")
        if self.delta <= 0:
            raise ValidationError("neighbourhood radius must be positive")
        metric_p(self.metric)

    def resolved_min_points(self, m: int) -> int:
        if self.min_points is not None:
            if self.min_points < 2 * m + 2:
                raise ValidationError("min_points must be at least 2m + 2")
            return self.min_points
        return max(2 * m + 2, 10)


@dataclass(frozen=True)
class NlgcParams:
    """Global nonlinear autoregression with P Gaussian RBF kernels per space."""

    P: int = 50
    var: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.P < 1:
            raise ValidationError("need at least one RBF center")
        if self.var <= 0:
            raise ValidationError("RBF variance must be positive")


@dataclass(frozen=True)
class PiParams:
    """Locally constant predictor over R nearest neighbours.

    include_self=True averages the query point's own future into the
    prediction (an R+1 point mean). The published benchmark magnitudes are
    only reproducible with the self point included, so the simulation
    presets switch it on; the default keeps the plain self-excluded
    predictor.
    """

    R: int = 1
    metric: str = "l2"
    include_self: bool = False

    def __post_init__(self):
        if self.R < 1:
            raise ValidationError("need at least one neighbour")
        metric_p(self.metric)


@dataclass(frozen=True)
class OlsResult:
    coef: np.ndarray = field(repr=False)
    residual_variance: float = 0.0
    rank_deficient: bool = False


def ols_fit(design: np.ndarray, target: np.ndarray) -> OlsResult:
    """Least squares via SVD (minimum-norm under rank deficiency, flagged).

    residual_variance is SSR / n.
    """
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    if design.ndim != 2 or design.shape[0] < design.shape[1]:
        raise ValidationError("design must be (n, p) with n >= p")
    if not (np.isfinite(design).all() and np.isfinite(target).all()):
        raise ValidationError("design and target must be finite")
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    return OlsResult(coef, float(resid @ resid) / design.shape[0],
                     rank < design.shape[1])


def kmeans(points, P: int, seed=0, max_iter: int = 100,
           history: list | None = None) -> np.ndarray:
    """Seeded k-means: D^2-weighted init, Lloyd iterations until assignments
    are stable; empty clusters are re-seeded at the farthest point.

    `history`, when given, collects the inertia after every iteration.
    """
    if isinstance(points, PointSet):
        pts = points.points
    else:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
    n = pts.shape[0]
    if P > len(np.unique(pts, axis=0)):
        raise InsufficientPointsError("P exceeds the number of distinct points")
    rng = np.random.default_rng(seed)

    centers = np.empty((P, pts.shape[1]))
    centers[0] = pts[rng.integers(n)]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for j in range(1, P):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            centers[j] = pts[rng.choice(n, p=probs)]
        else:
            centers[j] = pts[rng.integers(n)]
        d2 = np.minimum(d2, ((pts - centers[j]) ** 2).sum(axis=1))

    assign = None
    for _ in range(max_iter):
        d2_all = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2_all.argmin(axis=1)
        if history is not None:
            history.append(float(d2_all.min(axis=1).sum()))
        for j in range(P):
            member = new_assign == j
            if member.any():
                centers[j] = pts[member].mean(axis=0)
            else:
                far = d2_all.min(axis=1).argmax()
                centers[j] = pts[far]
                new_assign[far] = j
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign
    return centers


def _local_index(rows, self_design, joint_design, target):
    """1 - eps_joint/eps_self on one neighbourhood; None when the self fit is
    already (numerically) deterministic."""
    eps_self = ols_fit(self_design[rows], target[rows]).residual_variance
    if eps_self <= _EPS_FLOOR * max(float(target[rows].var()), 1e-30):
        return None
    eps_joint = ols_fit(joint_design[rows], target[rows]).residual_variance
    return float(np.clip(1.0 - eps_joint / eps_self, 0.0, 1.0))


def egc(dm: DelayMatrix, p: EgcParams = EgcParams()) -> IndexEstimate:
    """Local linear error-reduction index averaged over delta-neighbourhoods.

    Neighbourhoods live in the joint embedding space and are shared by both
    directions; a direction is degenerate when no neighbourhood admits a
    usable pair of fits (typical under synchrony).
    """
    n = dm.n_rows
    min_pts = p.resolved_min_points(dm.m)
    z = dm.z_emb
    zset = PointSet(z)
    params = {"m": dm.spec.m, "tau": dm.spec.tau, "h": dm.spec.h,
              "L": p.L, "delta": p.delta, "metric": p.metric,
              "min_points": min_pts, "seed": p.seed}

    t0 = time.perf_counter()
    rng = np.random.default_rng(p.seed)
    refs = np.arange(n) if p.L >= n else rng.choice(n, size=p.L, replace=False)
    hoods = zset.tree.query_ball_point(z[refs], r=p.delta, p=metric_p(p.metric))

    ones = np.ones((n, 1))
    design_x = np.hstack([ones, dm.x_emb])
    design_y = np.hstack([ones, dm.y_emb])
    design_z = np.hstack([ones, z])

    vals_yx, vals_xy = [], []
    for hood in hoods:
        rows = np.asarray(hood)
        if len(rows) < min_pts:
            continue
        v = _local_index(rows, design_x, design_z, dm.x_future)
        if v is not None:
            vals_yx.append(v)
        v = _local_index(rows, design_y, design_z, dm.y_future)
        if v is not None:
            vals_xy.append(v)
    elapsed = time.perf_counter() - t0

    v_yx = float(np.mean(vals_yx)) if vals_yx else float("nan")
    v_xy = float(np.mean(vals_xy)) if vals_xy else float("nan")
    status = STATUS_OK if (vals_yx and vals_xy) else STATUS_DEGENERATE
    return IndexEstimate("egc", v_xy, v_yx, elapsed / 2, elapsed / 2, params, status)


def _rbf_features(emb: np.ndarray, centers: np.ndarray, var: float) -> np.ndarray:
    d2 = ((emb[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-d2 / (2.0 * var))


def nlgc(dm: DelayMatrix, p: NlgcParams = NlgcParams()) -> IndexEstimate:
    """Global RBF error-reduction index.

    Self model: intercept + P Gaussian kernels on the own embedding (centers
    from seeded k-means); joint model appends the other variable's kernels.
    """
    if p.P > dm.n_rows:
        raise InsufficientPointsError("more RBF centers than rows")
    params = {"m": dm.spec.m, "tau": dm.spec.tau, "h": dm.spec.h, **asdict(p)}

    t0 = time.perf_counter()
    feats_x = _rbf_features(dm.x_emb, kmeans(dm.x_emb, p.P, seed=[p.seed, 0]), p.var)
    feats_y = _rbf_features(dm.y_emb, kmeans(dm.y_emb, p.P, seed=[p.seed, 1]), p.var)
    ones = np.ones((dm.n_rows, 1))

    def reduction(self_feats, other_feats, target):
        eps_self = ols_fit(np.hstack([ones, self_feats]), target).residual_variance
        if eps_self <= _EPS_FLOOR * max(float(target.var()), 1e-30):
            return None
        eps_joint = ols_fit(np.hstack([ones, self_feats, other_feats]),
                            target).residual_variance
        return float(np.clip(1.0 - eps_joint / eps_self, 0.0, 1.0))

    v_yx = reduction(feats_x, feats_y, dm.x_future)
    v_xy = reduction(feats_y, feats_x, dm.y_future)
    elapsed = time.perf_counter() - t0

    status = STATUS_OK if (v_yx is not None and v_xy is not None) else STATUS_DEGENERATE
    return IndexEstimate("nlgc",
                         float("nan") if v_xy is None else v_xy,
                         float("nan") if v_yx is None else v_yx,
                         elapsed / 2, elapsed / 2, params, status)


def pi(dm: DelayMatrix, p: PiParams = PiParams()) -> IndexEstimate:
    """Predictability improvement: MSE(own-space k-NN predictor) minus
    MSE(joint-space k-NN predictor) for the horizon value."""
    n = dm.n_rows
    if n <= p.R + 1:
        raise InsufficientPointsError("need more rows than neighbours")
    params = {"m": dm.spec.m, "tau": dm.spec.tau, "h": dm.spec.h, **asdict(p)}

    t0 = time.perf_counter()
    self_col = np.arange(n)[:, None]

    def mse(neighbor_idx, future):
        if p.include_self:
            neighbor_idx = np.hstack([self_col, neighbor_idx])
        pred = future[neighbor_idx].mean(axis=1)
        return float(((future - pred) ** 2).mean())

    idx_z, _ = knn_all(PointSet(dm.z_emb), p.R, p.metric)
    idx_x, _ = knn_all(PointSet(dm.x_emb), p.R, p.metric)
    v_yx = mse(idx_x, dm.x_future) - mse(idx_z, dm.x_future)
    idx_y, _ = knn_all(PointSet(dm.y_emb), p.R, p.metric)
    v_xy = mse(idx_y, dm.y_future) - mse(idx_z, dm.y_future)
    elapsed = time.perf_counter() - t0

    return IndexEstimate("pi", v_xy, v_yx, elapsed / 2, elapsed / 2, params, STATUS_OK)
