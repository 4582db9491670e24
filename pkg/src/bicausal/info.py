"""Histogram and k-NN information-theoretic causality estimators.

Transfer entropy via plug-in histogram entropies or via the k-nearest-
neighbour conditional mutual information estimate (max-norm, digamma
counts with strict radii), the shuffle-corrected effective variant, and
the lag-averaged transinformation rate. Everything is reported in nats.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, asdict

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .core import (
    STATUS_DEGENERATE,
    STATUS_OK,
    DelayMatrix,
    IndexEstimate,
    SeriesPair,
    embed,
)
from .errors import InsufficientDataError, InsufficientPointsError, ValidationError
from .neighbors import seeded_jitter


@dataclass(frozen=True)
class HistParams:
    """Equal-width binning with N bins per scalar dimension."""

    N: int = 8

    def __post_init__(self):
        if self.N < 2:
            raise ValidationError("need at least two bins")


@dataclass(frozen=True)
class KsgParams:
    """k-NN estimator settings; jitter breaks exact distance ties."""

    k: int = 4
    jitter_scale: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")


@dataclass(frozen=True)
class EteParams:
    n_shuffle: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_shuffle < 1:
            raise ValidationError("need at least one shuffle")


@dataclass(frozen=True)
class CtirParams:
    tau_max: int = 5
    k: int = 4
    jitter_scale: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.tau_max < 1:
            raise ValidationError("tau_max must be >= 1")
        if self.k < 1:
            raise ValidationError("k must be >= 1")


# ---------------------------------------------------------------------------
# histogram machinery


def hist_entropy(samples: np.ndarray, edges: list[np.ndarray]) -> float:
    """Plug-in Shannon entropy (nats) over the product bins defined by
    per-dimension edge arrays. Values exactly on the upper edge fall into
    the last bin; interior edges are right-open."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise InsufficientDataError("cannot bin an empty sample")
    if pts.shape[1] != len(edges):
        raise ValidationError("one edge array per dimension required")
    codes = np.zeros(pts.shape[0], dtype=np.int64)
    for d, e in enumerate(edges):
        e = np.asarray(e, dtype=float)
        v = pts[:, d]
        if v.min() < e[0] or v.max() > e[-1]:
            raise ValidationError("edges do not cover the sample range")
        idx = np.searchsorted(e, v, side="right") - 1
        np.clip(idx, 0, len(e) - 2, out=idx)
        codes = codes * (len(e) - 1) + idx
    _, counts = np.unique(codes, return_counts=True)
    freq = counts / pts.shape[0]
    return float(-(freq * np.log(freq)).sum())


def _equal_width_edges(values: np.ndarray, n_bins: int) -> np.ndarray | None:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return None
    return np.linspace(lo, hi, n_bins + 1)


def _te_hist_one(cond_emb, src_emb, fut, cond_edge, src_edge):
    """TE = H(cond, fut) + H(cond, src) - H(cond) - H(cond, src, fut)."""
    m = cond_emb.shape[1]
    e_c = [cond_edge] * m
    e_s = [src_edge] * src_emb.shape[1]
    h_cf = hist_entropy(np.column_stack([cond_emb, fut]), e_c + [cond_edge])
    h_cs = hist_entropy(np.column_stack([cond_emb, src_emb]), e_c + e_s)
    h_c = hist_entropy(cond_emb, e_c)
    h_csf = hist_entropy(np.column_stack([cond_emb, src_emb, fut]), e_c + e_s + [cond_edge])
    return h_cf + h_cs - h_c - h_csf


def te_hist(dm: DelayMatrix, p: HistParams = HistParams()) -> IndexEstimate:
    """Histogram transfer entropy, both directions.

    Bin edges are N equal-width bins per variable spanning that variable's
    observed range in the delay matrix, so the estimate is exactly invariant
    under increasing affine maps of either series.
    """
    params = {"m": dm.spec.m, "tau": dm.spec.tau, "h": dm.spec.h, **asdict(p)}
    x_edge = _equal_width_edges(np.concatenate([dm.x_emb.ravel(), dm.x_future]), p.N)
    y_edge = _equal_width_edges(np.concatenate([dm.y_emb.ravel(), dm.y_future]), p.N)
    if x_edge is None or y_edge is None:
        return IndexEstimate("te_hist", float("nan"), float("nan"), 0.0, 0.0,
                             params, STATUS_DEGENERATE)
    t0 = time.perf_counter()
    v_yx = _te_hist_one(dm.x_emb, dm.y_emb, dm.x_future, x_edge, y_edge)
    t1 = time.perf_counter()
    v_xy = _te_hist_one(dm.y_emb, dm.x_emb, dm.y_future, y_edge, x_edge)
    t2 = time.perf_counter()
    return IndexEstimate("te_hist", v_xy, v_yx, t2 - t1, t1 - t0, params, STATUS_OK)


def ete_hist(dm: DelayMatrix, p: HistParams = HistParams(),
             e: EteParams = EteParams()) -> IndexEstimate:
    """Effective transfer entropy: TE minus its mean over seeded whole-series
    permutations of the source variable (applied before re-embedding)."""
    base = te_hist(dm, p)
    params = {**base.params, **asdict(e)}
    if base.status != STATUS_OK:
        return IndexEstimate("ete_hist", float("nan"), float("nan"), 0.0, 0.0,
                             params, base.status)
    rng = np.random.default_rng(e.seed)
    perms = [rng.permutation(dm.source.T) for _ in range(e.n_shuffle)]

    def shuffled_mean(direction: str) -> float:
        vals = []
        for perm in perms:
            if direction == "yx":
                pair = SeriesPair(dm.source.x, dm.source.y[perm],
                                  dm.source.x_missing, dm.source.y_missing[perm])
            else:
                pair = SeriesPair(dm.source.x[perm], dm.source.y,
                                  dm.source.x_missing[perm], dm.source.y_missing)
            sdm = embed(pair, dm.spec)
            xe = _equal_width_edges(np.concatenate([sdm.x_emb.ravel(), sdm.x_future]), p.N)
            ye = _equal_width_edges(np.concatenate([sdm.y_emb.ravel(), sdm.y_future]), p.N)
            if direction == "yx":
                vals.append(_te_hist_one(sdm.x_emb, sdm.y_emb, sdm.x_future, xe, ye))
            else:
                vals.append(_te_hist_one(sdm.y_emb, sdm.x_emb, sdm.y_future, ye, xe))
        return float(np.mean(vals))

    t0 = time.perf_counter()
    v_yx = base.value_yx - shuffled_mean("yx")
    t1 = time.perf_counter()
    v_xy = base.value_xy - shuffled_mean("xy")
    t2 = time.perf_counter()
    return IndexEstimate("ete_hist", v_xy, v_yx,
                         base.elapsed_xy + (t2 - t1), base.elapsed_yx + (t1 - t0),
                         params, STATUS_OK)


# ---------------------------------------------------------------------------
# k-NN (max-norm, digamma-count) machinery


def _as_columns(arr) -> np.ndarray:
    if arr is None:
        return np.empty((0, 0))
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _has_ties(data: np.ndarray) -> bool:
    for col in data.T:
        if len(np.unique(col)) < len(col):
            return True
    return False


def _strict_counts(points: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Per-point count of *other* points strictly within each radius (max-norm)."""
    tree = cKDTree(points)
    counts = np.zeros(len(points), dtype=np.int64)
    pos = radii > 0.0
    if pos.any():
        shrunk = np.nextafter(radii[pos], -np.inf)
        counts[pos] = tree.query_ball_point(points[pos], r=shrunk, p=np.inf,
                                            return_length=True) - 1
    return counts


def _cmi_ksg_impl(a, b, c, p: KsgParams) -> tuple[float, bool]:
    """Returns (estimate, degenerate). Degenerate means both marginal strict
    counts saturated below k: the estimator hit its resolution ceiling."""
    A, B, C = _as_columns(a), _as_columns(b), _as_columns(c)
    n = A.shape[0]
    if B.shape[0] != n or (C.size and C.shape[0] != n):
        raise ValidationError("sample blocks must be aligned")
    if p.k >= n:
        raise InsufficientPointsError("k must be smaller than the sample count")
    if not (A.std(axis=0).any() and B.std(axis=0).any()):
        # a constant block carries no information; jittered noise would only
        # fake an estimate
        return float("nan"), True

    blocks = [blk for blk in (A, B, C) if blk.size]
    joint = np.hstack(blocks)
    if _has_ties(joint):
        joint = seeded_jitter(joint, p.jitter_scale, p.seed)
    dims = [blk.shape[1] for blk in (A, B, C)]
    ja, jb = joint[:, :dims[0]], joint[:, dims[0]:dims[0] + dims[1]]
    jc = joint[:, dims[0] + dims[1]:]

    d_k = cKDTree(joint).query(joint, k=[p.k + 1], p=np.inf)[0][:, 0]
    if jc.shape[1]:
        n_ac = _strict_counts(np.hstack([ja, jc]), d_k)
        n_bc = _strict_counts(np.hstack([jb, jc]), d_k)
        n_c = _strict_counts(jc, d_k)
    else:
        n_ac = _strict_counts(ja, d_k)
        n_bc = _strict_counts(jb, d_k)
        n_c = np.where(d_k > 0.0, n - 1, 0)

    value = float(digamma(p.k) - np.mean(digamma(n_ac + 1) + digamma(n_bc + 1)
                                         - digamma(n_c + 1)))
    degenerate = bool(n_ac.mean() < p.k and n_bc.mean() < p.k)
    return value, degenerate


def cmi_ksg(a, b, c=None, p: KsgParams = KsgParams()) -> float:
    """Conditional mutual information I(a; b | c) in nats by the k-NN method.

    With c empty this reduces to the plain k-NN mutual information. Seeded
    jitter is applied automatically when any coordinate contains duplicate
    values. Saturated inputs (e.g. a == b exactly) stay finite, plateauing
    near digamma(n) - digamma(k); a constant a or b block is degenerate and
    yields NaN.
    """
    return _cmi_ksg_impl(a, b, c, p)[0]


def te_ksg(dm: DelayMatrix, p: KsgParams = KsgParams()) -> IndexEstimate:
    """k-NN transfer entropy: I(future; source embedding | own embedding)."""
    params = {"m": dm.spec.m, "tau": dm.spec.tau, "h": dm.spec.h, **asdict(p)}
    t0 = time.perf_counter()
    v_yx, deg_yx = _cmi_ksg_impl(dm.x_future, dm.y_emb, dm.x_emb, p)
    t1 = time.perf_counter()
    v_xy, deg_xy = _cmi_ksg_impl(dm.y_future, dm.x_emb, dm.y_emb, p)
    t2 = time.perf_counter()
    status = STATUS_DEGENERATE if (deg_yx or deg_xy) else STATUS_OK
    return IndexEstimate("te_ksg", v_xy, v_yx, t2 - t1, t1 - t0, params, status)


def ctir(pair: SeriesPair, p: CtirParams) -> IndexEstimate:
    """Lag-averaged conditional mutual information (net flow via D).

    For each lag tau = 1..tau_max both directions evaluate
    I(effect_{t+tau}; cause_t | effect_t); rows touching missing samples at
    any of the three time points are dropped per lag.
    """
    if pair.T <= p.tau_max + 2:
        raise InsufficientDataError("series too short for the requested tau_max")
    kp = KsgParams(k=p.k, jitter_scale=p.jitter_scale, seed=p.seed)
    params = asdict(p)

    def one_direction(effect, cause, miss_e, miss_c):
        vals, any_deg = [], False
        for tau in range(1, p.tau_max + 1):
            t = np.arange(pair.T - tau)
            ok = ~(miss_e[t] | miss_c[t] | miss_e[t + tau])
            if ok.sum() <= p.k:
                raise InsufficientDataError(f"too few complete rows at lag {tau}")
            v, deg = _cmi_ksg_impl(effect[t + tau][ok], cause[t][ok], effect[t][ok], kp)
            vals.append(v)
            any_deg |= deg
        return float(np.mean(vals)), any_deg

    t0 = time.perf_counter()
    v_yx, deg_yx = one_direction(pair.x, pair.y, pair.x_missing, pair.y_missing)
    t1 = time.perf_counter()
    v_xy, deg_xy = one_direction(pair.y, pair.x, pair.y_missing, pair.x_missing)
    t2 = time.perf_counter()
    status = STATUS_DEGENERATE if (deg_yx or deg_xy) else STATUS_OK
    return IndexEstimate("ctir", v_xy, v_yx, t2 - t1, t1 - t0, params, status)
