"""Seeded benchmark simulators: linear process, Ulam lattice, Henon maps.

Every generator is a pure function of its parameter object. Randomness comes
from numpy's PCG64 (`GENERATOR_NAME`), so a fixed seed reproduces the series
bit-for-bit on this implementation. Transients are discarded before any
sample is recorded: 10^4 iterations for the linear process, 10^5 for the
chaotic maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .core import SeriesPair
from .errors import NumericalEscapeError, ValidationError

GENERATOR_NAME = "PCG64"

TRANSIENTS_LP = 10_000
TRANSIENTS_MAP = 100_000

ESCAPE_THRESHOLD = 1e6
MAX_RESTARTS = 100


def _check_positive_length(T):
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ValidationError("T must be a positive integer")


@dataclass(frozen=True)
class LpParams:
    """Coupled AR(1) pair: x(t+1) = b_x x(t) + lam y(t) + eps_x,
    y(t+1) = b_y y(t) + eps_y. The coupling runs Y -> X."""

    lam: float
    T: int
    seed: int = 0
    b_x: float = 0.8
    b_y: float = 0.4
    var_x: float = 0.2
    var_y: float = 0.2

    def __post_init__(self):
        _check_positive_length(self.T)
        if abs(self.b_x) >= 1 or abs(self.b_y) >= 1:
            raise ValidationError("|b_x| and |b_y| must be < 1 for stationarity")
        if self.var_x < 0 or self.var_y < 0:
            raise ValidationError("innovation variances must be non-negative")
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError("coupling must lie in [0, 1]")


@dataclass(frozen=True)
class UlamParams:
    """Ring of N_L unidirectionally coupled Ulam maps f(s) = 2 - s^2;
    x = site 1, y = site 2 (so the coupling runs X -> Y)."""

    lam: float
    T: int
    seed: int = 0
    N_L: int = 100

    def __post_init__(self):
        _check_positive_length(self.T)
        if self.N_L < 2:
            raise ValidationError("lattice needs at least two sites")
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError("coupling must lie in [0, 1]")


@dataclass(frozen=True)
class HenonUniParams:
    """Unidirectionally coupled Henon maps (X -> Y)."""

    lam: float
    T: int
    seed: int = 0
    a: float = 1.4
    b_x: float = 0.3
    b_y: float = 0.3
    init: tuple | None = None

    def __post_init__(self):
        _check_positive_length(self.T)
        for name in ("a", "b_x", "b_y", "lam"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError("coupling must lie in [0, 1]")
        if self.init is not None and len(self.init) != 4:
            raise ValidationError("init must be (x0, x1, y0, y1)")


@dataclass(frozen=True)
class HenonBiParams:
    """Bidirectionally coupled Henon maps; identical maps use b_y = 0.3,
    non-identical b_y = 0.1."""

    lam_xy: float
    lam_yx: float
    T: int
    seed: int = 0
    a: float = 1.4
    b_x: float = 0.3
    b_y: float = 0.3
    init: tuple | None = None

    def __post_init__(self):
        _check_positive_length(self.T)
        for name in ("lam_xy", "lam_yx"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.4:
                raise ValidationError(f"{name} must lie in [0, 0.4]")
        if self.init is not None and len(self.init) != 4:
            raise ValidationError("init must be (x0, x1, y0, y1)")


def sim_lp(p: LpParams) -> SeriesPair:
    """Simulate the linear process, discarding 10^4 transient iterations."""
    rng = np.random.default_rng(p.seed)
    n = p.T + TRANSIENTS_LP
    sd_x = math.sqrt(p.var_x)
    sd_y = math.sqrt(p.var_y)
    x0 = rng.normal(0.0, sd_x)
    y0 = rng.normal(0.0, sd_y)
    eps_x = rng.normal(0.0, sd_x, size=n - 1)
    eps_y = rng.normal(0.0, sd_y, size=n - 1)

    # AR(1) recursions as IIR filters: out[t] = b*out[t-1] + u[t], out[0]=u[0]
    u_y = np.concatenate(([y0], eps_y))
    y = lfilter([1.0], [1.0, -p.b_y], u_y)
    u_x = np.concatenate(([x0], p.lam * y[:-1] + eps_x))
    x = lfilter([1.0], [1.0, -p.b_x], u_x)

    return SeriesPair(x[TRANSIENTS_LP:], y[TRANSIENTS_LP:])


def ulam_map(s):
    """The Ulam map f(s) = 2 - s^2 (maps [-2, 2] into itself; fixed point 1)."""
    return 2.0 - s * s


def _ulam_step(s, lam, pred, tmp):
    # s_new[l] = f(lam * s[l-1] + (1-lam) * s[l]), ring-closed
    pred[0] = s[-1]
    pred[1:] = s[:-1]
    np.multiply(pred, lam, out=pred)
    np.multiply(s, 1.0 - lam, out=tmp)
    pred += tmp
    np.multiply(pred, pred, out=tmp)
    np.subtract(2.0, tmp, out=s)


def _check_escape(s):
    if not np.all(np.abs(s) <= ESCAPE_THRESHOLD):
        raise NumericalEscapeError("Ulam lattice state escaped")


def sim_ulam(p: UlamParams) -> SeriesPair:
    """Simulate the Ulam lattice, discarding 10^5 transient iterations.

    The initial lattice is drawn uniformly in (-1, 1).
    """
    rng = np.random.default_rng(p.seed)
    s = rng.uniform(-1.0, 1.0, size=p.N_L)
    pred = np.empty_like(s)
    tmp = np.empty_like(s)
    x = np.empty(p.T)
    y = np.empty(p.T)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(TRANSIENTS_MAP + p.T):
            _ulam_step(s, p.lam, pred, tmp)
            if step % 4096 == 0:
                _check_escape(s)
            if step >= TRANSIENTS_MAP:
                i = step - TRANSIENTS_MAP
                x[i] = s[0]
                y[i] = s[1]
    _check_escape(s)
    return SeriesPair(x, y)


def _run_henon(p, x_update, y_update) -> SeriesPair:
    """Iterate a Henon pair with escape-restart handling.

    On divergence the initial conditions are re-drawn (uniform (-0.1, 0.1))
    and the whole run restarts; more than MAX_RESTARTS failures raise.
    """
    rng = np.random.default_rng(p.seed)
    limit = ESCAPE_THRESHOLD
    restarts = MAX_RESTARTS if p.init is None else 1
    for _ in range(restarts):
        if p.init is not None:
            x0, x1, y0, y1 = (float(v) for v in p.init)
        else:
            x0, x1, y0, y1 = (float(v) for v in rng.uniform(-0.1, 0.1, size=4))
        xs = np.empty(p.T)
        ys = np.empty(p.T)
        escaped = False
        for step in range(TRANSIENTS_MAP + p.T):
            if step >= TRANSIENTS_MAP:
                xs[step - TRANSIENTS_MAP] = x0
                ys[step - TRANSIENTS_MAP] = y0
            x2 = x_update(p, x0, x1, y0, y1)
            y2 = y_update(p, x0, x1, y0, y1)
            if not (-limit < x2 < limit and -limit < y2 < limit):
                escaped = True
                break
            x0, x1, y0, y1 = x1, x2, y1, y2
        if not escaped:
            return SeriesPair(xs, ys)
    raise NumericalEscapeError("Henon orbit escaped on every restart")


def _henon_plain_x(p, x0, x1, y0, y1):
    return p.a - x1 * x1 + p.b_x * x0


def _henon_uni_y(p, x0, x1, y0, y1):
    return p.a - (p.lam * x1 + (1.0 - p.lam) * y1) * y1 + p.b_y * y0


def _henon_bi_x(p, x0, x1, y0, y1):
    return p.a - x1 * x1 + p.lam_yx * (x1 * x1 - y1 * y1) + p.b_x * x0


def _henon_bi_y(p, x0, x1, y0, y1):
    return p.a - y1 * y1 + p.lam_xy * (y1 * y1 - x1 * x1) + p.b_y * y0


def sim_henon_uni(p: HenonUniParams) -> SeriesPair:
    """Simulate the unidirectional Henon pair (10^5 transients)."""
    return _run_henon(p, _henon_plain_x, _henon_uni_y)


def sim_henon_bi(p: HenonBiParams) -> SeriesPair:
    """Simulate the bidirectional Henon pair (10^5 transients)."""
    return _run_henon(p, _henon_bi_x, _henon_bi_y)
