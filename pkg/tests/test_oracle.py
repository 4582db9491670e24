import math

import numpy as np
import pytest

from bicausal import (
    LpAuxiliary,
    LpParams,
    ctir_lp_analytic,
    lp_cov_matrix,
    lp_covariance,
    sim_lp,
    te_lp_analytic,
    te_lp_small_lam,
)
from bicausal.errors import NonStationaryError, ValidationError

TABLE_PARAMS = dict(b_x=0.8, b_y=0.4, var_x=0.2, var_y=0.2)


def lp(lam, **kw):
    return LpParams(lam=lam, T=1, **{**TABLE_PARAMS, **kw})


def test_auxiliary_quantities():
    aux = LpAuxiliary.from_params(lp(0.5))
    assert aux.u == pytest.approx(4.2)
    assert aux.v == pytest.approx(0.36)
    assert aux.w == pytest.approx(0.68)


def test_variance_of_y():
    assert lp_covariance(lp(0.5), ("y", "y"), 0) == pytest.approx(0.2 / 0.84)


def test_lag_zero_reduces_to_static_formulas():
    p = lp(0.37)
    aux = LpAuxiliary.from_params(p)
    assert lp_covariance(p, ("y", "y"), 0) == pytest.approx(1 / aux.u, rel=1e-12)
    assert lp_covariance(p, ("x", "y"), 0) == pytest.approx(
        p.lam * p.b_y / (aux.u * aux.w), rel=1e-12)
    # covariance at lag zero is symmetric in its arguments
    assert lp_covariance(p, ("x", "y"), 0) == pytest.approx(
        lp_covariance(p, ("y", "x"), 0), rel=1e-12)
    # c(x_{t+1}, y_t) has the closed form lam/(u w)
    assert lp_covariance(p, ("y", "x"), 1) == pytest.approx(
        p.lam / (aux.u * aux.w), rel=1e-12)


def test_decoupled_cross_covariances_vanish():
    p = lp(0.0)
    for tau in range(6):
        assert lp_covariance(p, ("x", "y"), tau) == 0.0
        assert lp_covariance(p, ("y", "x"), tau) == 0.0


def test_te_analytic_values():
    assert te_lp_analytic(lp(0.0)) == pytest.approx(0.0, abs=1e-15)
    assert te_lp_analytic(lp(0.5)) == pytest.approx(0.5 * math.log(1.2906), abs=5e-5)
    for lam in (0.0, 0.2, 0.5, 0.9):
        assert te_lp_analytic(lp(lam), "xy") == 0.0


def test_te_closed_form_vs_determinant_route():
    for lam in (0.1, 0.4, 0.8):
        p = lp(lam)
        det = lambda terms: np.linalg.det(lp_cov_matrix(p, terms))
        te = 0.5 * math.log(
            det([("x", 0), ("x", 1)]) * det([("x", 0), ("y", 0)])
            / (det([("x", 0), ("y", 0), ("x", 1)]) * lp_covariance(p, ("x", "x"), 0)))
        assert te_lp_analytic(p) == pytest.approx(te, abs=1e-12)


def test_determinant_identities_grid():
    for bx in np.linspace(-0.8, 0.8, 5):
        for by in np.linspace(-0.8, 0.8, 5):
            for lam in (0.1, 0.5, 0.9):
                p = LpParams(lam=lam, T=1, b_x=bx, b_y=by, var_x=0.2, var_y=0.3)
                c2 = np.linalg.det(lp_cov_matrix(p, [("x", 0), ("y", 0)]))
                cx = np.linalg.det(lp_cov_matrix(p, [("x", 0), ("y", 0), ("x", 1)]))
                cy = np.linalg.det(lp_cov_matrix(p, [("x", 0), ("y", 0), ("y", 1)]))
                assert cx == pytest.approx(p.var_x * c2, rel=1e-10)
                assert cy == pytest.approx(p.var_y * c2, rel=1e-10)


def test_small_lambda_expansion():
    # residual against the quadratic leading order stays O(lam^3)
    ratios = []
    for lam in np.linspace(0.01, 0.2, 15):
        p = lp(float(lam))
        resid = te_lp_analytic(p) - te_lp_small_lam(p)
        ratios.append(abs(resid) / lam**3)
    assert max(ratios) < 0.15


def test_te_depends_only_on_variance_ratio():
    for c in (0.5, 3.0, 10.0):
        a = te_lp_analytic(lp(0.6))
        b = te_lp_analytic(lp(0.6, var_x=0.2 * c, var_y=0.2 * c))
        assert a == pytest.approx(b, rel=1e-13)


def test_ctir_analytic_properties():
    assert ctir_lp_analytic(lp(0.0), 5) == pytest.approx(0.0, abs=1e-12)
    assert ctir_lp_analytic(lp(0.0), 5, "xy") == pytest.approx(0.0, abs=1e-12)
    p = lp(0.5)
    assert ctir_lp_analytic(p, 1) == pytest.approx(te_lp_analytic(p), abs=1e-12)
    # the uncoupled direction vanishes for every lag
    assert ctir_lp_analytic(p, 20, "xy") == pytest.approx(0.0, abs=1e-10)


def test_monte_carlo_covariances_quick():
    p = LpParams(lam=0.5, T=200_000, seed=21, **TABLE_PARAMS)
    pair = sim_lp(p)
    for tau in (0, 1, 3):
        for names, a, b in ((("x", "x"), pair.x, pair.x),
                            (("y", "x"), pair.y, pair.x)):
            emp = np.cov(a[: len(a) - tau or None], b[tau:], ddof=0)[0, 1]
            want = lp_covariance(p, names, tau)
            assert emp == pytest.approx(want, rel=0.05)


def test_oracle_rejects_bad_params():
    with pytest.raises(ValidationError):
        te_lp_analytic(LpParams(lam=0.5, T=1, var_y=0.0))
    p = lp(0.5)
    object.__setattr__(p, "b_x", 1.5)  # bypass construction validation
    with pytest.raises(NonStationaryError):
        lp_covariance(p, ("x", "x"), 0)
    with pytest.raises(ValidationError):
        lp_covariance(lp(0.1), ("x", "x"), -1)
    with pytest.raises(ValidationError):
        ctir_lp_analytic(lp(0.1), 0)
