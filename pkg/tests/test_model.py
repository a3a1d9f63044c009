import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bimerton.model import (ModelParams, Payoff, PayoffKind, build_grid, det2,
                            payoff_eval, trapezoid_weights, validate)

from conftest import CASE_I


def test_case_i_accepted_and_det(derived_i):
    assert det2(derived_i.cov_diff) == pytest.approx(0.12**2 * 0.15**2 * 0.91, rel=1e-14)
    for c in (derived_i.cov_diff, derived_i.cov_jump):
        np.testing.assert_array_equal(c, c.T)
        assert np.all(np.linalg.eigvalsh(c) > 0)


def test_cov_jump_layout(derived_i):
    # bivariate normal of the log jump sizes
    expected = [[0.17**2, -0.2 * 0.17 * 0.13], [-0.2 * 0.17 * 0.13, 0.13**2]]
    np.testing.assert_allclose(derived_i.cov_jump, expected, rtol=1e-15)


def test_drift(derived_i):
    p = CASE_I
    assert derived_i.drift[0] == pytest.approx(p.r - p.lam * derived_i.kappa_x - p.sigma_x**2 / 2)
    assert derived_i.drift[1] == pytest.approx(p.r - p.lam * derived_i.kappa_y - p.sigma_y**2 / 2)


def test_kappa_value(derived_i):
    assert derived_i.kappa_x == pytest.approx(-0.08199, abs=5e-6)


def test_kappa_monte_carlo(derived_i):
    rng = np.random.default_rng(12345)
    n = 2_000_000
    for mu, sd, kappa in ((-0.10, 0.17, derived_i.kappa_x), (0.10, 0.13, derived_i.kappa_y)):
        s = np.exp(rng.normal(mu, sd, n)) - 1
        se = s.std(ddof=1) / math.sqrt(n)
        assert abs(s.mean() - kappa) < 3 * se


def test_lambda_zero_accepted():
    d = validate(dataclasses.replace(CASE_I, lam=0.0))
    assert math.isfinite(d.kappa_x) and math.isfinite(d.kappa_y)
    np.testing.assert_allclose(d.drift, [0.05 - 0.0072, 0.05 - 0.01125])


@pytest.mark.parametrize("field, value", [
    ("sigma_x", 0.0), ("sigma_y", -0.1), ("sigma_jx", 0.0), ("sigma_jy", -1.0),
    ("T", 0.0), ("lam", -0.5), ("rho", 1.0), ("rho", -1.0), ("rho_j", 1.0),
    ("r", float("nan")),
])
def test_validate_rejects(field, value):
    with pytest.raises(ValueError, match=field):
        validate(dataclasses.replace(CASE_I, **{field: value}))


def test_payoff_examples():
    pm = Payoff(PayoffKind.PUT_ON_MIN, 100)
    pa = Payoff(PayoffKind.PUT_ON_AVERAGE, 100)
    assert payoff_eval(pm, math.log(90), math.log(110)) == pytest.approx(10)
    assert payoff_eval(pa, math.log(100), math.log(100)) == pytest.approx(0, abs=1e-12)
    assert payoff_eval(pa, math.log(90), math.log(90)) == pytest.approx(10)


def test_payoff_rejects_bad_strike():
    with pytest.raises(ValueError):
        Payoff(PayoffKind.PUT_ON_MIN, -1.0)
    assert Payoff("put_on_average", 5).kind is PayoffKind.PUT_ON_AVERAGE


logs = st.floats(-8, 8, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(kind=st.sampled_from(list(PayoffKind)), strike=st.floats(0.1, 1e3),
       x=logs, y=logs, dx=st.floats(0, 2), dy=st.floats(0, 2))
def test_payoff_bounded_and_monotone(kind, strike, x, y, dx, dy):
    p = Payoff(kind, strike)
    v = payoff_eval(p, x, y)
    assert 0 <= v <= strike
    assert payoff_eval(p, x + dx, y) <= v + 1e-12
    assert payoff_eval(p, x, y + dy) <= v + 1e-12


def test_build_grid_case_i_level0():
    g = build_grid(CASE_I, (90, 90), (1.5, 1.5), 256, 256, 50)
    assert g.dx == pytest.approx(3 / 256, rel=1e-15)
    assert g.dtau == pytest.approx(0.02)
    assert g.x_hat0 == math.log(90)
    assert g.x_ddagger_max - g.x_ddagger_min == pytest.approx(3 * 3.0)


def test_doubling_width_and_n_keeps_dx():
    a = build_grid(CASE_I, (90, 90), (1.5, 1.5), 256, 256, 50)
    b = build_grid(CASE_I, (90, 90), (3.0, 3.0), 512, 512, 50)
    assert a.dx == b.dx and a.dy == b.dy
    assert b.x_max - b.x_min == 2 * (a.x_max - a.x_min)


@settings(max_examples=100, deadline=None)
@given(N=st.integers(2, 200).map(lambda n: 2 * n), J=st.integers(2, 200).map(lambda n: 2 * n),
       wx=st.floats(0.1, 10), wy=st.floats(0.1, 10), X0=st.floats(1, 500))
def test_grid_invariants(N, J, wx, wy, X0):
    g = build_grid(1.0, (X0, X0), (wx, wy), N, J, 7)
    for zmin, zmax, zdmin, zdmax, P, n, ddmin, ddmax in (
        (g.x_min, g.x_max, g.x_dagger_min, g.x_dagger_max, g.P_x, N, g.x_ddagger_min, g.x_ddagger_max),
        (g.y_min, g.y_max, g.y_dagger_min, g.y_dagger_max, g.P_y, J, g.y_ddagger_min, g.y_ddagger_max),
    ):
        assert zdmin == pytest.approx(zmin - (zmax - zmin) / 2)
        assert zdmax == pytest.approx(zmax + (zmax - zmin) / 2)
        assert ddmin == pytest.approx(-1.5 * (zmax - zmin))
        assert ddmax == pytest.approx(1.5 * (zmax - zmin))
        assert P / n == pytest.approx((zdmax - zdmin) / (2 * n))
        assert P / n == pytest.approx((ddmax - ddmin) / (3 * n))
    # anchor is the midpoint of every nesting level, and a node
    assert (g.x_min + g.x_max) / 2 == pytest.approx(g.x_hat0)
    assert (g.x_dagger_min + g.x_dagger_max) / 2 == pytest.approx(g.x_hat0)
    assert g.x_nodes[N] == g.x_hat0 and g.y_nodes[J] == g.y_hat0
    idx = g.index
    assert set(idx.interior_x) <= set(idx.dagger_x) <= set(idx.ddagger_x)
    assert set(idx.interior_y) <= set(idx.dagger_y) <= set(idx.ddagger_y)
    assert (len(idx.interior_x), len(idx.dagger_x), len(idx.ddagger_x)) == (N - 1, 2 * N + 1, 3 * N - 1)
    assert g.x_nodes[g.interior[0]][0] == pytest.approx(g.x_min + g.dx)
    assert g.x_nodes[g.interior[0]][-1] == pytest.approx(g.x_max - g.dx)
    assert g.x_nodes[0] == pytest.approx(g.x_dagger_min)
    assert g.x_disp[0] == pytest.approx(g.x_ddagger_min + g.dx)


@pytest.mark.parametrize("kwargs", [
    dict(spot=(0, 90)), dict(spot=(90, -1)), dict(half_width=(0, 1)),
    dict(N=15), dict(J=7), dict(N=2), dict(M=0),
])
def test_build_grid_rejects(kwargs):
    args = dict(spot=(90, 90), half_width=(1.5, 1.5), N=16, J=16, M=4)
    args.update(kwargs)
    with pytest.raises(ValueError):
        build_grid(CASE_I, **args)


def test_trapezoid_weights(small_grid):
    px, py = trapezoid_weights(small_grid)
    w2 = np.outer(px, py)
    N, J = small_grid.N, small_grid.J
    assert w2[0, 0] == 0.25 and w2[-1, -1] == 0.25
    assert w2[0, J] == 0.5
    assert w2[N, J] == 1.0
    assert set(np.unique(w2)) == {0.25, 0.5, 1.0}
