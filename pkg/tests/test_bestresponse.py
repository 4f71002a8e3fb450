import io
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from merton_cournot.bestresponse import (
    RegionLabel, RegularityWarning, best_response_path, classify_region, optimal_aux_pointwise,
    rates_from_holdings, write_best_response_csv,
)
from merton_cournot.equilibrium import nash_equilibrium
from merton_cournot.model import (
    BoundedLipschitzVol, ControlBounds, MarketParams, PiecewiseControl, Scenario,
)

from conftest import make_scenario


@given(st.floats(-3, 3))
def test_pointwise_target(x):
    sc = make_scenario(bounds=(-1.0, 1.0))
    # -theta_opp x / (delta sigma^2) with delta1 = 4, sigma = 0.5 -> -x
    assert optimal_aux_pointwise(x, 0.0, sc, 1) == pytest.approx(min(max(-x, -1.0), 1.0))


def test_zero_opponent_gives_zero(base_sc):
    g = base_sc.grid(20)
    br = best_response_path(base_sc, 2, PiecewiseControl.zeros(g))
    assert np.all(br.pi_path.values == 0) and np.all(br.rate_path.values == 0)
    assert br.initial_jump == 0.0
    assert all(r is RegionLabel.CONTROL for r in br.regions)


@pytest.mark.parametrize("x, label", [
    (-1.0, RegionLabel.CONTINUATION_UPPER),  # target exactly the upper bound
    (-1.5, RegionLabel.CONTINUATION_UPPER),
    (1.0, RegionLabel.CONTINUATION_LOWER),
    (0.3, RegionLabel.CONTROL),
])
def test_region_labels(x, label):
    sc = make_scenario(bounds=(-1.0, 1.0))
    assert classify_region(x, 0.0, sc, 1) is label


def test_bound_touch_warns():
    sc = make_scenario(bounds=(-1.0, 1.0))
    g = sc.grid(10)
    with pytest.warns(RegularityWarning):
        br = best_response_path(sc, 1, PiecewiseControl.constant(g, -2.0))
    assert br.touches_bounds
    np.testing.assert_array_equal(br.pi_path.values, 1.0)


@pytest.mark.parametrize("investor", [1, 2])
def test_equilibrium_is_a_fixed_point(base_sc, investor):
    sol = nash_equilibrium(base_sc)
    g = base_sc.grid(100)
    x_opp = sol.rate_control(g, 3 - investor)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RegularityWarning)
        br = best_response_path(base_sc, investor, x_opp)
    np.testing.assert_allclose(br.pi_path.values, sol.holding(g.nodes[:-1], investor), atol=1e-12)
    assert br.initial_jump == pytest.approx(base_sc.market.pi0(investor))
    # the discrete rate approximates the analytic equilibrium rate
    np.testing.assert_allclose(br.rate_path.values[:-1], sol.rate(g.nodes[:-2], investor), atol=0.02)


def test_rates_from_holdings():
    dt = np.full(4, 0.5)
    x = rates_from_holdings(np.array([1.0, 0.5, 0.5, 1.5]), dt)
    np.testing.assert_allclose(x, [1.0, 0.0, -2.0, -2.0])


def test_price_dependent_vol_needs_proxy():
    vol = BoundedLipschitzVol(lambda p: 0.3 + 0.1 * np.tanh(p), 0.41, 0.11)
    base = make_scenario()
    sc = Scenario(MarketParams(1, 1, vol, 0, 1, 10), base.prefs, ControlBounds(-5, 5))
    g = sc.grid(5)
    x = PiecewiseControl.constant(g, -0.1)
    with pytest.raises(ValueError):
        best_response_path(sc, 1, x)
    br = best_response_path(sc, 1, x, price_proxy=np.zeros(5))
    # fixed point pi = 0.1 / (4 sigma(theta pi)^2)
    p = br.pi_path.values[0]
    sig = 0.3 + 0.1 * np.tanh(p)
    assert p == pytest.approx(0.1 / (4 * sig ** 2), abs=1e-8)


def test_csv(base_sc):
    g = base_sc.grid(4)
    br = best_response_path(base_sc, 1, PiecewiseControl.constant(g, 0.1))
    buf = io.StringIO()
    write_best_response_csv(br, buf)
    rows = buf.getvalue().splitlines()
    assert rows[0] == "t,pi_star,x_star,region" and len(rows) == 5
    assert rows[1].endswith(",control")
