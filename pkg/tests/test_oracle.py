import json

import numpy as np
import pytest

from merton_cournot import oracle as O
from merton_cournot.bestresponse import best_response_path
from merton_cournot.dynamics import BrownianBundle
from merton_cournot.equilibrium import nash_equilibrium
from merton_cournot.model import (
    BoundedLipschitzVol, ControlBounds, ControlKind, GameState, MarketParams, PiecewiseControl, Scenario,
    cara_utility,
)

from conftest import make_scenario


@pytest.fixture
def small():
    sc = make_scenario(T=1.0, bounds=(-2.0, 2.0))
    g = sc.grid(24)
    noise = BrownianBundle.generate(g, 4000, 11)
    x_opp = PiecewiseControl.from_function(g, lambda t: 0.5 - t)
    return sc, g, noise, x_opp


def hold(g, v):
    return PiecewiseControl.constant(g, v, ControlKind.AUX_HOLDING)


@pytest.mark.parametrize("c", [-0.8, 0.0, 0.4])
def test_gaussian_formula(small, c):
    sc, g, noise, x_opp = small
    est = O.estimate_value(sc, 1, hold(g, c), x_opp, noise)
    exact = O.cara_gaussian_value(sc, 1, hold(g, c), x_opp)
    assert abs(est.mean - exact) < 3 * est.std_error + 1e-15


def test_zero_holding_has_no_noise(small):
    sc, g, noise, x_opp = small
    est = O.estimate_value(sc, 1, hold(g, 0.0), x_opp, noise)
    assert est.std_error == 0.0 and est.mean == cara_utility(0.0, 4.0)


def test_se_shrinks_with_paths(small):
    sc, g, _, x_opp = small
    a = O.estimate_value(sc, 1, hold(g, 0.5), x_opp, BrownianBundle.generate(g, 1000, 2))
    b = O.estimate_value(sc, 1, hold(g, 0.5), x_opp, BrownianBundle.generate(g, 10000, 2))
    assert a.std_error / b.std_error == pytest.approx(np.sqrt(10), rel=0.2)


def test_block_objective_matches_simulation(small):
    sc, g, noise, x_opp = small
    edges = O.block_edges(g.n_steps, 4)
    obj = O._BlockObjective(sc, 2, x_opp, noise, edges, 0.0)
    levels = np.array([0.3, -0.2, 0.0, 1.1])
    direct = O.estimate_value(sc, 2, O.expand_blocks(g, levels, edges), x_opp, noise)
    assert obj.means(levels[None, :])[0] == pytest.approx(direct.mean, rel=1e-12)


def test_exhaustive_search_beats_nothing_better(small):
    sc, g, noise, x_opp = small
    br = best_response_path(sc, 1, x_opp)
    cand = O.estimate_value(sc, 1, br.pi_path, x_opp, noise)
    res = O.brute_force_best(sc, 1, x_opp, [-0.5, 0.0, 0.5], 4, noise)
    assert res.exhaustive and res.n_evaluated == 81
    assert O.dominance_check(cand, [("best", res.estimate)]).verdict


def test_random_search_path(small):
    sc, g, noise, x_opp = small
    res = O.brute_force_best(sc, 1, x_opp, np.linspace(-1, 1, 9), 6, noise, n_restarts=20, seed=3)
    assert not res.exhaustive
    again = O.brute_force_best(sc, 1, x_opp, np.linspace(-1, 1, 9), 6, noise, n_restarts=20, seed=3)
    assert res.levels == again.levels
    with pytest.raises(O.BudgetExceeded):
        O.brute_force_best(sc, 1, x_opp, np.linspace(-1, 1, 9), 6, noise, n_restarts=0)


def test_zero_opponent_search_returns_zero(small):
    sc, g, noise, _ = small
    zero = PiecewiseControl.zeros(g)
    res = O.brute_force_best(sc, 1, zero, [-0.5, 0.0, 0.5], 3, noise)
    assert res.levels == (0.0, 0.0, 0.0)


def test_levels_outside_bounds(small):
    sc, g, noise, x_opp = small
    with pytest.raises(ValueError):
        O.brute_force_best(sc, 1, x_opp, [-3.0, 0.0], 2, noise)


def test_search_with_price_dependent_vol():
    vol = BoundedLipschitzVol(lambda p: 0.3 + 0.05 * np.tanh(p - 10), 0.36, 0.06)
    base = make_scenario()
    sc = Scenario(MarketParams(1, 1, vol, 0, 1, 10), base.prefs, ControlBounds(-1, 1))
    g = sc.grid(8)
    noise = BrownianBundle.generate(g, 200, 0)
    res = O.brute_force_best(sc, 1, PiecewiseControl.constant(g, -0.1), [0.0, 0.2], 2, noise)
    assert res.exhaustive and res.n_evaluated == 4


def test_dominance_margin():
    a = O.ValueEstimate(-1.0, 0.1, 100, 0)
    b = O.ValueEstimate(-0.5, 0.1, 100, 0)
    rep = O.dominance_check(a, [("b", b)])
    assert rep.margin == pytest.approx(-0.5 / np.hypot(0.1, 0.1))
    assert not rep.verdict
    assert O.dominance_check(b, [("a", a)]).verdict


def test_invariance_and_equivalence(base_sc):
    g = base_sc.grid(100)
    noise = BrownianBundle.generate(g, 3000, 99)
    x_opp = nash_equilibrium(base_sc).rate_control(g, 2)
    y = GameState(10, 0, 0, 0, 0)
    for side in ("singular", "auxiliary"):
        for q in (0.5, -1.0):
            rep = O.invariance_check(base_sc, 1, y, q, x_opp, noise, side=side)
            assert rep.verdict, rep
    eq = O.equivalence_check(base_sc, 1, y, x_opp, noise)
    assert abs(eq.z) < 3
    d = json.loads(eq.to_json())
    assert set(d) == {"check", "inputs_digest", "mean_a", "mean_b", "se", "z", "verdict"}


def test_concavity(small):
    sc, g, noise, x_opp = small
    r = O.concavity_check(sc, 1, hold(g, 1.0), hold(g, -1.0), 0.4, x_opp, noise)
    assert r.holds and r.strict
    same = O.concavity_check(sc, 1, hold(g, 0.5), hold(g, 0.5), 0.4, x_opp, noise)
    assert same.degenerate and same.holds and same.strict is None
    with pytest.raises(ValueError):
        O.concavity_check(sc, 1, hold(g, 0.5), hold(g, 0.5), 1.0, x_opp, noise)
