"""Best responses through the auxiliary (holding-as-control) problem.

Given the opponent's selling rate ``x_opp``, the optimal auxiliary holding is
the target ``-theta_opp x_opp / (delta sigma^2)`` clamped to the admissible
interval.  The corresponding trading rate is minus the time derivative of the
holding path, with an initial block trade from zero holdings.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import IO

import numpy as np

from .model import ControlKind, PiecewiseControl, Scenario, opponent


class RegionLabel(Enum):
    CONTINUATION_UPPER = "continuation_upper"
    CONTINUATION_LOWER = "continuation_lower"
    CONTROL = "control"


class FixedPointDivergence(ArithmeticError):
    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(f"clamped fixed point not found after {iterations} iterations")


class RegularityWarning(UserWarning):
    """The holding path touches a bound; the implied rate may be irregular."""


def _target(x_opp, sigma, scenario: Scenario, investor: int):
    j = opponent(investor)
    return -scenario.theta(j) * x_opp / (scenario.delta(investor) * sigma * sigma)


def _check_width(scenario: Scenario) -> None:
    if scenario.bounds.pi_lo == scenario.bounds.pi_hi:
        raise ValueError("zero-width holding bounds are not supported")


def _solve_fixed_point(x_opp: float, P: float, scenario: Scenario, investor: int,
                       damping: float = 0.5, tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Solve ``pi = clamp(target(sigma(P + theta pi)))`` for non-constant sigma.

    Damped iteration first; if it stalls, bisection on the bracket
    ``[pi_lo, pi_hi]`` where ``g(pi) = pi - clamp(target(pi))`` changes sign.
    Returns ``(pi, unclamped target at pi)``.
    """
    lo, hi = scenario.bounds.pi_lo, scenario.bounds.pi_hi
    th = scenario.theta(investor)
    vol = scenario.vol

    def tgt(p):
        sig = float(vol(np.array(P + th * p)))
        if not sig > 0:
            raise FixedPointDivergence(0)
        return float(_target(x_opp, sig, scenario, investor))

    p = 0.0
    for _ in range(max_iter):
        new = (1 - damping) * p + damping * min(max(tgt(p), lo), hi)
        if abs(new - p) <= tol:
            return new, tgt(new)
        p = new

    def g(p):
        return p - min(max(tgt(p), lo), hi)

    a, b = lo, hi
    ga, gb = g(a), g(b)
    if ga == 0:
        return a, tgt(a)
    if gb == 0:
        return b, tgt(b)
    if ga > 0 or gb < 0:
        raise FixedPointDivergence(max_iter)
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        gm = g(m)
        if gm == 0 or (b - a) < tol:
            return m, tgt(m)
        if gm < 0:
            a = m
        else:
            b = m
    raise FixedPointDivergence(2 * max_iter)


def unclamped_target(x_opp: float, P: float, scenario: Scenario, investor: int) -> float:
    _check_width(scenario)
    if scenario.vol.is_constant:
        return float(_target(x_opp, scenario.vol.sigma, scenario, investor))
    return _solve_fixed_point(x_opp, P, scenario, investor)[1]


def optimal_aux_pointwise(x_opp: float, P: float, scenario: Scenario, investor: int) -> float:
    """Optimal auxiliary holding against an instantaneous opponent rate.

    ``P`` (auxiliary price) only matters for price-dependent volatility, where
    the holding enters the volatility argument and a fixed point is solved.
    """
    _check_width(scenario)
    b = scenario.bounds
    if scenario.vol.is_constant:
        return float(min(max(_target(x_opp, scenario.vol.sigma, scenario, investor), b.pi_lo), b.pi_hi))
    return _solve_fixed_point(x_opp, P, scenario, investor)[0]


def classify_region(x_opp: float, P: float, scenario: Scenario, investor: int) -> RegionLabel:
    """Upper/lower continuation region when the target reaches a bound (inclusive)."""
    t = unclamped_target(x_opp, P, scenario, investor)
    if t >= scenario.bounds.pi_hi:
        return RegionLabel.CONTINUATION_UPPER
    if t <= scenario.bounds.pi_lo:
        return RegionLabel.CONTINUATION_LOWER
    return RegionLabel.CONTROL


@dataclass(frozen=True)
class BestResponse:
    pi_path: PiecewiseControl
    rate_path: PiecewiseControl
    initial_jump: float
    regions: tuple
    touches_bounds: bool

    def holding_at_nodes(self) -> np.ndarray:
        """Holding at every grid node; the last interval's value is held to ``T``."""
        v = self.pi_path.values
        return np.append(v, v[-1])


def rates_from_holdings(pi_values: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """Minus the forward difference quotient; backward difference on the last interval."""
    pi_values = np.asarray(pi_values, dtype=float)
    n = pi_values.size
    x = np.zeros(n)
    if n > 1:
        x[:-1] = -(pi_values[1:] - pi_values[:-1]) / dt[:-1]
        x[-1] = -(pi_values[-1] - pi_values[-2]) / dt[-2]
    return x


def best_response_path(scenario: Scenario, investor: int, x_opp: PiecewiseControl,
                       price_proxy: np.ndarray | None = None) -> BestResponse:
    """Optimal holding and rate paths against a deterministic opponent rate.

    For price-dependent volatility a deterministic auxiliary-price proxy (one
    value per interval) must be supplied; the realized random price path is
    not used.
    """
    grid = x_opp.grid
    n = grid.n_steps
    if scenario.vol.is_constant:
        P = np.zeros(n)
    else:
        if price_proxy is None:
            raise ValueError("price-dependent volatility needs a deterministic price proxy")
        P = np.asarray(price_proxy, dtype=float)
        if P.size != n:
            raise ValueError("price proxy must give one value per interval")
    pi = np.array([optimal_aux_pointwise(xo, p, scenario, investor) for xo, p in zip(x_opp.values, P)])
    regions = tuple(classify_region(xo, p, scenario, investor) for xo, p in zip(x_opp.values, P))
    touches = any(r is not RegionLabel.CONTROL for r in regions)
    if touches:
        warnings.warn("best-response holding touches the holding bounds; the implied "
                      "trading rate need not be regular", RegularityWarning, stacklevel=2)
    rate = rates_from_holdings(pi, grid.dt)
    return BestResponse(
        pi_path=PiecewiseControl(grid, pi, ControlKind.AUX_HOLDING),
        rate_path=PiecewiseControl(grid, rate, ControlKind.TRADING_RATE),
        initial_jump=float(pi[0]),  # holdings before the start time are zero
        regions=regions,
        touches_bounds=touches,
    )


def write_best_response_csv(br: BestResponse, fh: IO[str]) -> None:
    """CSV ``t,pi_star,x_star,region`` with one row per interval (left node)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "pi_star", "x_star", "region"])
    for t, p, x, r in zip(br.pi_path.grid.nodes[:-1], br.pi_path.values, br.rate_path.values, br.regions):
        w.writerow([repr(float(t)), repr(float(p)), repr(float(x)), r.value])
