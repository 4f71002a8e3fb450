"""Closed-form deterministic Markov-Nash equilibrium under constant volatility.

With ``chi = sqrt(d1 d2 / (th1 th2)) sigma^2`` and ``phi = sqrt(d1 th1 / (d2 th2))``
the equilibrium holdings are

    pi1(t) = pi1_0 cosh(chi tau) + (pi2_0 / phi) sinh(chi tau)
    pi2(t) = phi pi1_0 sinh(chi tau) + pi2_0 cosh(chi tau),      tau = t - s

and each investor trades at ``x_i = -d pi_i / dt``.  Holdings jump from zero
to ``pi_i0`` at the start time.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from typing import IO

import numpy as np
from scipy.integrate import solve_ivp

from .model import ControlBounds, ControlKind, PiecewiseControl, Scenario, TimeGrid


class NonConstantVolatility(ValueError):
    pass


class ConditionsFailed(ValueError):
    def __init__(self, report: "ConditionsReport"):
        self.report = report
        super().__init__("equilibrium conditions fail: " + ", ".join(report.failed()))


@dataclass(frozen=True)
class CouplingConstants:
    chi: float
    varphi: float


def _sigma(scenario: Scenario) -> float:
    if not scenario.vol.is_constant:
        raise NonConstantVolatility("the closed-form equilibrium needs constant volatility")
    return float(scenario.vol.sigma)


def coupling_constants(scenario: Scenario) -> CouplingConstants:
    sig = _sigma(scenario)
    d1, d2 = scenario.delta(1), scenario.delta(2)
    t1, t2 = scenario.theta(1), scenario.theta(2)
    return CouplingConstants(math.sqrt(d1 * d2 / (t1 * t2)) * sig * sig, math.sqrt(d1 * t1 / (d2 * t2)))


@dataclass(frozen=True)
class ConditionsReport:
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    varphi: float
    max_abs_initial: float
    cond_iii_lhs: float
    cond_iii_rhs: float

    @property
    def all_hold(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_iii

    def failed(self) -> list[str]:
        return [n for n in ("cond_i", "cond_ii", "cond_iii") if not getattr(self, n)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["all_hold"] = self.all_hold
        return d


def check_conditions(scenario: Scenario, bounds: ControlBounds | None = None) -> ConditionsReport:
    """Evaluate (i) phi != 1, (ii) a nonzero initial holding, (iii) containment.

    (iii) is ``exp(chi T)((1+phi)|pi1_0| + (1+1/phi)|pi2_0|) <= min(|pi_hi|, |pi_lo|)``
    with the horizon ``T`` as printed, not ``T - s``.
    """
    bounds = bounds or scenario.bounds
    c = coupling_constants(scenario)
    m = scenario.market
    a, b = abs(m.pi1_0), abs(m.pi2_0)
    lhs = math.exp(c.chi * m.T) * ((1 + c.varphi) * a + (1 + 1 / c.varphi) * b)
    rhs = min(abs(bounds.pi_hi), abs(bounds.pi_lo))
    return ConditionsReport(
        cond_i=c.varphi != 1.0,
        cond_ii=max(a, b) != 0.0,
        cond_iii=lhs <= rhs,
        varphi=c.varphi,
        max_abs_initial=max(a, b),
        cond_iii_lhs=lhs,
        cond_iii_rhs=rhs,
    )


@dataclass(frozen=True)
class EquilibriumSolution:
    constants: CouplingConstants
    pi1_0: float
    pi2_0: float
    s: float
    T: float
    conditions: ConditionsReport

    def holdings(self, t) -> tuple[np.ndarray, np.ndarray]:
        chi, phi = self.constants.chi, self.constants.varphi
        tau = chi * (np.asarray(t, dtype=float) - self.s)
        ch, sh = np.cosh(tau), np.sinh(tau)
        p1 = self.pi1_0 * ch + (self.pi2_0 / phi) * sh
        p2 = phi * self.pi1_0 * sh + self.pi2_0 * ch
        return p1, p2

    def holding(self, t, investor: int) -> np.ndarray:
        return self.holdings(t)[investor - 1]

    def rates(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Selling rates ``-d pi / dt`` from the analytic derivative."""
        chi, phi = self.constants.chi, self.constants.varphi
        tau = chi * (np.asarray(t, dtype=float) - self.s)
        ch, sh = np.cosh(tau), np.sinh(tau)
        x1 = -chi * (self.pi1_0 * sh + (self.pi2_0 / phi) * ch)
        x2 = -chi * (phi * self.pi1_0 * ch + self.pi2_0 * sh)
        return x1, x2

    def rate(self, t, investor: int) -> np.ndarray:
        return self.rates(t)[investor - 1]

    @property
    def initial_jumps(self) -> tuple[float, float]:
        return self.pi1_0, self.pi2_0

    @property
    def crossing_times(self) -> tuple[float | None, float | None]:
        return crossing_time(self, 1), crossing_time(self, 2)

    def rate_control(self, grid: TimeGrid, investor: int) -> PiecewiseControl:
        return PiecewiseControl.from_function(grid, lambda t: self.rate(t, investor))

    def holding_control(self, grid: TimeGrid, investor: int) -> PiecewiseControl:
        return PiecewiseControl.from_function(grid, lambda t: self.holding(t, investor), ControlKind.AUX_HOLDING)


def nash_equilibrium(scenario: Scenario, bounds: ControlBounds | None = None) -> EquilibriumSolution:
    """Closed-form equilibrium; raises ``ConditionsFailed`` unless (i)-(iii) hold."""
    report = check_conditions(scenario, bounds)
    if not report.all_hold:
        raise ConditionsFailed(report)
    m = scenario.market
    return EquilibriumSolution(coupling_constants(scenario), m.pi1_0, m.pi2_0, m.s, m.T, report)


def crossing_time(sol: EquilibriumSolution, investor: int) -> float | None:
    """Zero of the investor's holding path in ``[s, T]``, if there is one.

    ``pi1 = 0`` needs ``tanh(chi tau) = -phi pi1_0 / pi2_0``; ``pi2 = 0`` needs
    ``tanh(chi tau) = -pi2_0 / (phi pi1_0)``.
    """
    chi, phi = sol.constants.chi, sol.constants.varphi
    a, b = sol.pi1_0, sol.pi2_0
    if investor == 1:
        num, den = -phi * a, b
    else:
        num, den = -b, phi * a
    if num == 0.0:
        # the cosh term vanishes: zero at tau = 0 when the sinh term can be
        # nonzero, identically zero otherwise
        return sol.s
    if den == 0.0:
        return None
    r = num / den
    if not -1.0 < r < 1.0:
        return None
    tau = math.atanh(r) / chi
    if tau < 0 or sol.s + tau > sol.T:
        return None
    return sol.s + tau


def ode_rhs(scenario: Scenario):
    """Right-hand side of the coupled holding equations.

    ``d pi1/dt = (d2 sigma^2 / th1) pi2`` and ``d pi2/dt = (d1 sigma^2 / th2) pi1``:
    each investor's holding follows the other's selling rate through the
    best-response rule ``pi_i = -th_j x_j / (d_i sigma^2)``.
    """
    sig2 = _sigma(scenario) ** 2
    k1 = scenario.delta(2) * sig2 / scenario.theta(1)
    k2 = scenario.delta(1) * sig2 / scenario.theta(2)

    def f(t, p):
        return np.array([k1 * p[1], k2 * p[0]])

    return f


def ode_residual(sol: EquilibriumSolution, t: float, scenario: Scenario,
                 h: float | None = None) -> np.ndarray:
    """Residual of the coupled ODE at ``t``.

    Analytic derivatives by default; a centred difference with step ``h``
    when ``h`` is given.
    """
    f = ode_rhs(scenario)
    p = np.array(sol.holdings(t), dtype=float)
    if h is None:
        d = -np.array(sol.rates(t), dtype=float)
    else:
        d = (np.array(sol.holdings(t + h)) - np.array(sol.holdings(t - h))) / (2 * h)
    return d - f(t, p)


def integrate_equilibrium_ode(scenario: Scenario, t_eval: np.ndarray,
                              rtol: float = 1e-11, atol: float = 1e-13) -> np.ndarray:
    """Numerical solution of the coupled holding equations (no closed form).

    A labelled fallback for symmetric investors (``phi == 1``), where the
    closed form is not asserted.  Returns an array ``(2, len(t_eval))``.
    """
    m = scenario.market
    res = solve_ivp(ode_rhs(scenario), (m.s, m.T), [m.pi1_0, m.pi2_0], t_eval=t_eval,
                    rtol=rtol, atol=atol, method="DOP853")
    if not res.success:
        raise RuntimeError(res.message)
    return res.y


@dataclass(frozen=True)
class Volume:
    total: float
    per_investor: tuple[float, float]


def trading_volume(sol: EquilibriumSolution, grid: TimeGrid) -> Volume:
    """Integrated absolute trading plus the initial block trades.

    The price-taking benchmark trades nothing, so the total is also the
    excess volume.
    """
    t = grid.nodes
    out = []
    for i, jump in zip((1, 2), sol.initial_jumps):
        x = np.abs(sol.rate(t, i))
        out.append(float(np.trapezoid(x, t)) + abs(jump))
    return Volume(out[0] + out[1], (out[0], out[1]))


def write_equilibrium_csv(sol: EquilibriumSolution, grid: TimeGrid, fh: IO[str]) -> None:
    """CSV ``t,pi1,pi2,x1,x2`` at every grid node."""
    t = grid.nodes
    p1, p2 = sol.holdings(t)
    x1, x2 = sol.rates(t)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "pi1", "pi2", "x1", "x2"])
    for row in zip(t, p1, p2, x1, x2):
        w.writerow([repr(float(v)) for v in row])


def conditions_json(report: ConditionsReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2)
