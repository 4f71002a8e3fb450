"""Domain types for the two-investor strategic trading game.

Conventions used throughout the package:

* investors are labelled ``1`` and ``2``; ``opponent(i)`` is the other one;
* a game state is stored in *global* order ``(S, pi_1, pi_2, W_1, W_2)``;
  functions that follow the investor-relative ordering
  ``(S, pi_own, pi_opp, W_own, W_opp)`` say so explicitly;
* trading rates are positive when selling (``d pi = -x dt``);
* all money amounts are plain floats in price units, the risk-free rate is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when a scenario breaks one or more invariants.

    ``violations`` holds every failed ``Violation`` so callers can report all of
    them at once instead of fixing fields one at a time.
    """

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        msg = "; ".join(f"{v.field}: {v.reason}" for v in self.violations)
        super().__init__(msg)


class NonPositiveDelta(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    field: str
    reason: str


def opponent(investor: int) -> int:
    if investor not in (1, 2):
        raise ValueError(f"investor must be 1 or 2, got {investor!r}")
    return 3 - investor


# --------------------------------------------------------------------------- #
# Volatility
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class ConstantVol:
    sigma: float

    def __call__(self, price):
        return np.full_like(np.asarray(price, dtype=float), self.sigma)

    @property
    def is_constant(self) -> bool:
        return True


@dataclass(frozen=True)
class BoundedLipschitzVol:
    """Local volatility ``sigma(p)`` declared bounded and Lipschitz.

    The declared constants are only checked on a probe grid (see
    ``probe_violations``); beyond the grid they are trusted.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    declared_bound: float
    declared_lipschitz: float

    def __call__(self, price):
        return np.asarray(self.evaluator(np.asarray(price, dtype=float)), dtype=float)

    @property
    def is_constant(self) -> bool:
        return False

    def probe_violations(self, probe: np.ndarray | None = None) -> list[Violation]:
        if probe is None:
            probe = np.linspace(-1e3, 1e3, 20001)
        probe = np.sort(np.asarray(probe, dtype=float))
        vals = self(probe)
        out = []
        if not np.all(np.isfinite(vals)):
            out.append(Violation("vol", "non-finite volatility on probe grid"))
            return out
        if np.any(vals < 0):
            out.append(Violation("vol", "negative volatility on probe grid"))
        if np.max(np.abs(vals)) > self.declared_bound:
            out.append(Violation("vol", "sampled |sigma| exceeds declared bound"))
        dp = np.diff(probe)
        keep = dp > 0
        if np.any(keep):
            quot = np.abs(np.diff(vals))[keep] / dp[keep]
            # tolerate rounding in the difference quotients
            if np.max(quot) > self.declared_lipschitz * (1 + 1e-9) + 1e-12:
                out.append(Violation("vol", "sampled difference quotient exceeds declared Lipschitz constant"))
        return out


VolatilitySpec = ConstantVol | BoundedLipschitzVol


# --------------------------------------------------------------------------- #
# Scenario data
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class MarketParams:
    theta_1: float
    theta_2: float
    vol: VolatilitySpec
    s: float = 0.0
    T: float = 1.0
    s0: float = 10.0
    w1_0: float = 0.0
    w2_0: float = 0.0
    pi1_0: float = 0.0
    pi2_0: float = 0.0

    def theta(self, investor: int) -> float:
        return self.theta_1 if investor == 1 else self.theta_2

    def pi0(self, investor: int) -> float:
        return self.pi1_0 if investor == 1 else self.pi2_0

    def w0(self, investor: int) -> float:
        return self.w1_0 if investor == 1 else self.w2_0

    @property
    def initial_state(self) -> "GameState":
        return GameState(self.s0, self.pi1_0, self.pi2_0, self.w1_0, self.w2_0)


@dataclass(frozen=True)
class Preferences:
    delta_1: float
    delta_2: float

    def delta(self, investor: int) -> float:
        return self.delta_1 if investor == 1 else self.delta_2


@dataclass(frozen=True)
class ControlBounds:
    pi_lo: float
    pi_hi: float

    def clamp(self, x):
        return np.clip(x, self.pi_lo, self.pi_hi)


@dataclass(frozen=True)
class Scenario:
    """A market, two preference parameters and the auxiliary holding bounds.

    Instances returned by ``validate_market`` are known to satisfy every
    invariant; constructing one directly skips validation, which the
    simulation code tolerates (e.g. ``sigma = 0`` for deterministic checks).
    """

    market: MarketParams
    prefs: Preferences
    bounds: ControlBounds

    def theta(self, investor: int) -> float:
        return self.market.theta(investor)

    def delta(self, investor: int) -> float:
        return self.prefs.delta(investor)

    @property
    def vol(self) -> VolatilitySpec:
        return self.market.vol

    def grid(self, n_steps: int) -> "TimeGrid":
        return TimeGrid.uniform(self.market.s, self.market.T, n_steps)


def validate_market(params: MarketParams, prefs: Preferences, bounds: ControlBounds,
                    probe: np.ndarray | None = None) -> Scenario:
    """Check every invariant and bundle the inputs into a ``Scenario``.

    Raises:
        ValidationError: listing every failed invariant.
    """
    v: list[Violation] = []
    for name in ("theta_1", "theta_2"):
        val = getattr(params, name)
        if not (math.isfinite(val) and val > 0):
            v.append(Violation(name, "impact coefficient must be positive and finite"))
    if not (math.isfinite(params.s) and params.s >= 0):
        v.append(Violation("s", "start time must be >= 0"))
    if not (math.isfinite(params.T) and params.T > params.s):
        v.append(Violation("T", "horizon must be finite and exceed the start time"))
    for name in ("s0", "w1_0", "w2_0", "pi1_0", "pi2_0"):
        if not math.isfinite(getattr(params, name)):
            v.append(Violation(name, "must be finite"))

    vol = params.vol
    if isinstance(vol, ConstantVol):
        if not (math.isfinite(vol.sigma) and vol.sigma > 0):
            v.append(Violation("sigma", "constant volatility must be positive"))
    elif isinstance(vol, BoundedLipschitzVol):
        if not vol.declared_bound > 0:
            v.append(Violation("vol", "declared bound must be positive"))
        if not vol.declared_lipschitz > 0:
            v.append(Violation("vol", "declared Lipschitz constant must be positive"))
        v.extend(vol.probe_violations(probe))
    else:
        v.append(Violation("vol", f"unknown volatility spec {type(vol).__name__}"))

    for name in ("delta_1", "delta_2"):
        val = getattr(prefs, name)
        if not (math.isfinite(val) and val > 0):
            v.append(Violation(name, "risk aversion must be positive"))

    if not bounds.pi_lo <= 0:
        v.append(Violation("pi_lo", "lower bound must be <= 0 so that 0 is admissible"))
    if not bounds.pi_hi >= 0:
        v.append(Violation("pi_hi", "upper bound must be >= 0 so that 0 is admissible"))
    if bounds.pi_lo == bounds.pi_hi == 0:
        v.append(Violation("pi_hi", "zero-width bounds leave only the zero control"))
    if not (math.isfinite(bounds.pi_lo) and math.isfinite(bounds.pi_hi)):
        v.append(Violation("pi_lo", "bounds must be finite (compact control set)"))

    if v:
        raise ValidationError(v)
    return Scenario(params, prefs, bounds)


# --------------------------------------------------------------------------- #
# States
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class GameState:
    S: float
    pi_1: float
    pi_2: float
    W_1: float
    W_2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.pi_1, self.pi_2, self.W_1, self.W_2], dtype=float)

    @classmethod
    def from_array(cls, a) -> "GameState":
        a = np.asarray(a, dtype=float)
        return cls(*(float(x) for x in a))

    def pi(self, investor: int) -> float:
        return self.pi_1 if investor == 1 else self.pi_2

    def W(self, investor: int) -> float:
        return self.W_1 if investor == 1 else self.W_2

    def relative(self, investor: int) -> np.ndarray:
        """``(S, pi_own, pi_opp, W_own, W_opp)`` for ``investor``."""
        return np.asarray(self.as_array()[list(relative_index(investor))])


def relative_index(investor: int) -> tuple[int, int, int, int, int]:
    """Global positions of ``(S, pi_own, pi_opp, W_own, W_opp)``."""
    return (0, 1, 2, 3, 4) if investor == 1 else (0, 2, 1, 4, 3)


@dataclass(frozen=True)
class AuxState:
    """Auxiliary coordinates ``(P, pi_opp, w_own, w_opp)`` of one investor."""

    P: float
    pi_opp: float
    w_own: float
    w_opp: float

    def as_array(self) -> np.ndarray:
        return np.array([self.P, self.pi_opp, self.w_own, self.w_opp], dtype=float)

    @classmethod
    def from_array(cls, a) -> "AuxState":
        a = np.asarray(a, dtype=float)
        return cls(*(float(x) for x in a))


# --------------------------------------------------------------------------- #
# Grids and controls
# --------------------------------------------------------------------------- #


class GridMismatch(ValueError):
    pass


class BoundsViolation(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeGrid:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a time grid needs at least two nodes")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, start: float, stop: float, n_steps: int) -> "TimeGrid":
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        return cls(np.linspace(start, stop, n_steps + 1))

    @property
    def n_steps(self) -> int:
        return self.nodes.size - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def start(self) -> float:
        return float(self.nodes[0])

    @property
    def stop(self) -> float:
        return float(self.nodes[-1])

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and self.nodes.shape == other.nodes.shape \
            and bool(np.array_equal(self.nodes, other.nodes))

    def __hash__(self):
        return hash(self.nodes.tobytes())


class ControlKind(Enum):
    TRADING_RATE = "rate"
    AUX_HOLDING = "holding"


@dataclass(frozen=True, eq=False)
class PiecewiseControl:
    """One value per grid interval, held constant on ``(t_k, t_{k+1}]``."""

    grid: TimeGrid
    values: np.ndarray
    kind: ControlKind = ControlKind.TRADING_RATE

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size != self.grid.n_steps:
            raise GridMismatch(f"{vals.size} control values for a grid with {self.grid.n_steps} intervals")
        if not np.all(np.isfinite(vals)):
            raise ValueError("control values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: TimeGrid, value: float, kind: ControlKind = ControlKind.TRADING_RATE):
        return cls(grid, np.full(grid.n_steps, float(value)), kind)

    @classmethod
    def zeros(cls, grid: TimeGrid, kind: ControlKind = ControlKind.TRADING_RATE):
        return cls.constant(grid, 0.0, kind)

    @classmethod
    def from_function(cls, grid: TimeGrid, fn: Callable[[np.ndarray], np.ndarray],
                      kind: ControlKind = ControlKind.TRADING_RATE):
        """Sample ``fn`` at the left node of every interval."""
        return cls(grid, np.asarray(fn(grid.nodes[:-1]), dtype=float), kind)

    def check_bounds(self, bounds: ControlBounds) -> None:
        if self.kind is ControlKind.AUX_HOLDING:
            lo, hi = float(self.values.min()), float(self.values.max())
            if lo < bounds.pi_lo or hi > bounds.pi_hi:
                raise BoundsViolation(f"holding control leaves [{bounds.pi_lo}, {bounds.pi_hi}]: range [{lo}, {hi}]")

    def integral(self) -> float:
        return float(np.sum(self.values * self.grid.dt))


# --------------------------------------------------------------------------- #
# Utility
# --------------------------------------------------------------------------- #


def cara_utility(w, delta: float):
    """Exponential utility ``-(1/delta) exp(-delta w)``."""
    if not delta > 0:
        raise NonPositiveDelta(f"risk aversion must be positive, got {delta}")
    return -np.exp(-delta * np.asarray(w, dtype=float)) / delta


def certainty_equivalent(u, delta: float):
    """Inverse of ``cara_utility``."""
    if not delta > 0:
        raise NonPositiveDelta(f"risk aversion must be positive, got {delta}")
    return -np.log(-delta * np.asarray(u, dtype=float)) / delta
