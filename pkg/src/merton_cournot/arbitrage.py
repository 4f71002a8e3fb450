"""Round-trip trades and a dynamic-arbitrage detector for price impact functions.

A round trip returns holdings to where they started.  Its expected gain from
the investor's own impact is ``E[int pi_t kappa(x_t) dt]`` (the Brownian part
has zero mean), with holdings starting at zero.  Linear impact ``-theta x``
makes every such gain vanish; any other shape admits a trip with a positive
gain among a small family of two- and three-block strategies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .model import ControlKind, PiecewiseControl, TimeGrid


@dataclass(frozen=True)
class LinearImpact:
    theta: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("linear impact needs theta > 0")

    def __call__(self, x):
        return -self.theta * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class CustomImpact:
    evaluator: Callable[[float], float]
    name: str = "custom"

    def __call__(self, x):
        return np.vectorize(self.evaluator, otypes=[float])(x)


ImpactFunction = LinearImpact | CustomImpact


class TripKind(Enum):
    BUY_FAST = "BuyFast"
    SELL_FAST = "SellFast"
    SYMMETRIC_BLOCK = "SymmetricBlock"
    THREE_PHASE = "ThreePhase"


@dataclass(frozen=True)
class RoundTrip:
    control: PiecewiseControl
    kind: TripKind
    alpha: float
    beta: float
    T: float

    @property
    def net_trade(self) -> float:
        return self.control.integral()


def make_roundtrip(kind: TripKind | str, alpha: float, beta: float | None = None, T: float = 1.0) -> RoundTrip:
    """Build one of the deterministic round trips on ``[0, T]``.

    * ``SymmetricBlock``: sell at ``alpha`` on ``[0, T/2]``, buy back at
      ``alpha`` afterwards (``beta`` is ignored).
    * ``SellFast``: sell at ``alpha`` until ``beta T/(alpha+beta)``, then buy
      at ``beta``.
    * ``BuyFast``: buy at ``beta`` until ``alpha T/(alpha+beta)``, then sell
      at ``alpha``.
    * ``ThreePhase``: buy at ``alpha`` on the first third, pause, sell at
      ``alpha`` on the last third.  With ``alpha = kappa(0)`` it probes a
      nonzero impact at zero trading.

    Breakpoints become grid nodes, so the net trade is zero up to rounding.
    """
    kind = TripKind(kind) if isinstance(kind, str) else kind
    if not T > 0:
        raise ValueError("T must be positive")
    if kind is TripKind.SYMMETRIC_BLOCK:
        if alpha == 0:
            raise ValueError("block rate must be nonzero")
        nodes, vals = [0.0, T / 2, T], [alpha, -alpha]
        beta = alpha
    elif kind is TripKind.THREE_PHASE:
        nodes, vals = [0.0, T / 3, 2 * T / 3, T], [-alpha, 0.0, alpha]
        beta = alpha
    else:
        if beta is None or not (alpha > 0 and beta > 0):
            raise ValueError("alpha and beta must be positive")
        if kind is TripKind.SELL_FAST:
            tau = beta * T / (alpha + beta)
            nodes, vals = [0.0, tau, T], [alpha, -beta]
        else:
            tau = alpha * T / (alpha + beta)
            nodes, vals = [0.0, tau, T], [-beta, alpha]
    grid = TimeGrid(np.array(nodes))
    return RoundTrip(PiecewiseControl(grid, np.array(vals), ControlKind.TRADING_RATE), kind, float(alpha), float(beta), float(T))


def expected_gain(kappa: ImpactFunction, trip: RoundTrip) -> float:
    """``int pi kappa(x) dt`` by exact integration of the piecewise-linear holding."""
    x = trip.control.values
    dt = trip.control.grid.dt
    k = kappa(x)
    pi_left = np.concatenate([[0.0], np.cumsum(-x * dt)[:-1]])
    return float(np.sum(k * (pi_left * dt - 0.5 * x * dt * dt)))


def numeric_gain(kappa: ImpactFunction, trip: RoundTrip) -> float:
    """Adaptive-quadrature evaluation of the same integral (independent check)."""
    nodes = trip.control.grid.nodes
    x = trip.control.values
    total, pi0 = 0.0, 0.0
    for t0, t1, xk in zip(nodes[:-1], nodes[1:], x):
        kv = float(kappa(np.array(xk)))
        val, _ = quad(lambda t, p=pi0, t0=t0, xk=xk: (p - xk * (t - t0)) * kv, t0, t1, epsabs=1e-13, epsrel=1e-12)
        total += val
        pi0 = pi0 - xk * (t1 - t0)
    return total


@dataclass(frozen=True)
class Verdict:
    arbitrage: bool
    witness: RoundTrip | None
    gain: float

    def to_dict(self) -> dict:
        out = {"verdict": "Arbitrage" if self.arbitrage else "NoArbitrageFound", "gain": self.gain,
               "witness": None}
        if self.witness is not None:
            w = self.witness
            out["witness"] = {"kind": w.kind.value, "alpha": w.alpha, "beta": w.beta, "T": w.T}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def candidate_trips(kappa: ImpactFunction, alpha_grid: Sequence[float], beta_grid: Sequence[float], T: float) -> list[RoundTrip]:
    trips = []
    for a in alpha_grid:
        for b in beta_grid:
            trips.append(make_roundtrip(TripKind.SELL_FAST, a, b, T))
            trips.append(make_roundtrip(TripKind.BUY_FAST, a, b, T))
    for x in sorted(set(float(v) for v in alpha_grid) | set(-float(v) for v in beta_grid)):
        trips.append(make_roundtrip(TripKind.SYMMETRIC_BLOCK, x, None, T))
    k0 = float(kappa(np.array(0.0)))
    if k0 != 0.0:
        trips.append(make_roundtrip(TripKind.THREE_PHASE, k0, None, T))
        trips.append(make_roundtrip(TripKind.THREE_PHASE, -k0, None, T))
    return trips


def detect_dynamic_arbitrage(kappa: ImpactFunction, alpha_grid: Sequence[float], beta_grid: Sequence[float],
                             T: float, tol: float = 1e-10) -> Verdict:
    """Search the round-trip family for a strictly positive expected gain.

    Returns the best witness; ties within ``1e-12`` go to the smallest
    ``(kind, alpha, beta)``.
    """
    if len(alpha_grid) == 0 or len(beta_grid) == 0:
        raise ValueError("grids must be nonempty")
    trips = candidate_trips(kappa, alpha_grid, beta_grid, T)
    gains = np.array([expected_gain(kappa, t) for t in trips])
    best = float(gains.max())
    if best <= tol:
        return Verdict(False, None, best)
    near = [t for t, g in zip(trips, gains) if g >= best - 1e-12]
    w = min(near, key=lambda t: (t.kind.value, t.alpha, t.beta))
    return Verdict(True, w, float(expected_gain(kappa, w)))


def quadratic_odd_impact() -> CustomImpact:
    """``kappa(x) = -x |x|``: odd but not linear."""
    return CustomImpact(lambda x: -x * abs(x), "quadratic_odd")


def affine_impact(theta: float, offset: float) -> CustomImpact:
    """``kappa(x) = -theta x + offset``."""
    return CustomImpact(lambda x: -theta * x + offset, f"affine({theta},{offset})")


def offset_at_zero_impact(theta: float, kappa0: float) -> CustomImpact:
    """Linear impact everywhere except at zero rate, where it equals ``kappa0``."""
    return CustomImpact(lambda x: kappa0 if x == 0 else -theta * x, f"offset_at_zero({theta},{kappa0})")
