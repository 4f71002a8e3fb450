"""Euler-Maruyama simulation of the game state and the auxiliary state.

Every simulation is driven by a ``BrownianBundle``: a block of Gaussian
increments generated once from a seed and then reused for every control being
compared (common random numbers).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .model import (
    AuxState, ControlKind, GameState, GridMismatch, PiecewiseControl,
    Scenario, TimeGrid, opponent, relative_index,
)

#: paths are generated in fixed-size blocks, each block with its own stream,
#: so path ``p`` does not depend on how many paths are requested in total.
PATH_BLOCK = 512
#: state magnitude beyond which a path is treated as exploded.
EXPLOSION_LEVEL = 1e12


class NonFiniteState(FloatingPointError):
    def __init__(self, step: int, n_bad: int = 1):
        self.step = step
        self.n_bad = n_bad
        super().__init__(f"non-finite or exploded state at step {step} on {n_bad} path(s); "
                         "the scenario is probably mis-scaled for this grid")


@dataclass(frozen=True, eq=False)
class BrownianBundle:
    grid: TimeGrid
    increments: np.ndarray  # (n_paths, n_steps)
    seed: int

    @property
    def n_paths(self) -> int:
        return self.increments.shape[0]

    @classmethod
    def generate(cls, grid: TimeGrid, n_paths: int, seed: int) -> "BrownianBundle":
        """Seeded increments with variance ``dt`` on every interval.

        Regenerating with the same ``(grid, seed)`` reproduces the bundle bit
        for bit, and path ``p`` is the same whatever ``n_paths`` is.
        """
        if n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        n_blocks = -(-n_paths // PATH_BLOCK)
        sq = np.sqrt(grid.dt)
        out = np.empty((n_blocks * PATH_BLOCK, grid.n_steps))
        for b in range(n_blocks):
            rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, b])
            out[b * PATH_BLOCK:(b + 1) * PATH_BLOCK] = rng.standard_normal((PATH_BLOCK, grid.n_steps))
        inc = out[:n_paths] * sq
        inc.setflags(write=False)
        return cls(grid, inc, int(seed))

    @classmethod
    def zeros(cls, grid: TimeGrid, n_paths: int = 1) -> "BrownianBundle":
        return cls(grid, np.zeros((n_paths, grid.n_steps)), 0)

    def brownian_paths(self) -> np.ndarray:
        """Cumulative sums, ``B_t - B_s`` at every node (``n_paths, n_steps + 1``)."""
        b = np.zeros((self.n_paths, self.grid.n_steps + 1))
        np.cumsum(self.increments, axis=1, out=b[:, 1:])
        return b


@dataclass(frozen=True)
class CoefficientBundle:
    """Drift and diffusion vectors of one investor's state equations.

    ``a``, ``b``, ``v`` use the ordering ``(S, pi_own, pi_opp, W_own, W_opp)``;
    ``beta``, ``nu`` use ``(P, pi_opp, w_own, w_opp)``.
    """

    a: np.ndarray
    b: np.ndarray
    v: np.ndarray
    beta: np.ndarray
    nu: np.ndarray


def coefficients(state: GameState, investor: int, scenario: Scenario) -> CoefficientBundle:
    j = opponent(investor)
    th, tho = scenario.theta(investor), scenario.theta(j)
    S, p, po = state.S, state.pi(investor), state.pi(j)
    sig = float(scenario.vol(np.array(S)))
    a = np.array([-tho, 0.0, -1.0, -tho * p, -tho * po])
    b = np.array([-th, -1.0, 0.0, -th * p, -th * po])
    v = sig * np.array([1.0, 0.0, 0.0, p, po])
    beta = np.array([-tho, -1.0, -tho * p, th * p - tho * po])
    # the auxiliary diffusion is evaluated at P + theta pi, which is S
    P = S - th * p
    nu = float(scenario.vol(np.array(P + th * p))) * np.array([1.0, 0.0, p, po])
    return CoefficientBundle(a, b, v, beta, nu)


@dataclass
class Diagnostics:
    flagged_paths: list = field(default_factory=list)
    max_state_norm: float = 0.0

    def to_dict(self) -> dict:
        return {"flagged_paths": [int(p) for p in self.flagged_paths],
                "max_state_norm": float(self.max_state_norm)}


@dataclass(eq=False)
class StatePath:
    """Simulated game states.

    ``states`` has shape ``(n_paths, len(times), 5)`` in global coordinate
    order.  With ``record=False`` only the terminal node is kept.
    """

    grid: TimeGrid
    times: np.ndarray
    states: np.ndarray
    x1: PiecewiseControl
    x2: PiecewiseControl
    noise: BrownianBundle
    diagnostics: Diagnostics

    @property
    def terminal(self) -> np.ndarray:
        return self.states[:, -1, :]

    @property
    def valid(self) -> np.ndarray:
        mask = np.ones(self.states.shape[0], dtype=bool)
        mask[self.diagnostics.flagged_paths] = False
        return mask


@dataclass(eq=False)
class AuxPath:
    """Simulated auxiliary states, ``(n_paths, len(times), 4)``."""

    grid: TimeGrid
    times: np.ndarray
    states: np.ndarray
    pi: PiecewiseControl
    x_opp: PiecewiseControl
    investor: int
    noise: BrownianBundle
    diagnostics: Diagnostics

    @property
    def terminal(self) -> np.ndarray:
        return self.states[:, -1, :]

    @property
    def valid(self) -> np.ndarray:
        mask = np.ones(self.states.shape[0], dtype=bool)
        mask[self.diagnostics.flagged_paths] = False
        return mask


def _check_grid(noise: BrownianBundle, *controls: PiecewiseControl) -> None:
    for c in controls:
        if c.grid != noise.grid:
            raise GridMismatch("control and noise grids differ")


def _guard_step(y: np.ndarray, k: int, guard: str, diag: Diagnostics, alive: np.ndarray) -> None:
    norm = np.max(np.abs(y), axis=1)
    bad = ~np.isfinite(norm) | (norm > EXPLOSION_LEVEL)
    if guard == "raise":
        if np.any(bad):
            raise NonFiniteState(k, int(bad.sum()))
    else:
        new = bad & alive
        if np.any(new):
            idx = np.flatnonzero(new)
            diag.flagged_paths.extend(idx.tolist())
            alive[idx] = False
    ok = norm[alive & np.isfinite(norm)]
    if ok.size:
        diag.max_state_norm = max(diag.max_state_norm, float(ok.max()))


def simulate_game(scenario: Scenario, x1: PiecewiseControl, x2: PiecewiseControl,
                  noise: BrownianBundle, y0: GameState | np.ndarray | None = None,
                  record: bool = True, guard: str = "raise") -> StatePath:
    """Euler scheme for the controlled game state.

    Per step ``k`` (left-point rule)::

        dS   = -(theta_1 x1 + theta_2 x2) dt + sigma(S) dB
        pi_i -= x_i dt
        W_i  += pi_i(before the step) * dS

    which is the componentwise form of ``a x_opp dt + b x_own dt + v dB``.

    Args:
        y0: initial state (global order), a single state or one per path.
            Defaults to the scenario's initial state.
        record: keep every node (memory ``n_paths * (n_steps+1) * 5``) or only
            the terminal one.
        guard: ``"raise"`` aborts with ``NonFiniteState`` when any path
            explodes; ``"flag"`` freezes such paths and lists them in the
            diagnostics so estimators can drop them.
    """
    _check_grid(noise, x1, x2)
    if guard not in ("raise", "flag"):
        raise ValueError("guard must be 'raise' or 'flag'")
    grid, n = noise.grid, noise.n_paths
    th1, th2 = scenario.theta(1), scenario.theta(2)
    vol = scenario.vol
    const_sigma = getattr(vol, "sigma", None) if vol.is_constant else None

    if y0 is None:
        y0 = scenario.market.initial_state
    y = np.array(y0.as_array() if isinstance(y0, GameState) else y0, dtype=float)
    y = np.broadcast_to(y, (n, 5)).copy()

    dts = grid.dt
    n_rec = grid.n_steps + 1 if record else 1
    states = np.empty((n, n_rec, 5))
    if record:
        states[:, 0] = y
    diag = Diagnostics()
    alive = np.ones(n, dtype=bool)
    for k in range(grid.n_steps):
        dt = dts[k]
        a1, a2 = x1.values[k], x2.values[k]
        dB = noise.increments[:, k]
        sig = const_sigma if const_sigma is not None else vol(y[:, 0])
        dS = -(th1 * a1 + th2 * a2) * dt + sig * dB
        step = np.empty_like(y)
        step[:, 0] = dS
        step[:, 1] = -a1 * dt
        step[:, 2] = -a2 * dt
        step[:, 3] = y[:, 1] * dS
        step[:, 4] = y[:, 2] * dS
        if guard == "flag" and not alive.all():
            step[~alive] = 0.0
        y = y + step
        _guard_step(y, k + 1, guard, diag, alive)
        if record:
            states[:, k + 1] = y
    if not record:
        states[:, 0] = y
    times = grid.nodes.copy() if record else grid.nodes[-1:].copy()
    return StatePath(grid, times, states, x1, x2, noise, diag)


def initial_aux_state(scenario: Scenario, investor: int) -> AuxState:
    """``Z_s``: the initial game state with the own holding dropped."""
    m = scenario.market
    j = opponent(investor)
    return AuxState(m.s0, m.pi0(j), m.w0(investor), m.w0(j))


def simulate_aux(scenario: Scenario, investor: int, pi: PiecewiseControl,
                 x_opp: PiecewiseControl, noise: BrownianBundle,
                 z0: AuxState | np.ndarray | None = None, record: bool = True,
                 guard: str = "raise") -> AuxPath:
    """Euler scheme for the auxiliary state ``(P, pi_opp, w_own, w_opp)``.

    Drift ``beta(pi, Z) x_opp``, diffusion ``sigma(P + theta pi)(1, 0, pi, pi_opp)``.
    """
    _check_grid(noise, pi, x_opp)
    if pi.kind is not ControlKind.AUX_HOLDING:
        raise ValueError("auxiliary simulation needs a holding control")
    pi.check_bounds(scenario.bounds)
    if guard not in ("raise", "flag"):
        raise ValueError("guard must be 'raise' or 'flag'")
    j = opponent(investor)
    th, tho = scenario.theta(investor), scenario.theta(j)
    vol = scenario.vol
    const_sigma = getattr(vol, "sigma", None) if vol.is_constant else None
    grid, n = noise.grid, noise.n_paths

    if z0 is None:
        z0 = initial_aux_state(scenario, investor)
    z = np.array(z0.as_array() if isinstance(z0, AuxState) else z0, dtype=float)
    z = np.broadcast_to(z, (n, 4)).copy()

    dts = grid.dt
    n_rec = grid.n_steps + 1 if record else 1
    states = np.empty((n, n_rec, 4))
    if record:
        states[:, 0] = z
    diag = Diagnostics()
    alive = np.ones(n, dtype=bool)
    for k in range(grid.n_steps):
        dt = dts[k]
        p, xo = pi.values[k], x_opp.values[k]
        dB = noise.increments[:, k]
        sig = const_sigma if const_sigma is not None else vol(z[:, 0] + th * p)
        dP = -tho * xo * dt + sig * dB
        step = np.empty_like(z)
        step[:, 0] = dP
        step[:, 1] = -xo * dt
        step[:, 2] = p * dP
        step[:, 3] = z[:, 1] * dP + th * p * xo * dt
        if guard == "flag" and not alive.all():
            step[~alive] = 0.0
        z = z + step
        _guard_step(z, k + 1, guard, diag, alive)
        if record:
            states[:, k + 1] = z
    if not record:
        states[:, 0] = z
    times = grid.nodes.copy() if record else grid.nodes[-1:].copy()
    return AuxPath(grid, times, states, pi, x_opp, investor, noise, diag)


def wealth_identity_residual(path: StatePath, investor: int, scenario: Scenario) -> float:
    """Largest gap between simulated wealth and its pathwise decomposition.

    The decomposition is ``W_t = W_s + (theta/2)(pi_t^2 - pi_s^2)
    - theta_opp * sum(pi x_opp dt) + sum(pi sigma(S) dB)`` with the sums
    taken on the simulation grid.  For the Euler scheme the gap equals
    ``(theta/2) * sum((d pi)^2)``, first order in the step size, and vanishes
    when the investor does not trade.
    """
    if path.times.size != path.grid.n_steps + 1:
        raise ValueError("the wealth identity needs a recorded path")
    j = opponent(investor)
    th, tho = scenario.theta(investor), scenario.theta(j)
    _, ip, _, iW, _ = relative_index(investor)
    x_opp = (path.x2 if investor == 1 else path.x1).values
    dts = path.grid.dt
    X = path.states
    pi = X[:, :, ip]
    S = X[:, :-1, 0]
    vol = scenario.vol
    sig = vol.sigma if vol.is_constant else vol(S)
    own = 0.5 * th * (pi[:, 1:] ** 2 - pi[:, :-1] ** 2)
    inc = own + pi[:, :-1] * (-(tho * x_opp) * dts + sig * path.noise.increments)
    rhs = np.empty_like(pi)
    rhs[:, 0] = X[:, 0, iW]
    rhs[:, 1:] = inc
    np.cumsum(rhs, axis=1, out=rhs)
    return float(np.max(np.abs(X[:, :, iW] - rhs)))


def blip_transport(scenario: Scenario, investor: int, q: float, eps: float,
                   noise: BrownianBundle, y0: GameState | None = None) -> np.ndarray:
    """State after selling ``q`` shares at the constant rate ``q/eps``.

    ``noise`` must live on a grid covering ``[s, s + eps]``; the opponent does
    not trade.  As ``eps`` shrinks the result approaches ``flow_full(q, y0)``.
    Returns terminal states, one row per path (global order).
    """
    s = scenario.market.s
    if not 0 < eps <= scenario.market.T - s:
        raise ValueError("eps must lie in (0, T - s]")
    g = noise.grid
    if not (math.isclose(g.start, s) and math.isclose(g.stop, s + eps, rel_tol=1e-12, abs_tol=1e-15)):
        raise GridMismatch("noise grid must span [s, s + eps]")
    own = PiecewiseControl.constant(g, q / eps)
    zero = PiecewiseControl.zeros(g)
    x1, x2 = (own, zero) if investor == 1 else (zero, own)
    return simulate_game(scenario, x1, x2, noise, y0=y0, record=False).terminal


def mean_se(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and its standard error (sequential, order-fixed reduction)."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        raise ValueError("no samples")
    if np.all(v == v.flat[0]):
        # a constant sample: report it exactly rather than with summation roundoff
        return float(v.flat[0]), 0.0
    m = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return m, se


def write_paths_csv(path: StatePath, fh: IO[str], max_paths: int | None = None) -> None:
    """CSV with columns ``path,t,S,pi1,pi2,W1,W2``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["path", "t", "S", "pi1", "pi2", "W1", "W2"])
    n = path.states.shape[0] if max_paths is None else min(max_paths, path.states.shape[0])
    for p in range(n):
        for t, row in zip(path.times, path.states[p]):
            w.writerow([p, repr(float(t))] + [repr(float(v)) for v in row])


def diagnostics_json(diag: Diagnostics) -> str:
    return json.dumps(diag.to_dict(), sort_keys=True)
