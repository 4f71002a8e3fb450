"""Brute-force Monte Carlo checks of the best-response characterization.

All estimates are expected CARA utilities of the terminal auxiliary wealth
``w_T``.  Comparisons inside one check reuse one ``BrownianBundle`` so that
differences between controls are not swamped by sampling noise.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bestresponse import best_response_path
from .dynamics import BrownianBundle, mean_se, simulate_aux, simulate_game
from .flow import aux_coords, flow_full
from .model import (
    AuxState, ControlKind, GameState, PiecewiseControl, Scenario, TimeGrid, cara_utility, opponent,
    relative_index,
)


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    n_flagged: int = 0


def _estimate(samples: np.ndarray, seed: int, n_flagged: int = 0) -> ValueEstimate:
    m, se = mean_se(samples)
    return ValueEstimate(m, se, int(samples.size), int(seed), n_flagged)


def terminal_utilities(scenario: Scenario, investor: int, pi: PiecewiseControl, x_opp: PiecewiseControl,
                       noise: BrownianBundle, z0: AuxState | None = None) -> tuple[np.ndarray, int]:
    """Per-path ``u(w_T)``; exploded paths are dropped and counted."""
    path = simulate_aux(scenario, investor, pi, x_opp, noise, z0=z0, record=False, guard="flag")
    ok = path.valid
    u = cara_utility(path.terminal[ok, 2], scenario.delta(investor))
    return u, int((~ok).sum())


def estimate_value(scenario: Scenario, investor: int, pi: PiecewiseControl, x_opp: PiecewiseControl,
                   noise: BrownianBundle, z0: AuxState | None = None) -> ValueEstimate:
    """Monte Carlo estimate of ``E[u(w_T)]`` under an auxiliary holding control."""
    u, bad = terminal_utilities(scenario, investor, pi, x_opp, noise, z0)
    return _estimate(u, noise.seed, bad)


def cara_gaussian_value(scenario: Scenario, investor: int, pi: PiecewiseControl, x_opp: PiecewiseControl,
                        w0: float | None = None) -> float:
    """Exact expected utility for constant volatility and deterministic controls.

    ``w_T`` is Gaussian with mean ``w0 - theta_opp sum(pi x_opp dt)`` and
    variance ``sigma^2 sum(pi^2 dt)``, so
    ``E[u(w_T)] = u(w0 - theta_opp sum(pi x dt) - (delta/2) sigma^2 sum(pi^2 dt))``.
    This holds for the continuous model and for the Euler scheme alike.
    """
    if not scenario.vol.is_constant:
        raise ValueError("the Gaussian formula needs constant volatility")
    if w0 is None:
        w0 = scenario.market.w0(investor)
    j = opponent(investor)
    d = scenario.delta(investor)
    dt = pi.grid.dt
    drift = -scenario.theta(j) * float(np.sum(pi.values * x_opp.values * dt))
    var = scenario.vol.sigma ** 2 * float(np.sum(pi.values ** 2 * dt))
    return float(cara_utility(w0 + drift - 0.5 * d * var, d))


# --------------------------------------------------------------------------- #
# Piecewise-constant search
# --------------------------------------------------------------------------- #


def block_edges(n_steps: int, n_intervals: int) -> np.ndarray:
    """Fine-grid indices splitting ``n_steps`` intervals into near-equal blocks."""
    if not 1 <= n_intervals <= n_steps:
        raise ValueError("need 1 <= n_intervals <= n_steps")
    return np.round(np.linspace(0, n_steps, n_intervals + 1)).astype(int)


def expand_blocks(grid: TimeGrid, levels: Sequence[float], edges: np.ndarray) -> PiecewiseControl:
    vals = np.repeat(np.asarray(levels, dtype=float), np.diff(edges))
    return PiecewiseControl(grid, vals, ControlKind.AUX_HOLDING)


class _BlockObjective:
    """``w_T = w0 + sum_j c_j M_j`` per path for block-constant holdings.

    With constant volatility the Euler wealth increment is linear in the
    holding, so each block contributes its level times a per-path sum.
    """

    def __init__(self, scenario, investor, x_opp, noise, edges, w0):
        j = opponent(investor)
        dt = noise.grid.dt
        sig = scenario.vol.sigma
        drift = -scenario.theta(j) * x_opp.values * dt
        per_step = drift[None, :] + sig * noise.increments
        csum = np.concatenate([np.zeros((noise.n_paths, 1)), np.cumsum(per_step, axis=1)], axis=1)
        self.M = csum[:, edges[1:]] - csum[:, edges[:-1]]  # (n_paths, n_blocks)
        self.w0 = w0
        self.delta = scenario.delta(investor)

    def utilities(self, c: np.ndarray) -> np.ndarray:
        return cara_utility(self.w0 + self.M @ c, self.delta)

    def means(self, C: np.ndarray) -> np.ndarray:
        """Mean utility for each row of ``C`` (candidates x blocks)."""
        return cara_utility(self.w0 + C @ self.M.T, self.delta).mean(axis=1)


@dataclass
class SearchResult:
    control: PiecewiseControl
    levels: tuple
    estimate: ValueEstimate
    n_evaluated: int
    exhaustive: bool


def brute_force_best(scenario: Scenario, investor: int, x_opp: PiecewiseControl, grid_levels: Sequence[float],
                     n_intervals: int, noise: BrownianBundle, budget: int = 3 ** 6, n_restarts: int = 2000,
                     seed: int = 0, max_sweeps: int = 20) -> SearchResult:
    """Best block-constant holding control with values drawn from ``grid_levels``.

    Exhaustive when ``len(levels) ** n_intervals <= budget``; otherwise
    ``n_restarts`` seeded random starts, each refined by coordinate descent.
    Ties go to the lexicographically smallest level tuple.
    """
    levels = np.array(sorted(set(float(v) for v in grid_levels)))
    if levels.size == 0:
        raise ValueError("no levels")
    b = scenario.bounds
    if levels.min() < b.pi_lo or levels.max() > b.pi_hi:
        raise ValueError("levels must lie inside the holding bounds")
    grid = noise.grid
    edges = block_edges(grid.n_steps, n_intervals)
    n_total = levels.size ** n_intervals
    exhaustive = n_total <= budget
    if not exhaustive and n_restarts <= 0:
        raise BudgetExceeded(f"{n_total} controls exceed the budget {budget} and no random search was allowed")

    if scenario.vol.is_constant:
        obj = _BlockObjective(scenario, investor, x_opp, noise, edges, scenario.market.w0(investor))
        evaluate = obj.means
    else:
        def evaluate(C):
            return np.array([estimate_value(scenario, investor, expand_blocks(grid, c, edges), x_opp, noise).mean
                             for c in C])

    seen: dict[tuple, float] = {}

    def score(rows: np.ndarray) -> np.ndarray:
        keys = [tuple(r) for r in rows.tolist()]
        todo = [k for k in dict.fromkeys(keys) if k not in seen]
        if todo:
            vals = evaluate(np.array(todo, dtype=float))
            seen.update(zip(todo, vals.tolist()))
        return np.array([seen[k] for k in keys])

    if exhaustive:
        for chunk in _chunks(itertools.product(levels.tolist(), repeat=n_intervals), 256):
            score(np.array(chunk))
    else:
        rng = np.random.default_rng(seed)
        for _ in range(n_restarts):
            idx = rng.integers(0, levels.size, n_intervals)
            for _ in range(max_sweeps):
                changed = False
                for jb in range(n_intervals):
                    C = np.repeat(levels[idx][None, :], levels.size, axis=0)
                    C[:, jb] = levels
                    vals = score(C)
                    best = int(np.argmax(vals))  # first maximum = smallest level
                    if vals[best] > vals[idx[jb]]:
                        idx[jb] = best
                        changed = True
                if not changed:
                    break

    top = max(seen.values())
    best_key = min(k for k, v in seen.items() if v == top)
    ctrl = expand_blocks(grid, best_key, edges)
    est = estimate_value(scenario, investor, ctrl, x_opp, noise)
    return SearchResult(ctrl, best_key, est, len(seen), exhaustive)


def _chunks(it, n):
    buf = []
    for x in it:
        buf.append(x)
        if len(buf) == n:
            yield buf
            buf = []
    if buf:
        yield buf


# --------------------------------------------------------------------------- #
# Reports
# --------------------------------------------------------------------------- #


def combined_se(a: ValueEstimate, b: ValueEstimate) -> float:
    return math.hypot(a.std_error, b.std_error)


def z_score(a: ValueEstimate, b: ValueEstimate) -> float:
    diff = a.mean - b.mean
    se = combined_se(a, b)
    if se == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / se


@dataclass
class DominanceReport:
    candidate: ValueEstimate
    challengers: list = field(default_factory=list)  # (control id, ValueEstimate)
    margin: float = math.inf

    @property
    def verdict(self) -> bool:
        return self.margin > -3.0


def dominance_check(candidate: ValueEstimate, challengers: Sequence[tuple[str, ValueEstimate]]) -> DominanceReport:
    """Worst studentized gap ``(candidate - challenger) / combined SE``."""
    margin = min((z_score(candidate, est) for _, est in challengers), default=math.inf)
    return DominanceReport(candidate, list(challengers), margin)


@dataclass(frozen=True)
class CheckReport:
    check: str
    inputs_digest: str
    mean_a: float
    mean_b: float
    se: float
    z: float
    verdict: bool

    def to_dict(self) -> dict:
        return {"check": self.check, "inputs_digest": self.inputs_digest, "mean_a": self.mean_a,
                "mean_b": self.mean_b, "se": self.se, "z": self.z,
                "verdict": "pass" if self.verdict else "fail"}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def inputs_digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(p.tobytes())
        elif isinstance(p, PiecewiseControl):
            h.update(p.grid.nodes.tobytes())
            h.update(p.values.tobytes())
        elif isinstance(p, BrownianBundle):
            h.update(str((p.seed, p.n_paths, p.grid.n_steps)).encode())
        else:
            h.update(repr(p).encode())
    return h.hexdigest()[:16]


def make_report(check: str, a: ValueEstimate, b: ValueEstimate, digest: str, gate: float = 3.0) -> CheckReport:
    z = z_score(a, b)
    return CheckReport(check, digest, a.mean, b.mean, combined_se(a, b), z, abs(z) < gate)


# --------------------------------------------------------------------------- #
# Singular-side values and the statistical theorem checks
# --------------------------------------------------------------------------- #


def singular_value(scenario: Scenario, investor: int, y: GameState, x_opp: PiecewiseControl,
                   noise: BrownianBundle) -> ValueEstimate:
    """Value of the best-response trading strategy simulated on the game state.

    The investor first moves frictionlessly along the flow from its current
    holding to the optimal starting holding, then sells at the best-response
    rate.  The payoff is ``u(W_T - theta pi_T^2 / 2)``, the wealth left after
    unwinding the terminal position along the flow.
    """
    th = scenario.theta(investor)
    br = best_response_path(scenario, investor, x_opp)
    y_arr = y.as_array()
    _, ip, _, iW, _ = relative_index(investor)
    y_start = flow_full(y_arr[ip] - br.initial_jump, y_arr, investor, th)
    x1, x2 = (br.rate_path, x_opp) if investor == 1 else (x_opp, br.rate_path)
    path = simulate_game(scenario, x1, x2, noise, y0=y_start, record=False, guard="flag")
    ok = path.valid
    term = path.terminal[ok]
    w = aux_coords(term, investor, th)[:, 2]
    return _estimate(cara_utility(w, scenario.delta(investor)), noise.seed, int((~ok).sum()))


def auxiliary_value(scenario: Scenario, investor: int, y: GameState, x_opp: PiecewiseControl,
                    noise: BrownianBundle) -> ValueEstimate:
    """Value of the optimal auxiliary holding, started at the auxiliary coordinates of ``y``."""
    br = best_response_path(scenario, investor, x_opp)
    z0 = aux_coords(y, investor, scenario.theta(investor))
    return estimate_value(scenario, investor, br.pi_path, x_opp, noise, z0=z0)


def invariance_check(scenario: Scenario, investor: int, y: GameState, q: float, x_opp: PiecewiseControl,
                     noise: BrownianBundle, side: str = "singular") -> CheckReport:
    """Compare values at ``y`` and at ``flow_full(q, y)`` with common random numbers."""
    th = scenario.theta(investor)
    y_q = flow_full(q, y, investor, th)
    fn = singular_value if side == "singular" else auxiliary_value
    a = fn(scenario, investor, y, x_opp, noise)
    b = fn(scenario, investor, y_q, x_opp, noise)
    return make_report(f"invariance_{side}", a, b, inputs_digest(y, q, x_opp, noise, investor))


def equivalence_check(scenario: Scenario, investor: int, y: GameState, x_opp: PiecewiseControl,
                      noise: BrownianBundle) -> CheckReport:
    """Singular-side value versus auxiliary-side value from the same state."""
    a = singular_value(scenario, investor, y, x_opp, noise)
    b = auxiliary_value(scenario, investor, y, x_opp, noise)
    return make_report("equivalence", a, b, inputs_digest(y, x_opp, noise, investor))


@dataclass(frozen=True)
class ConcavityResult:
    holds: bool
    strict: bool | None
    degenerate: bool
    mixed: float
    chord: float
    se: float


def concavity_check(scenario: Scenario, investor: int, pi_a: PiecewiseControl, pi_b: PiecewiseControl,
                    xi: float, x_opp: PiecewiseControl, noise: BrownianBundle) -> ConcavityResult:
    """``H(xi a + (1-xi) b) >= xi H(a) + (1-xi) H(b) - 3 SE`` on common paths.

    Strictness is judged only when the two controls differ on at least 10% of
    the intervals; identical controls are reported as degenerate.
    """
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    mix = PiecewiseControl(pi_a.grid, xi * pi_a.values + (1 - xi) * pi_b.values, ControlKind.AUX_HOLDING)
    ua, _ = terminal_utilities(scenario, investor, pi_a, x_opp, noise)
    ub, _ = terminal_utilities(scenario, investor, pi_b, x_opp, noise)
    um, _ = terminal_utilities(scenario, investor, mix, x_opp, noise)
    chord = xi * ua + (1 - xi) * ub
    gap_mean, gap_se = mean_se(um - chord)
    differ = float(np.mean(pi_a.values != pi_b.values))
    degenerate = differ == 0.0
    holds = gap_mean >= -3 * gap_se - 1e-15 * max(1.0, abs(float(chord.mean())))
    strict = None
    if differ >= 0.1:
        strict = gap_mean > 3 * gap_se
    return ConcavityResult(holds, strict, degenerate, float(um.mean()), float(chord.mean()), gap_se)
