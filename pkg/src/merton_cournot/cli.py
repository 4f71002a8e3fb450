"""Command-line driver: scenario files in, CSV/JSON out.

Exit codes: 0 success, 1 bad configuration or input file, 2 equilibrium
conditions fail, 3 internal error, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import arbitrage as arb
from . import oracle
from .bestresponse import RegionLabel, best_response_path, classify_region, write_best_response_csv
from .dynamics import (
    BrownianBundle, blip_transport, mean_se, simulate_game, wealth_identity_residual, write_paths_csv,
)
from .equilibrium import (
    ConditionsFailed, NonConstantVolatility, check_conditions, conditions_json, nash_equilibrium,
    write_equilibrium_csv,
)
from .flow import aux_coords, flow_full, flow_jacobian, flow_ode_oracle, from_aux_coords
from .model import (
    ConstantVol, ControlBounds, ControlKind, MarketParams, PiecewiseControl, Preferences,
    Scenario, TimeGrid, ValidationError, cara_utility, certainty_equivalent, validate_market,
)

EXIT_OK, EXIT_CONFIG, EXIT_CONDITIONS, EXIT_INTERNAL, EXIT_VERIFY = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------- #
# Scenario files
# --------------------------------------------------------------------------- #

REQUIRED = ("theta1", "theta2", "sigma", "delta1", "delta2", "T", "pi_lo", "pi_hi")
FLOAT_DEFAULTS = {"s": 0.0, "S0": 10.0, "W1_0": 0.0, "W2_0": 0.0, "pi1_0": 0.0, "pi2_0": 0.0}
INT_DEFAULTS = {"n_steps": 250, "n_paths": 10000, "seed": 0}
# arbitrage and best-response extras
EXTRA_DEFAULTS = {"kappa": "quadratic_odd", "kappa_theta": 1.0, "kappa0": 0.0, "alpha_grid": "1",
                  "beta_grid": "2", "arb_T": 3.0, "investor": 1, "dump_paths": 10, "output_dir": "."}
KAPPAS = ("linear", "quadratic_odd", "affine", "offset_at_zero")
KEY_ORDER = REQUIRED + tuple(FLOAT_DEFAULTS) + tuple(INT_DEFAULTS) + tuple(EXTRA_DEFAULTS)

DEFAULT_CONFIG = """\
# two investors, risk aversions 4 and 1, equal impact
theta1 = 1
theta2 = 1
sigma = 0.5
delta1 = 4
delta2 = 1
s = 0
T = 5
S0 = 10
pi1_0 = 0.6
pi2_0 = -1
pi_lo = -50
pi_hi = 50
n_steps = 500
n_paths = 2000
seed = 20240917
"""


@dataclass
class ScenarioConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def floats(self, text_key: str) -> list[float]:
        return [float(v) for v in str(self.values[text_key]).split(",") if v.strip()]

    def scenario(self) -> Scenario:
        v = self.values
        market = MarketParams(v["theta1"], v["theta2"], ConstantVol(v["sigma"]), v["s"], v["T"], v["S0"],
                              v["W1_0"], v["W2_0"], v["pi1_0"], v["pi2_0"])
        try:
            return validate_market(market, Preferences(v["delta1"], v["delta2"]), ControlBounds(v["pi_lo"], v["pi_hi"]))
        except ValidationError as e:
            raise ConfigError(str(e)) from e

    def kappa(self):
        v = self.values
        name = v["kappa"]
        if name == "linear":
            return arb.LinearImpact(v["kappa_theta"])
        if name == "quadratic_odd":
            return arb.quadratic_odd_impact()
        if name == "affine":
            return arb.affine_impact(v["kappa_theta"], v["kappa0"])
        return arb.offset_at_zero_impact(v["kappa_theta"], v["kappa0"])

    def serialize(self) -> str:
        lines = []
        for k in KEY_ORDER:
            val = self.values[k]
            lines.append(f"{k} = {repr(val) if isinstance(val, float) else val}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> ScenarioConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Errors carry line numbers."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in KEY_ORDER:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' (first on line {raw[key][1]})")
        raw[key] = (val, lineno)
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise ConfigError("missing required key(s): " + ", ".join(missing))

    out: dict = {}

    def conv(key, fn, default=None):
        if key not in raw:
            out[key] = default
            return
        val, lineno = raw[key]
        try:
            out[key] = fn(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for '{key}': {val!r}") from None

    for k in REQUIRED:
        conv(k, float)
    for k, d in FLOAT_DEFAULTS.items():
        conv(k, float, d)
    for k, d in INT_DEFAULTS.items():
        conv(k, int, d)
    for k, d in EXTRA_DEFAULTS.items():
        conv(k, type(d), d)
    for k in ("n_steps", "n_paths", "investor", "dump_paths"):
        if out[k] < (0 if k == "dump_paths" else 1):
            raise ConfigError(f"line {raw[k][1]}: '{k}' out of range")
    if out["investor"] not in (1, 2):
        raise ConfigError(f"line {raw['investor'][1]}: investor must be 1 or 2")
    if out["kappa"] not in KAPPAS:
        raise ConfigError(f"line {raw['kappa'][1]}: kappa must be one of {', '.join(KAPPAS)}")
    cfg = ScenarioConfig(out)
    for k in ("alpha_grid", "beta_grid"):
        try:
            cfg.floats(k)
        except ValueError:
            raise ConfigError(f"line {raw[k][1]}: '{k}' must be a comma-separated list of numbers") from None
    return cfg


def load_config(path: str | None) -> ScenarioConfig:
    if path is None:
        return parse_config(DEFAULT_CONFIG)
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text)


def read_control_csv(path: str, grid, kind=ControlKind.TRADING_RATE) -> PiecewiseControl:
    """Two-column CSV ``t,value`` with one row per interval, keyed by left node."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from e
    if not rows or [c.strip() for c in rows[0]][:1] != ["t"] or len(rows[0]) != 2:
        raise ConfigError(f"{path}: expected header 't,<name>'")
    body = rows[1:]
    if len(body) != grid.n_steps:
        raise ConfigError(f"{path}: {len(body)} rows but the grid has {grid.n_steps} intervals")
    try:
        data = np.array([[float(a), float(b)] for a, b in body])
    except ValueError:
        raise ConfigError(f"{path}: non-numeric entry") from None
    if not np.allclose(data[:, 0], grid.nodes[:-1], rtol=0, atol=1e-9):
        raise ConfigError(f"{path}: times do not match the scenario grid")
    return PiecewiseControl(grid, data[:, 1], kind)


def write_control_csv(ctrl: PiecewiseControl, name: str, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", name])
    for t, v in zip(ctrl.grid.nodes[:-1], ctrl.values):
        w.writerow([repr(float(t)), repr(float(v))])


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


# --------------------------------------------------------------------------- #
# Subcommands
# --------------------------------------------------------------------------- #


def cmd_equilibrium(cfg: ScenarioConfig, out: Path) -> int:
    sc = cfg.scenario()
    report = check_conditions(sc)
    (out / "conditions.json").write_text(conditions_json(report) + "\n")
    try:
        sol = nash_equilibrium(sc)
    except ConditionsFailed as e:
        print(f"equilibrium conditions fail: {', '.join(e.report.failed())}", file=sys.stderr)
        return EXIT_CONDITIONS
    grid = sc.grid(cfg["n_steps"])
    with open(out / "equilibrium.csv", "w", newline="") as fh:
        write_equilibrium_csv(sol, grid, fh)
    c1, c2 = sol.crossing_times
    _dump_json({"investor_1": c1, "investor_2": c2, "chi": sol.constants.chi, "varphi": sol.constants.varphi},
               out / "crossing.json")
    for i in (1, 2):
        with open(out / f"x{i}.csv", "w", newline="") as fh:
            write_control_csv(sol.rate_control(grid, i), f"x{i}", fh)
    print(f"chi={sol.constants.chi!r} varphi={sol.constants.varphi!r} crossing=({c1!r}, {c2!r})")
    return EXIT_OK


def _controls(cfg, grid, x1_path, x2_path):
    x1 = read_control_csv(x1_path, grid) if x1_path else PiecewiseControl.zeros(grid)
    x2 = read_control_csv(x2_path, grid) if x2_path else PiecewiseControl.zeros(grid)
    return x1, x2


def cmd_simulate(cfg: ScenarioConfig, out: Path, x1_path=None, x2_path=None) -> int:
    sc = cfg.scenario()
    grid = sc.grid(cfg["n_steps"])
    x1, x2 = _controls(cfg, grid, x1_path, x2_path)
    noise = BrownianBundle.generate(grid, cfg["n_paths"], cfg["seed"])
    path = simulate_game(sc, x1, x2, noise, record=True, guard="flag")
    with open(out / "paths.csv", "w", newline="") as fh:
        write_paths_csv(path, fh, max_paths=cfg["dump_paths"])
    ok = path.valid
    term = path.terminal[ok]
    summary = {"n_paths": int(noise.n_paths), "seed": cfg["seed"], "flagged_paths": int((~ok).sum())}
    for col, name in enumerate(("S", "pi1", "pi2", "W1", "W2")):
        m, se = mean_se(term[:, col])
        summary[f"mean_{name}_T"], summary[f"se_{name}_T"] = m, se
    summary["abs_dev_S_T"] = abs(summary["mean_S_T"] - sc.market.s0)
    for i in (1, 2):
        summary[f"wealth_identity_residual_{i}"] = wealth_identity_residual(path, i, sc)
        w = aux_coords(term, i, sc.theta(i))[:, 2]
        m, se = mean_se(cara_utility(w, sc.delta(i)))
        summary[f"utility_mean_{i}"], summary[f"utility_se_{i}"] = m, se
        summary[f"certainty_equivalent_{i}"] = float(certainty_equivalent(m, sc.delta(i)))
    _dump_json(summary, out / "summary.json")
    print(f"mean S_T = {summary['mean_S_T']!r} (SE {summary['se_S_T']!r})")
    return EXIT_OK


def cmd_best_response(cfg: ScenarioConfig, out: Path, x_opp_path=None) -> int:
    sc = cfg.scenario()
    grid = sc.grid(cfg["n_steps"])
    i = cfg["investor"]
    if x_opp_path:
        x_opp = read_control_csv(x_opp_path, grid)
    else:
        x_opp = nash_equilibrium(sc).rate_control(grid, 3 - i)
    br = best_response_path(sc, i, x_opp)
    with open(out / "best_response.csv", "w", newline="") as fh:
        write_best_response_csv(br, fh)
    _dump_json({"investor": i, "initial_jump": br.initial_jump, "touches_bounds": br.touches_bounds},
               out / "best_response.json")
    print(f"investor {i}: initial jump {br.initial_jump!r}")
    return EXIT_OK


def cmd_arbitrage(cfg: ScenarioConfig, out: Path) -> int:
    v = arb.detect_dynamic_arbitrage(cfg.kappa(), cfg.floats("alpha_grid"), cfg.floats("beta_grid"), cfg["arb_T"])
    (out / "arbitrage.json").write_text(json.dumps(v.to_dict(), sort_keys=True, indent=2) + "\n")
    print(v.to_json())
    return EXIT_OK


# --------------------------------------------------------------------------- #
# Verification suites
# --------------------------------------------------------------------------- #


@dataclass
class CheckResult:
    name: str
    suite: str
    passed: bool
    detail: dict

    def to_dict(self):
        return {"check": self.name, "suite": self.suite, "verdict": "pass" if self.passed else "fail",
                "detail": self.detail}


def _random_state(rng) -> np.ndarray:
    return np.array([rng.uniform(5, 15), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-5, 5),
                     rng.uniform(-5, 5)])


def _suite_flow(cfg, sc, rng):
    th = sc.theta(1)
    ys = [_random_state(rng) for _ in range(5)]
    qs = np.linspace(-5, 5, 11)
    err = max(float(np.max(np.abs(flow_full(q, y, i, th) - flow_ode_oracle(q, y, i, th))))
              for y in ys for q in qs for i in (1, 2))
    yield "flow_vs_rk4", err < 1e-8, {"max_error": err}
    gl = max(float(np.max(np.abs(flow_full(a + b, y, 1, th) - flow_full(a, flow_full(b, y, 1, th), 1, th))))
             for y in ys for a, b in rng.uniform(-3, 3, (10, 2)))
    yield "flow_group_law", gl < 1e-12, {"max_error": gl}
    h, jerr = 1e-6, 0.0
    for y in ys:
        q = float(rng.uniform(-3, 3))
        J = flow_jacobian(q, 1, th)
        fd = np.column_stack([(flow_full(q, y + h * e, 1, th) - flow_full(q, y - h * e, 1, th)) / (2 * h)
                              for e in np.eye(5)])
        jerr = max(jerr, float(np.max(np.abs(J - fd))))
    yield "flow_jacobian_fd", jerr < 1e-7, {"max_error": jerr}
    inv = max(float(np.max(np.abs(aux_coords(flow_full(q, y, 2, th), 2, th) - aux_coords(y, 2, th)))) for y in ys for q in qs)
    yield "aux_coords_invariant", inv < 1e-10, {"max_error": inv}
    rt = max(float(np.max(np.abs(from_aux_coords(aux_coords(y, 1, th), y[1], 1, th).as_array() - y))) for y in ys)
    yield "aux_coords_inverse", rt < 1e-10, {"max_error": rt}


def _suite_dynamics(cfg, sc, rng):
    seed = cfg["seed"]
    g = sc.grid(cfg["n_steps"])
    noise = BrownianBundle.generate(g, cfg["n_paths"], seed)
    zero = PiecewiseControl.zeros(g)
    p = simulate_game(sc, zero, zero, noise, record=False)
    m, se = mean_se(p.terminal[:, 0])
    z = (m - sc.market.s0) / se if se > 0 else 0.0
    yield "martingale_zero_controls", abs(z) < 4, {"mean": m, "se": se, "z": z}

    det = Scenario(MarketParams(sc.theta(1), sc.theta(2), ConstantVol(0.0), sc.market.s, sc.market.T, sc.market.s0),
                   sc.prefs, sc.bounds)
    xo = PiecewiseControl.from_function(g, lambda t: np.sin(t))
    d = simulate_game(det, zero, xo, BrownianBundle.zeros(g))
    r0 = wealth_identity_residual(d, 1, det)
    yield "wealth_identity_exact_no_own_trading", r0 == 0.0, {"residual": r0}

    def resid(n):
        gg = sc.grid(n)
        nz = BrownianBundle.generate(gg, 200, seed)
        x = PiecewiseControl.from_function(gg, lambda t: 0.3 + 0.2 * np.cos(t))
        return wealth_identity_residual(simulate_game(sc, x, x, nz), 1, sc)

    ratio = resid(100) / resid(200)
    yield "wealth_identity_first_order", 1.6 <= ratio <= 2.4, {"ratio": ratio}

    y0 = sc.market.initial_state
    errs = []
    for n in (10, 20):
        eps = 1e-3
        gg = TimeGrid.uniform(sc.market.s, sc.market.s + eps, n)
        out = blip_transport(det, 1, 0.7, eps, BrownianBundle.zeros(gg), y0)[0]
        errs.append(float(np.max(np.abs(out - flow_full(0.7, y0, 1, sc.theta(1)).as_array()))))
    yield "blip_converges_to_flow", errs[1] < errs[0] and errs[1] < 0.03, {"errors": errs}

    again = BrownianBundle.generate(g, min(cfg["n_paths"], 600), seed)
    same = bool(np.array_equal(again.increments, noise.increments[:again.n_paths]))
    yield "noise_reproducible", same, {}


def _equilibrium_rates(sc, g):
    sol = nash_equilibrium(sc)
    return sol, sol.rate_control(g, 1), sol.rate_control(g, 2)


def _suite_bestresponse(cfg, sc, rng):
    g = sc.grid(cfg["n_steps"])
    br0 = best_response_path(sc, 1, PiecewiseControl.zeros(g))
    yield "zero_opponent_zero_response", bool(np.all(br0.pi_path.values == 0)), {}
    try:
        sol, x1, x2 = _equilibrium_rates(sc, g)
    except (ConditionsFailed, NonConstantVolatility) as e:
        yield "equilibrium_fixed_point", False, {"error": str(e)}
        return
    for i, xo in ((1, x2), (2, x1)):
        br = best_response_path(sc, i, xo)
        err = float(np.max(np.abs(br.pi_path.values - sol.holding(g.nodes[:-1], i))))
        yield f"equilibrium_fixed_point_{i}", err < 1e-9, {"max_error": err}
    hi = sc.bounds.pi_hi
    x_edge = -hi * sc.delta(1) * sc.vol.sigma ** 2 / sc.theta(2)
    lab = classify_region(x_edge, 0.0, sc, 1)
    yield "region_upper_inclusive", lab is RegionLabel.CONTINUATION_UPPER, {"label": lab.value}
    br = best_response_path(sc, 1, x2)
    held = br.holding_at_nodes()
    net = float(br.rate_path.values[:-1] @ g.dt[:-1])
    gap = abs(net - (held[0] - held[-2]))
    yield "rates_integrate_to_holding_change", gap < 1e-9, {"gap": gap}


def _suite_oracle(cfg, sc, rng):
    g = sc.grid(min(cfg["n_steps"], 100))
    noise = BrownianBundle.generate(g, cfg["n_paths"], cfg["seed"])
    xo = PiecewiseControl.from_function(g, lambda t: 0.4 * np.cos(t))
    zs = []
    for c in rng.uniform(-1, 1, 3):
        pi = PiecewiseControl.constant(g, float(c), ControlKind.AUX_HOLDING)
        est = oracle.estimate_value(sc, 1, pi, xo, noise)
        exact = oracle.cara_gaussian_value(sc, 1, pi, xo)
        zs.append((est.mean - exact) / est.std_error if est.std_error > 0 else 0.0)
    zmax = max(abs(z) for z in zs)
    yield "cara_gaussian_match", zmax < 3, {"z": zs}
    br = best_response_path(sc, 1, xo)
    cand = oracle.estimate_value(sc, 1, br.pi_path, xo, noise)
    lv = br.pi_path.values
    levels = np.clip(np.linspace(lv.min() - 0.5, lv.max() + 0.5, 3), sc.bounds.pi_lo, sc.bounds.pi_hi)
    res = oracle.brute_force_best(sc, 1, xo, levels, 4, noise)
    rep = oracle.dominance_check(cand, [("search", res.estimate)])
    yield "dominance_exhaustive", rep.verdict, {"z": rep.margin}
    y = sc.market.initial_state
    eq = oracle.equivalence_check(sc, 1, y, xo, noise)
    yield "singular_auxiliary_equivalence", eq.verdict, {"z": eq.z}
    inv = oracle.invariance_check(sc, 1, y, 0.5, xo, noise, side="auxiliary")
    yield "flow_invariance", inv.verdict, {"z": inv.z}
    a = PiecewiseControl.constant(g, 0.5, ControlKind.AUX_HOLDING)
    b = PiecewiseControl.constant(g, -0.5, ControlKind.AUX_HOLDING)
    cc = oracle.concavity_check(sc, 1, a, b, 0.3, xo, noise)
    yield "value_concavity", cc.holds, {"mixed": cc.mixed, "chord": cc.chord, "se": cc.se}


def _suite_arbitrage(cfg, sc, rng):
    lin = arb.LinearImpact(1.0)
    trips = arb.candidate_trips(lin, [0.5, 1, 2], [0.5, 1, 2], 3.0)
    worst = max(abs(arb.expected_gain(lin, t)) for t in trips)
    yield "linear_no_gain", worst < 1e-13, {"max_abs_gain": worst}
    kappa = cfg.kappa()
    v = arb.detect_dynamic_arbitrage(kappa, cfg.floats("alpha_grid"), cfg.floats("beta_grid"), cfg["arb_T"])
    d = v.to_dict()
    if cfg["kappa"] == "linear":
        yield "configured_impact_verdict", not v.arbitrage, d
    else:
        yield "configured_impact_verdict", v.arbitrage and v.gain > 0, d
    probe = arb.offset_at_zero_impact(1.0, 0.3)
    pv = arb.detect_dynamic_arbitrage(probe, [1.0], [1.0], 3.0)
    gain3 = arb.expected_gain(probe, arb.make_roundtrip("ThreePhase", 0.3, T=3.0))
    yield "zero_rate_probe", abs(gain3 - 0.09) < 1e-12 and pv.arbitrage, {"gain": gain3}
    q = arb.quadratic_odd_impact()
    diff = max(abs(arb.expected_gain(q, t) - arb.numeric_gain(q, t)) for t in arb.candidate_trips(q, [1, 2], [1, 3], 3.0))
    yield "exact_vs_quadrature_gain", diff < 1e-10, {"max_diff": diff}


SUITES: dict[str, Callable] = {
    "flow": _suite_flow,
    "dynamics": _suite_dynamics,
    "bestresponse": _suite_bestresponse,
    "oracle": _suite_oracle,
    "arbitrage": _suite_arbitrage,
}


def run_verify(cfg: ScenarioConfig, suite: str) -> list[CheckResult]:
    sc = cfg.scenario()
    names = list(SUITES) if suite == "all" else [suite]
    results = []
    for name in names:
        rng = np.random.default_rng([cfg["seed"], len(name)])
        try:
            for check, passed, detail in SUITES[name](cfg, sc, rng):
                results.append(CheckResult(check, name, bool(passed), _plain(detail)))
        except Exception as e:  # a crashing suite is a failed check, not an abort
            results.append(CheckResult(f"{name}_suite_error", name, False, {"error": repr(e)}))
    return results


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def cmd_verify(cfg: ScenarioConfig, out: Path, suite: str) -> int:
    results = run_verify(cfg, suite)
    _dump_json([r.to_dict() for r in results], out / "verify.json")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.suite}/{r.name} {json.dumps(r.detail, sort_keys=True)}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# --------------------------------------------------------------------------- #
# Entry point
# --------------------------------------------------------------------------- #


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (key = value lines); defaults to the built-in two-investor example")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out", default=None, help="output directory (created if missing)")

    p = argparse.ArgumentParser(prog="merton-cournot", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibrium", parents=[common], help="closed-form equilibrium paths and conditions")
    s = sub.add_parser("simulate", parents=[common], help="simulate the game under given trading-rate files")
    s.add_argument("--x1", help="CSV t,x1 for investor 1 (default: no trading)")
    s.add_argument("--x2", help="CSV t,x2 for investor 2 (default: no trading)")
    b = sub.add_parser("best-response", parents=[common], help="best response to an opponent rate")
    b.add_argument("--x-opp", help="CSV t,x of the opponent (default: its equilibrium rate)")
    sub.add_parser("arbitrage", parents=[common], help="search round trips for a dynamic arbitrage")
    v = sub.add_parser("verify", parents=[common], help="run invariant checks")
    v.add_argument("suite", nargs="?", default="all", choices=list(SUITES) + ["all"])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.values["seed"] = args.seed
        out = Path(args.out if args.out is not None else cfg["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "equilibrium":
            return cmd_equilibrium(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.x1, args.x2)
        if args.command == "best-response":
            return cmd_best_response(cfg, out, args.x_opp)
        if args.command == "arbitrage":
            return cmd_arbitrage(cfg, out)
        return cmd_verify(cfg, out, args.suite)
    except (ConfigError, NonConstantVolatility) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConditionsFailed as e:
        print(str(e), file=sys.stderr)
        return EXIT_CONDITIONS
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
