"""Is the closed-form best response really best?

Fix investor 2 at its equilibrium selling rate and compare investor 1's
optimal holding path with the best block-constant path a random search can
find, on the same 20000 simulated price paths.
"""

import time

import numpy as np

from merton_cournot import BrownianBundle, GameState, best_response_path, nash_equilibrium
from merton_cournot import oracle
from merton_cournot.cli import DEFAULT_CONFIG, parse_config

sc = parse_config(DEFAULT_CONFIG).scenario()
sol = nash_equilibrium(sc)
g = sc.grid(200)
noise = BrownianBundle.generate(g, 20_000, seed=1)

x2 = sol.rate_control(g, 2)
br = best_response_path(sc, 1, x2)
cand = oracle.estimate_value(sc, 1, br.pi_path, x2, noise)
print(f"best response value  {cand.mean:.6f} +- {cand.std_error:.6f}")
print(f"Gaussian formula     {oracle.cara_gaussian_value(sc, 1, br.pi_path, x2):.6f}")

levels = np.linspace(br.pi_path.values.min() - 0.3, br.pi_path.values.max() + 0.3, 21)
t0 = time.perf_counter()
res = oracle.brute_force_best(sc, 1, x2, levels, n_intervals=8, noise=noise, n_restarts=300)
print(f"search: {res.n_evaluated} controls in {time.perf_counter() - t0:.1f}s")
print("best blocks:", np.round(res.levels, 3))
print(f"search value         {res.estimate.mean:.6f} +- {res.estimate.std_error:.6f}")
rep = oracle.dominance_check(cand, [("search", res.estimate)])
print(f"margin {rep.margin:+.2f} SE -> {'dominates' if rep.verdict else 'beaten'}")

y = GameState(10.0, 0.0, 0.0, 0.0, 0.0)
print(oracle.equivalence_check(sc, 1, y, x2, noise).to_json())
