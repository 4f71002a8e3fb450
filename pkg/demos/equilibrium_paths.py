"""Equilibrium holdings for two investors with risk aversions 4 and 1.

The more risk-averse investor unwinds a long position while the other
starts short, buys, and ends up long.  We print the paths on a coarse grid,
the time the second investor's holding crosses zero, and the trading volume.
"""

import numpy as np

from merton_cournot import ConstantVol, ControlBounds, MarketParams, Preferences, nash_equilibrium, validate_market
from merton_cournot.equilibrium import trading_volume

market = MarketParams(theta_1=1.0, theta_2=1.0, vol=ConstantVol(0.5), s=0.0, T=5.0, pi1_0=0.6, pi2_0=-1.0)
sc = validate_market(market, Preferences(4.0, 1.0), ControlBounds(-50.0, 50.0))
sol = nash_equilibrium(sc)
print(f"chi = {sol.constants.chi}, varphi = {sol.constants.varphi}")
print(f"containment: {sol.conditions.cond_iii_lhs:.2f} <= {sol.conditions.cond_iii_rhs}")

print("\n   t      pi1      pi2       x1       x2")
for t in np.linspace(0, 5, 11):
    p1, p2 = sol.holdings(t)
    x1, x2 = sol.rates(t)
    print(f"{t:4.1f} {p1:8.4f} {p2:8.4f} {x1:8.4f} {x2:8.4f}")

c1, c2 = sol.crossing_times
print(f"\ninvestor 2 crosses zero at t = {c2:.5f}; investor 1 never does ({c1})")
print(f"holding of investor 1 at that moment: {sol.holding(c2, 1):.4f}")

vol = trading_volume(sol, sc.grid(2000))
print(f"volume (incl. initial blocks): {vol.total:.4f} = {vol.per_investor[0]:.4f} + {vol.per_investor[1]:.4f}")
