"""Block trades as limits of fast trading.

Selling q shares at rate q/eps over a vanishing window moves the state along
the flow; the Euler scheme gets there up to theta q^2 / (2n) in own wealth.
"""

import numpy as np

from merton_cournot import GameState, TimeGrid, flow_full
from merton_cournot.dynamics import BrownianBundle, blip_transport
from merton_cournot.flow import aux_coords
from merton_cournot.model import ConstantVol, ControlBounds, MarketParams, Preferences, Scenario

sc = Scenario(MarketParams(0.5, 1.0, ConstantVol(0.0), 0.0, 1.0), Preferences(1, 1), ControlBounds(-5, 5))
y = GameState(S=10.0, pi_1=2.0, pi_2=-1.0, W_1=0.0, W_2=0.0)
q = 1.5
target = flow_full(q, y, 1, 0.5)
print("flow target:", target)
print("aux coords before/after:", aux_coords(y, 1, 0.5), aux_coords(target, 1, 0.5), sep="\n  ")

for n in (4, 16, 64, 256):
    g = TimeGrid.uniform(0.0, 1e-3, n)
    out = blip_transport(sc, 1, q, 1e-3, BrownianBundle.zeros(g), y)[0]
    err = out - target.as_array()
    print(f"n={n:4d}  wealth error {err[3]: .3e}  (theta q^2/2n = {0.5 * q * q / (2 * n):.3e})"
          f"  other max {np.max(np.abs(np.delete(err, 3))):.1e}")
