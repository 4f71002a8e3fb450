"""Round trips under different price impact shapes.

Linear impact gives every round trip zero expected gain; a quadratic odd
impact or a nonzero impact at zero rate does not.
"""

from merton_cournot.arbitrage import (
    LinearImpact, affine_impact, detect_dynamic_arbitrage, offset_at_zero_impact, quadratic_odd_impact,
)

grid = [0.5, 1.0, 2.0]
for name, k in [("linear", LinearImpact(1.0)), ("-x|x|", quadratic_odd_impact()),
                ("-x + 0.3", affine_impact(1.0, 0.3)), ("jump at 0", offset_at_zero_impact(1.0, 0.3))]:
    v = detect_dynamic_arbitrage(k, grid, grid, T=3.0)
    print(f"{name:10s} {v.to_json()}")
