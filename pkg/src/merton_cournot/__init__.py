"""Two large investors trading with linear permanent price impact: equilibrium,
best responses, simulation and Monte Carlo checks."""

from .arbitrage import (
    CustomImpact, LinearImpact, RoundTrip, TripKind, Verdict, detect_dynamic_arbitrage, expected_gain,
    make_roundtrip,
)
from .bestresponse import BestResponse, RegionLabel, best_response_path, optimal_aux_pointwise
from .dynamics import BrownianBundle, simulate_aux, simulate_game, wealth_identity_residual
from .equilibrium import (
    ConditionsFailed, EquilibriumSolution, check_conditions, coupling_constants, crossing_time, nash_equilibrium,
)
from .flow import aux_coords, flow_full, flow_jacobian
from .model import (
    AuxState, BoundedLipschitzVol, ConstantVol, ControlBounds, ControlKind, GameState, MarketParams,
    PiecewiseControl, Preferences, Scenario, TimeGrid, ValidationError, cara_utility, validate_market,
)

__version__ = "0.1.0"
