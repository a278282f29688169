"""Monte Carlo simulator of the mobile hybrid caching network."""
from .config import SimConfig
from .engine import (DeliveryTrace, SimOutcome, TrialResult, closest_holder, route_request,
                     run_experiment, run_trial, trial_rng)
from .geometry import Geometry, cell_chain, distance_slope, mean_closest_distance
from .mobility import step_mobility
from .placement import PlacementRealization, place, round_allocation

__all__ = [
    "SimConfig", "DeliveryTrace", "SimOutcome", "TrialResult", "closest_holder",
    "route_request", "run_experiment", "run_trial", "trial_rng", "Geometry", "cell_chain",
    "distance_slope", "mean_closest_distance", "step_mobility", "PlacementRealization",
    "place", "round_allocation",
]
