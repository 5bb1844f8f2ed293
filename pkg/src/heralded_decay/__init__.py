"""Trajectory simulation and analytics for a decaying two-level emitter
monitored by photon counting, fixed local-oscillator interference, or an
adaptive local oscillator that heralds the fully excited state."""

__version__ = "0.1.0"

from .qubit import (
    DetectionScheme,
    EmitterState,
    Params,
    Scheme,
    UnnormalizedDensity,
    excited_population,
    from_populations,
    normalize,
)
from .detection import (
    JumpOutcome,
    RatePair,
    adaptive_alpha,
    apply_jump,
    b_jump_population_map,
    no_jump_step,
    rates,
)
from .trajectory import (
    EnsembleStats,
    Event,
    SequenceEstimate,
    SimConfig,
    TrajectoryRecord,
    classify_and_estimate,
    counting_jump_fraction,
    run_ensemble,
    run_trajectory,
    strong_lo_excursion_probability,
)
from . import analytic

__all__ = [
    "DetectionScheme",
    "EmitterState",
    "EnsembleStats",
    "Event",
    "JumpOutcome",
    "Params",
    "RatePair",
    "Scheme",
    "SequenceEstimate",
    "SimConfig",
    "TrajectoryRecord",
    "UnnormalizedDensity",
    "adaptive_alpha",
    "analytic",
    "apply_jump",
    "b_jump_population_map",
    "classify_and_estimate",
    "counting_jump_fraction",
    "excited_population",
    "from_populations",
    "no_jump_step",
    "normalize",
    "rates",
    "run_ensemble",
    "run_trajectory",
    "strong_lo_excursion_probability",
]
