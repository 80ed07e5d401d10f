"""Energy-efficient rate-splitting beamforming for multibeam GEO satellites
under phase-uncertain CSIT: channel synthesis, expectation-based rate
evaluation, an iterative convex-restriction beamforming optimizer with a
rank-one penalty, and a reproducible Monte-Carlo sweep harness."""

from .channel import ChannelRealization, assemble, beam_gain, large_scale_coeff, offaxis_param, sample_rain
from .csit import CsitStatistics, build_stats, effective_channel, qbar_closed_form
from .geometry import BeamLayout, UserDrop, drop_users, hex_layout
from .harness import SweepResult, SweepSpec, emit_csv, run_sweep
from .optimizer import (
    InitializationInfeasible,
    ScaResult,
    ScaState,
    SubproblemError,
    extract_rank_one,
    solve_ee,
    solve_wsr,
)
from .rates import BeamformerSet, RateReport, approx_rate, ergodic_rate_mc, evaluate, power_total
from .scenario import Scenario, default_scenario, desk_scenario, load_scenario, save_scenario, validate

__all__ = [
    "BeamLayout",
    "BeamformerSet",
    "ChannelRealization",
    "CsitStatistics",
    "InitializationInfeasible",
    "RateReport",
    "ScaResult",
    "ScaState",
    "Scenario",
    "SubproblemError",
    "SweepResult",
    "SweepSpec",
    "UserDrop",
    "approx_rate",
    "assemble",
    "beam_gain",
    "build_stats",
    "default_scenario",
    "desk_scenario",
    "drop_users",
    "effective_channel",
    "emit_csv",
    "ergodic_rate_mc",
    "evaluate",
    "extract_rank_one",
    "hex_layout",
    "large_scale_coeff",
    "load_scenario",
    "offaxis_param",
    "power_total",
    "qbar_closed_form",
    "run_sweep",
    "sample_rain",
    "save_scenario",
    "solve_ee",
    "solve_wsr",
    "validate",
]

__version__ = "0.1.0"
