"""Time integration around a profile, shock-location tracking, energy and rate diagnostics."""
from .delta import DeltaResult, RestState, extract_delta, fit_shift, nonlinear_residual
from .energy import block_bounds, energy_monitor, energy_threshold
from .greens import default_pulse, greens_compare, make_pulse
from .io import read_timeseries, write_json, write_snapshots, write_timeseries
from .rates import DECAY_TARGETS, claim_check, fit_decay_rates
from .runs import (SimConfig, SimulationResult, build_rest_state, initial_perturbation,
                   integrate_linearized, integrate_nonlinear, zeta0_norm)
from .scheme import Discretization, linear_rk3_step, ssp_rk3_step, steady_correction

__all__ = [
    "DeltaResult", "RestState", "extract_delta", "fit_shift", "nonlinear_residual",
    "block_bounds", "energy_monitor", "energy_threshold",
    "default_pulse", "greens_compare", "make_pulse",
    "read_timeseries", "write_json", "write_snapshots", "write_timeseries",
    "DECAY_TARGETS", "claim_check", "fit_decay_rates",
    "SimConfig", "SimulationResult", "build_rest_state", "initial_perturbation",
    "integrate_linearized", "integrate_nonlinear", "zeta0_norm",
    "Discretization", "linear_rk3_step", "ssp_rk3_step", "steady_correction",
]
