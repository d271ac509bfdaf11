"""flexctl: discrete energy-based DC motor control under switched sampling periods."""

__version__ = "0.1.0"

from .controller import ControlOutput, GainSet, GuardSet, control_input, dynamic_gain
from .discretizer import DiscreteModel, SamplingTooSmallError, discretize, rotational_row
from .matseries import SeriesConvergenceError, SeriesOptions, expm_via_phi, phi
from .plant import DesiredState, MotorParams, PlantState, continuous_matrices, energy, energy_matrix, energy_rate
from .scheduler import Scheduler, ScheduleSpec
from .simulator import DivergenceError, SimConfig, TraceRecord, compare_gain_modes, run
from .stability import LyapunovSample, StabilityGrid, check_conditions, lyapunov, stability_map, v_prime

__all__ = [
    "ControlOutput", "GainSet", "GuardSet", "control_input", "dynamic_gain",
    "DiscreteModel", "SamplingTooSmallError", "discretize", "rotational_row",
    "SeriesConvergenceError", "SeriesOptions", "expm_via_phi", "phi",
    "DesiredState", "MotorParams", "PlantState", "continuous_matrices",
    "energy", "energy_matrix", "energy_rate",
    "Scheduler", "ScheduleSpec",
    "DivergenceError", "SimConfig", "TraceRecord", "compare_gain_modes", "run",
    "LyapunovSample", "StabilityGrid", "check_conditions", "lyapunov",
    "stability_map", "v_prime",
]
