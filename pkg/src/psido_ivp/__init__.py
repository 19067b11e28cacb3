"""Spectral toolkit for evolution equations with time-measurable pseudo-differential symbols.

Submodules
----------
spectral_core     periodic grids, symmetric Fourier transform, weighted L_p norms
symbols           symbol catalogue plus ellipticity / derivative-bound checks
weights           Muckenhoupt constants, maximal and sharp functions
time_measures     Laplace transforms, dyadic control sequences, scaling constants
littlewood_paley  dyadic blocks, weighted Bessel-potential and Besov norms
kernels           propagators, exact solves, kernel slices and bound sweeps
verify            scenario-driven estimate checks
cli               ``psido-ivp`` command-line interface
"""

from .kernels import (
    KernelSlice,
    Propagator,
    TimeBump,
    Trajectory,
    apply_operator,
    fractional_laplacian,
    kernel_bound_report,
    kernel_slice,
    propagator,
    solve_homogeneous,
    solve_inhomogeneous,
    symbol_time_integral,
    weak_residual,
)
from .littlewood_paley import LPFrame, NormSpec, make_frame, space_norm
from .spectral_core import SpectralField, SpectralGrid, make_grid, transform, inverse_transform, weighted_lp_norm
from .symbols import Symbol, builtin_symbol, check_ellipticity, check_regular_upper_bound, symbol_from_spec
from .time_measures import DyadicSequence, TimeMeasure, control_sequence, laplace, log_laplace, measure_from_spec
from .verify import EstimateReport, Scenario, scenario_from_dict, verify_estimate, verify_inhomogeneous
from .weights import Weight, ap_constant_estimate, power_weight, unit_weight, weight_from_spec

__version__ = "0.1.0"

__all__ = [
    "KernelSlice",
    "Propagator",
    "TimeBump",
    "Trajectory",
    "apply_operator",
    "fractional_laplacian",
    "kernel_bound_report",
    "kernel_slice",
    "propagator",
    "solve_homogeneous",
    "solve_inhomogeneous",
    "symbol_time_integral",
    "weak_residual",
    "LPFrame",
    "NormSpec",
    "make_frame",
    "space_norm",
    "SpectralField",
    "SpectralGrid",
    "make_grid",
    "transform",
    "inverse_transform",
    "weighted_lp_norm",
    "Symbol",
    "builtin_symbol",
    "check_ellipticity",
    "check_regular_upper_bound",
    "symbol_from_spec",
    "DyadicSequence",
    "TimeMeasure",
    "control_sequence",
    "laplace",
    "log_laplace",
    "measure_from_spec",
    "EstimateReport",
    "Scenario",
    "scenario_from_dict",
    "verify_estimate",
    "verify_inhomogeneous",
    "Weight",
    "ap_constant_estimate",
    "power_weight",
    "unit_weight",
    "weight_from_spec",
]
