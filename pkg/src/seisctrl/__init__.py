"""Closed-loop mitigation of injection-induced seismicity.

A spectral solver for depth-averaged pressure diffusion with injection
wells, region-wise seismicity-rate dynamics, a robust homogeneous tracking
controller with a demand-constrained flux-allocation layer, and a scenario
runner with deterministic text output.
"""

__version__ = "0.1.0"

from .basis import RectRegion, SineBasis, eigenvalue
from .config import ConfigError, ScenarioConfig, parse_config
from .control import (ControllerGains, DemandConstraint, ReferenceSpec,
                      control_law, demand_projection, integral_rhs,
                      nominal_B0, null_space_basis, reference, signed_power)
from .dynamics import (PhysicalParams, RegionSet, WellLayout,
                       assemble_galerkin_operator, input_matrices,
                       modal_rhs_heterogeneous, modal_rhs_homogeneous,
                       region_pressure_rate, sr_rhs, sr_rhs_direct)
from .fdsolver import fd_reference_solver
from .heterogeneity import HeterogeneityField, heterogeneity_generator
from .integrators import (IntegrationError, Trajectory, integrate_rk23,
                          integrate_rk4_fixed)
from .simulate import (ClosedLoop, ScenarioResult, build_closed_loop,
                       oracle_compare, run_scenario, steady_state_time)

__all__ = [
    "__version__",
    "RectRegion", "SineBasis", "eigenvalue",
    "ConfigError", "ScenarioConfig", "parse_config",
    "ControllerGains", "DemandConstraint", "ReferenceSpec", "control_law",
    "demand_projection", "integral_rhs", "nominal_B0", "null_space_basis",
    "reference", "signed_power",
    "PhysicalParams", "RegionSet", "WellLayout", "assemble_galerkin_operator",
    "input_matrices", "modal_rhs_heterogeneous", "modal_rhs_homogeneous",
    "region_pressure_rate", "sr_rhs", "sr_rhs_direct",
    "fd_reference_solver",
    "HeterogeneityField", "heterogeneity_generator",
    "IntegrationError", "Trajectory", "integrate_rk23", "integrate_rk4_fixed",
    "ClosedLoop", "ScenarioResult", "build_closed_loop", "oracle_compare",
    "run_scenario", "steady_state_time",
]
