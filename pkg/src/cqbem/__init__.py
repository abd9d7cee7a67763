"""Transient acoustic scattering by sound-soft obstacles.

Galerkin boundary elements in space (panel constants for the unknown
density, vertex hats for the boundary data) combined with convolution
quadrature in time (implicit Euler, BDF2 or trapezoidal stepping). The
library solves for the normal-trace density on the surface and
evaluates the scattered field at exterior points; a verification
harness reproduces the methods' classical convergence orders against a
manufactured solution.
"""

from .config import RunConfig, dumps_config, load_config, parse_config, save_config
from .cq import (
    METHODS,
    ContourPlan,
    discrete_convolution,
    generating_polynomial,
    make_contour,
    method_order,
    parse_method,
    scalar_weights,
    step_frequency,
    weights_from_half_spectrum,
)
from .errors import (
    ClearanceError,
    ConfigError,
    ContourError,
    CqbemError,
    MarchError,
    MeshError,
    MeshFormatError,
    MeshTopologyError,
)
from .kernels import (
    AssemblyPlan,
    PotentialPlan,
    available_backends,
    check_clearance,
    default_clearance,
    eval_double_layer_potential,
    eval_single_layer_potential,
)
from .march import (
    MarchResult,
    OperatorWeights,
    RunReport,
    SimulationResult,
    compute_weights,
    march,
    spectral_solve,
    postprocess_field,
    run_simulation,
)
from .mesh import (
    MeshDiagnostics,
    SurfaceMesh,
    load_mesh,
    points_inside,
    surface_distance,
    validate_mesh,
    winding_number,
)
from .shapes import cube, icosphere, write_off
from .spaces import (
    BoundarySpace,
    CausalSignal,
    IncidentWave,
    assemble_coupling_matrix,
    build_space,
    eval_signal_derivatives,
    sample_data,
)
from .verify import (
    ConvergenceStudy,
    Scenario,
    SelfConvergenceStudy,
    binomial_filter,
    estimate_order,
    exact_scattered_field,
    manufactured_scenario,
    measure_field_error,
    run_convergence_study,
    run_self_convergence_study,
)

__version__ = "0.1.0"

__all__ = [
    "METHODS",
    "AssemblyPlan",
    "BoundarySpace",
    "CausalSignal",
    "ClearanceError",
    "ConfigError",
    "ContourError",
    "ContourPlan",
    "ConvergenceStudy",
    "CqbemError",
    "IncidentWave",
    "MarchError",
    "MarchResult",
    "MeshDiagnostics",
    "MeshError",
    "MeshFormatError",
    "MeshTopologyError",
    "OperatorWeights",
    "PotentialPlan",
    "RunConfig",
    "RunReport",
    "Scenario",
    "SelfConvergenceStudy",
    "SimulationResult",
    "SurfaceMesh",
    "assemble_coupling_matrix",
    "available_backends",
    "binomial_filter",
    "build_space",
    "check_clearance",
    "compute_weights",
    "cube",
    "default_clearance",
    "discrete_convolution",
    "dumps_config",
    "estimate_order",
    "eval_double_layer_potential",
    "eval_signal_derivatives",
    "eval_single_layer_potential",
    "exact_scattered_field",
    "generating_polynomial",
    "icosphere",
    "load_config",
    "load_mesh",
    "make_contour",
    "manufactured_scenario",
    "march",
    "spectral_solve",
    "measure_field_error",
    "method_order",
    "parse_config",
    "parse_method",
    "points_inside",
    "postprocess_field",
    "run_convergence_study",
    "run_self_convergence_study",
    "run_simulation",
    "sample_data",
    "save_config",
    "scalar_weights",
    "step_frequency",
    "surface_distance",
    "validate_mesh",
    "weights_from_half_spectrum",
    "winding_number",
    "write_off",
]
