"""Space-time Trefftz discontinuous Galerkin solver for the Schroedinger equation.

Solves i psi_t + Lap psi - V psi = 0 with piecewise-constant V in one and
two space dimensions, slab by slab, with complex-exponential basis functions.
"""

from .analysis import (
    EnergyIdentityError,
    ErrorRecord,
    ErrorReport,
    NormComponents,
    dg_error,
    dg_norm,
    energy,
    energy_loss,
    fit_rates,
    l2_final_error,
)
from .assembly import apply_global_form, assemble_slab_matrix, global_matrix, slab_systems
from .basis import TrefftzBasisSpec, basis_1d, basis_2d, default_parameters, eval_basis
from .discretization import Discretization, FluxParameters
from .harness import RunConfig, run_condition, run_convergence, run_solve
from .mesh import FaceTag, SpaceTimeMesh, TimePartition, build_mesh, build_spatial_mesh
from .problems import (
    ProblemSpec,
    bound_state_wavenumber,
    gaussian_problem,
    get_benchmark,
    plane_wave_problem,
    square_well_problem,
)
from .timestepper import DiscreteSolution, SolverAbort, condition_number, march

__all__ = [
    "DiscreteSolution", "Discretization", "EnergyIdentityError", "ErrorRecord", "ErrorReport",
    "FaceTag", "FluxParameters", "NormComponents", "ProblemSpec", "RunConfig", "SolverAbort",
    "SpaceTimeMesh", "TimePartition", "TrefftzBasisSpec", "apply_global_form",
    "assemble_slab_matrix", "basis_1d", "basis_2d", "bound_state_wavenumber", "build_mesh",
    "build_spatial_mesh", "condition_number", "default_parameters", "dg_error", "dg_norm",
    "energy", "energy_loss", "eval_basis", "fit_rates", "gaussian_problem", "get_benchmark",
    "global_matrix", "l2_final_error", "march", "plane_wave_problem", "run_condition",
    "run_convergence", "run_solve", "slab_systems", "square_well_problem",
]
