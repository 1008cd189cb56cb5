"""Proximal-ADMM frictional contact solver with inverse dynamics and benchmarks."""

from ._backend import HAVE_COMPILED, active_backend, use_backend
from .admm import (
    Linear,
    ShiftedFactorization,
    SolverResult,
    SolverSettings,
    SolverStatus,
    Spectral,
    factorize_shifted,
    residuals,
    solve,
    update_rho_linear,
    update_rho_spectral,
)
from .bench import BenchReport, generate_stack_suite, performance_profile, run_ablation
from .cones import (
    FrictionCone,
    desaxce,
    dual_cone_contains,
    project_cone_product,
    project_soc,
    project_soc_diag_metric,
    soc_distance,
)
from .inverse import (
    IdProblem,
    IdResult,
    IdStatus,
    check_id_ncp,
    recover_torque,
    solve_id,
)
from .pgs import pgs_settings, solve_pgs
from .problem import (
    ContactProblem,
    FactorizationError,
    ResidualReport,
    SpectrumEstimate,
    assemble_delassus,
    check_ncp,
    condition_estimate,
    load_problem,
    save_problem,
)
from .sim import (
    Body,
    Contact,
    ContactSet,
    Scene,
    Simulator,
    assemble_step_problem,
    detect_contacts,
    make_stack_scene,
    step,
)

__version__ = "0.1.0"
