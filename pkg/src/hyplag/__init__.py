"""Action-minimizing dynamics of time-periodic mechanical systems on the
hyperbolic plane: disk geometry, a genus-2 covering group, boundary-value
minimizers, twist-map orbits, quasi-geodesic analysis, shadowing
experiments, and orbit projections onto asymptotic geodesics."""

from .constants import QGConstants, compute_constants, k0_threshold, measured_speed_bound, n0_for
from .curves import SampledCurve, curve_length, hausdorff_to_geodesic, rho
from .errors import (
    BoundaryOverflowError,
    ConfigError,
    ConvergenceError,
    DegenerateChordError,
    HorizonError,
    OrbitBudgetError,
    ThresholdError,
)
from .fuchsian import (
    EquivariantPotential,
    FuchsianGroup,
    FundamentalDomain,
    build_octagon_group,
    cyclic_test_group,
    orbit_ball,
    potential_gradient,
    potential_value,
    reduce_to_domain,
)
from .geometry import (
    BoundaryPoint,
    DiskPoint,
    Geodesic,
    Isometry,
    TangentVec,
    dist,
    exp_map,
    geodesic_through,
    log_map,
    project_to_geodesic,
    sigma_project,
)
from .mechanics import (
    ActionBoundLedger,
    ELState,
    MechanicalLagrangian,
    action,
    action_bounds,
    el_vector_field,
    energy,
    integrate_el,
    lagrangian_value,
)
from .minimize import (
    BVProblem,
    MinimizeResult,
    el_residual,
    solve_bvp,
    verify_subsegment_minimality,
)
from .qg import QGFit, qg_check, qg_fit
from .semiconjugacy import (
    OrbitRecord,
    asymptotic_geodesic,
    cesaro_Dstar,
    choose_alpha,
    cocycle_a,
    displacement_cocycle,
    evaluate_qk,
    fuller_average,
    geodesic_orbit,
    make_orbit,
    monotonicity_check,
    sigma_of,
)
from .shadowing import ShadowReport, ShadowRun, shadow_experiment, shortening_surgery
from .twist import TwistSequence, generating_S, grad1_S, grad2_S, minimize_W, replay_error, twist_step

__version__ = "0.1.0"
