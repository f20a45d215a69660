"""Gradient flow of the bending-plus-length energy for planar open curves
whose endpoints slide on the x-axis, with natural (Navier-type) boundary
conditions: admissibility checking, a semi-implicit evolution solver,
elastica refinement, identity verification and singularity classification.
"""

__version__ = "0.1.0"

from .admissibility import (
    AdmissibilityReport,
    check_analytic_admissibility,
    check_geometric_admissibility,
    prepare_initial,
)
from .diagnostics import (
    DiagnosticsRecord,
    boundary_residuals,
    classify_singularity,
    record,
    verify_curvature_evolution,
    verify_dissipation,
)
from .elastica import ElasticaReport, el_residual, energy_first_variation, newton_refine
from .energy import EnergyBreakdown, curvature_norm, dissipation, elastic_energy, normal_velocity
from .errors import *  # noqa: F401,F403
from .estimators import ConstantSpeedReparametrizer, ElasticaRefiner, ElasticFlow
from .flow import (
    FlowConfig,
    FlowResult,
    FlowState,
    TerminationReason,
    assemble_implicit_system,
    boundary_lambda,
    deturck_velocity,
    interpolated_lambda,
    run_flow,
    step_explicit,
    step_semi_implicit,
)
from .generators import segment, semicircle, sine_arch
from .geometry import (
    DiscreteCurve,
    GeometricQuantities,
    arclength_integrate,
    compute_geometry,
    hausdorff_distance,
    reparametrize_constant_speed,
)
