"""Voronoi-cell particle operators on planar point clouds.

Discrete averaging, gradient, and two Laplacian approximations built from a
bounded Voronoi decomposition, together with computable constants that turn
the truncation-error estimates into checkable inequalities.
"""

from .bounds import (
    BoundConstant,
    BoundReport,
    ConstantsBundle,
    compute_constants,
    link_budget,
    multiindex_reciprocal_factorial_sum,
    operator_budget,
    reference_budgets,
    scenario_parameters,
    simplified_budgets,
    taylor_remainder_limit,
)
from .errors import (
    AssumptionViolationError,
    DegenerateConfigurationError,
    DuplicateSiteError,
    GeometryError,
    QuadratureError,
    SiteOutsideDomainError,
    VoroMpsError,
    WeightError,
)
from .functions import (
    FIELD_NAMES,
    ScalarField,
    field_catalog,
    grid_seminorm,
    make_field,
)
from .geometry import (
    Annulus,
    ConvexPolygon,
    DomainSpec,
    Point2,
    ValidationReport,
    VoronoiDecomposition,
    build_voronoi,
    cell_annulus_area,
    neighbor_sets,
    polygon_disk_area,
    validate_standing_assumptions,
)
from .harness import (
    StudyConfig,
    StudyResult,
    StudyRun,
    jittered_lattice_sites,
    lattice_sites,
    load_sites,
    moat_lattice_sites,
    poisson_disk_sites,
    run_single,
    run_study,
    save_sites,
    theorem_sweep_configs,
)
from .operators import (
    CHAIN_LINKS,
    CHAIN_STAGES,
    OPERATOR_KINDS,
    ChainEvaluation,
    GapReport,
    NeighborContext,
    OperatorResult,
    apriori_limit,
    box_tilde,
    cell_stage_operator,
    continuous_operator,
    discrete_operator,
    evaluate_chain,
    grad_tilde,
    laplace_tilde,
    make_context,
    pi_tilde,
    stage_gaps,
)
from .oracle import OracleEstimate, grid_integral, mc_region_integral
from .weights import (
    PositivityReport,
    WeightFunction,
    annular_l1_norm,
    annulus_tensor_moment,
    annulus_vector_moment,
    check_positivity,
    custom_radial_weight,
    indicator_weight,
    linear_taper_weight,
    radial_moment,
)

__version__ = "0.1.0"

__all__ = [
    "Annulus",
    "AssumptionViolationError",
    "BoundConstant",
    "BoundReport",
    "CHAIN_LINKS",
    "CHAIN_STAGES",
    "ChainEvaluation",
    "ConstantsBundle",
    "ConvexPolygon",
    "DegenerateConfigurationError",
    "DomainSpec",
    "DuplicateSiteError",
    "FIELD_NAMES",
    "GapReport",
    "GeometryError",
    "NeighborContext",
    "OPERATOR_KINDS",
    "OperatorResult",
    "OracleEstimate",
    "Point2",
    "PositivityReport",
    "QuadratureError",
    "ScalarField",
    "SiteOutsideDomainError",
    "StudyConfig",
    "StudyResult",
    "StudyRun",
    "ValidationReport",
    "VoroMpsError",
    "VoronoiDecomposition",
    "WeightError",
    "WeightFunction",
    "annular_l1_norm",
    "annulus_tensor_moment",
    "annulus_vector_moment",
    "apriori_limit",
    "box_tilde",
    "build_voronoi",
    "cell_annulus_area",
    "cell_stage_operator",
    "check_positivity",
    "compute_constants",
    "continuous_operator",
    "custom_radial_weight",
    "discrete_operator",
    "evaluate_chain",
    "field_catalog",
    "grad_tilde",
    "grid_integral",
    "grid_seminorm",
    "indicator_weight",
    "jittered_lattice_sites",
    "laplace_tilde",
    "lattice_sites",
    "linear_taper_weight",
    "link_budget",
    "load_sites",
    "make_context",
    "make_field",
    "mc_region_integral",
    "moat_lattice_sites",
    "multiindex_reciprocal_factorial_sum",
    "neighbor_sets",
    "operator_budget",
    "pi_tilde",
    "poisson_disk_sites",
    "polygon_disk_area",
    "radial_moment",
    "reference_budgets",
    "run_single",
    "run_study",
    "save_sites",
    "scenario_parameters",
    "simplified_budgets",
    "stage_gaps",
    "taylor_remainder_limit",
    "theorem_sweep_configs",
    "validate_standing_assumptions",
    "__version__",
]
