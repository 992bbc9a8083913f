"""Constant-curvature conformal metrics on plane domains.

Solves  Laplacian(u) = 4|h|^2 exp(2u)  for holomorphic curvature data h,
escalates Dirichlet levels to approximate complete metrics, reconstructs
developing maps by integrating the associated linear second-order equation,
and builds finite Blaschke products with prescribed critical points.
"""

__version__ = "0.1.0"

from .closedforms import (
    boundary_from_source,
    compose_map3,
    factor_map3,
    hyperbolic_source,
    mobius_map3,
    power_source,
    radial_annulus_source,
    singular_pair_sources,
    source_from_map,
    squaring_map3,
)
from .curvature import (
    MetricField,
    SolveReport,
    check_bounds,
    check_comparison,
    check_green_representation,
    hyperbolic_log_density,
    residual,
    solve_blowup,
    solve_dirichlet,
)
from .errors import (
    ConfigError,
    CurvforgeError,
    DegreeViolationError,
    EvaluationDomainError,
    LinearSolveError,
    MonotonicityError,
    NewtonDivergenceError,
    OverflowGuardError,
    PathPlanningError,
    SolverError,
)
from .grid import (
    ComplexField,
    DomainDescriptor,
    DomainGrid,
    ScalarField,
    build_grid,
    write_field_csv,
)
from .inner import (
    CriticalSpec,
    FiniteBlaschke,
    HolomorphicFactor,
    PolynomialFactor,
    ProductFactor,
    SingularInnerAtom,
    blaschke_from_spec,
    check_blaschke_condition,
    critical_points_of_finite_blaschke,
    factor_from_json,
    frostman_shift,
)
from .liouville import (
    ClosedFormSource,
    DevelopingMap,
    GridSource,
    MobiusFit,
    MobiusTransform,
    compute_Au,
    compute_Bu,
    develop,
    holomorphy_residual,
    indicial_roots,
    laurent_b0,
    mobius_fit,
    plan_path,
    verify_representation,
)
from .operators import (
    LaplaceOperator,
    green_quadrature,
    harmonic_extension,
    interpolate,
    laplacian_matrix,
    solve_linear,
    wirtinger_fields,
)
from .pipeline import (
    CompositeModulusFactor,
    ConstructionResult,
    ModulusConstruction,
    construct_blaschke,
    construct_with_ae_boundary_modulus,
    construct_with_boundary_modulus,
    equivalence_up_to_automorphism,
    invert_critical_map,
)
