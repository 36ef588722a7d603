"""LP relaxation hierarchy for polynomial feasibility over product polytopes,
applied to certified lower bounds on nonnegative matrix rank."""

from .errors import (
    BackendFailure,
    CapacityError,
    DimensionMismatch,
    DomainError,
    EmptySpace,
    InvalidShape,
    LevelOverflow,
    LevelTooLow,
    PolarizeError,
    ShapeRequired,
    UnboundedSpace,
    UnknownLetter,
    ZeroColumn,
    ZeroRow,
)
from .hierarchy import (
    FAMILY_FULL,
    FAMILY_LITE,
    PI_BY_NAME,
    PI_HILBERT_SCHMIDT,
    PI_IDENTITY,
    PI_MATRIX_PRODUCT,
    VARIANT_PLUS,
    VARIANT_POLARIZED,
    AffineMap,
    HierarchySpec,
    PolarizationMap,
    Problem,
    affine_map,
    build_lp,
    build_plus_lp,
    build_polarized_lp,
    check_pi_soundness,
    evaluate_affine_map,
    lift_product_point,
    lift_vector,
    problem_from_json,
    problem_to_json,
    zero_map,
)
from .lp import (
    FarkasRay,
    LinearProgram,
    LinearRow,
    SolveOutcome,
    SolveStatus,
    constraint_violations,
    farkas_certificate,
    max_violation,
    resolve_backend,
    solve,
    verify_certificate,
)
from .moments import (
    Letter,
    MomentIndex,
    canonical_index,
    coord,
    count_indices,
    empty_index,
    enumerate_capped,
    enumerate_indices,
    extend_index,
    index_name,
    unit,
)
from .mps import read_mps, write_lp_text, write_mps
from .nmf import (
    NestedRectanglesInstance,
    NonnegMatrix,
    RegionRecord,
    analytic_feasible,
    check_point,
    matrix_from_array,
    nested_rectangles_matrix,
    nmf_problem,
    normalize_to_stochastic,
    read_region_csv,
    scan_region,
    write_region_csv,
)
from .spaces import (
    FacetFunctional,
    StateSpace,
    evaluate_facets,
    facet,
    is_member,
    make_left_stochastic_space,
    make_polytope_space,
    space_from_json,
    space_to_json,
)

__version__ = "0.1.0"
