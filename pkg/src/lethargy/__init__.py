"""Best-approximation distances to nested subspace chains, and constructive
realization of prescribed distance sequences."""

from .construct import (
    BorodinReport,
    BorodinSchedule,
    ConstructionError,
    ConstructionTrace,
    ConstructOptions,
    InterpolationFamily,
    StabilizationTable,
    TargetError,
    TargetSequence,
    build_schedule,
    check_borodin_condition,
    check_subspace_condition,
    construct_prefix,
    construct_sequence,
    finite_construct,
    interpolating_family,
    lipschitz_check,
    normalize_step,
)
from .distance import (
    DistanceResult,
    SolverError,
    best_approximant,
    rho,
    rho_oracle,
)
from .functionals import (
    Functional,
    FunctionalError,
    dual_norm,
    kernel_distance_identity_check,
    limit_expression,
    limit_value,
    norm_attainment_check,
    norming_functional,
)
from .scenario import (
    Report,
    Scenario,
    ScenarioError,
    emit,
    load_scenario,
    parse_scenario,
    run,
)
from .spaces import (
    Chain,
    ChainValidation,
    DimensionMismatchError,
    NormSpec,
    Subspace,
    as_vector,
    contains,
    coordinate_chain,
    norm_eval,
    validate_chain,
)

__version__ = "0.1.0"

__all__ = [
    "BorodinReport",
    "BorodinSchedule",
    "Chain",
    "ChainValidation",
    "ConstructOptions",
    "ConstructionError",
    "ConstructionTrace",
    "DimensionMismatchError",
    "DistanceResult",
    "Functional",
    "FunctionalError",
    "InterpolationFamily",
    "NormSpec",
    "Report",
    "Scenario",
    "ScenarioError",
    "SolverError",
    "StabilizationTable",
    "Subspace",
    "TargetError",
    "TargetSequence",
    "as_vector",
    "best_approximant",
    "build_schedule",
    "check_borodin_condition",
    "check_subspace_condition",
    "construct_prefix",
    "construct_sequence",
    "contains",
    "coordinate_chain",
    "dual_norm",
    "emit",
    "finite_construct",
    "interpolating_family",
    "kernel_distance_identity_check",
    "limit_expression",
    "limit_value",
    "lipschitz_check",
    "load_scenario",
    "norm_attainment_check",
    "norm_eval",
    "normalize_step",
    "norming_functional",
    "parse_scenario",
    "rho",
    "rho_oracle",
    "run",
    "validate_chain",
]
