"""Opinion dynamics on social networks with machine-mediated message rewriting.

A discrete-time opinion model in which agents anchor to an innate view
while averaging the expressed views of their neighbors; some agents'
messages pass through a rewriting step before neighbors read them.
The package bundles graph ingestion, transform fitting, simulation,
closed-form equilibrium analysis, a sweep harness, and a verification
suite for the supporting theory.
"""

from .dynamics import (
    PopulationState,
    ScenarioConfig,
    Trajectory,
    run,
    sample_population,
    sample_truncated_gaussian,
    step,
)
from .equilibrium import (
    ClosedFormShift,
    EquilibriumResult,
    ShiftReport,
    average_shift_closed_form,
    convergence_rate_bound,
    equilibrium_shift,
    fj_equilibrium,
    mediated_equilibrium_linear,
    neumann_identity_check,
)
from .errors import (
    ConfigError,
    ConsistencyError,
    ConvergenceError,
    ParseError,
    ValidityError,
)
from .graph import (
    EdgeDirection,
    EdgeList,
    InfluenceMatrix,
    NetworkStats,
    build_influence_matrix,
    generate_regular,
    network_stats,
    parse_edge_list,
    validate_doubly_stochastic,
)
from .harness import (
    AmplificationTable,
    NetworkSpec,
    SweepResult,
    SweepRow,
    SweepSpec,
    amplification_table,
    build_network,
    load_sweep_spec,
    run_scenario,
    run_trajectories,
)
from .transform import (
    BiasStats,
    IdentityTransform,
    KernelTransform,
    LinearTransform,
    OpinionPairSet,
    bias_stats,
    fit_kernel,
    load_transform,
    make_linear,
    nw_predict,
    one_off_bias,
    save_transform,
    select_bandwidth,
    stance_match_filter,
)
from .verify import CheckOutcome, run_checks

__version__ = "0.1.0"

__all__ = [
    "AmplificationTable",
    "BiasStats",
    "CheckOutcome",
    "ClosedFormShift",
    "ConfigError",
    "ConsistencyError",
    "ConvergenceError",
    "EdgeDirection",
    "EdgeList",
    "EquilibriumResult",
    "IdentityTransform",
    "InfluenceMatrix",
    "KernelTransform",
    "LinearTransform",
    "NetworkSpec",
    "NetworkStats",
    "OpinionPairSet",
    "ParseError",
    "PopulationState",
    "ScenarioConfig",
    "ShiftReport",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "Trajectory",
    "ValidityError",
    "amplification_table",
    "average_shift_closed_form",
    "bias_stats",
    "build_influence_matrix",
    "build_network",
    "convergence_rate_bound",
    "equilibrium_shift",
    "fit_kernel",
    "fj_equilibrium",
    "generate_regular",
    "load_sweep_spec",
    "load_transform",
    "make_linear",
    "mediated_equilibrium_linear",
    "network_stats",
    "neumann_identity_check",
    "nw_predict",
    "one_off_bias",
    "parse_edge_list",
    "run",
    "run_checks",
    "run_scenario",
    "run_trajectories",
    "sample_population",
    "sample_truncated_gaussian",
    "save_transform",
    "select_bandwidth",
    "stance_match_filter",
    "step",
    "validate_doubly_stochastic",
]
