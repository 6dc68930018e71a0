"""Distributed penalty-based optimization with consensus-tracked coupled constraints.

Agents minimize separable costs over private convex sets subject to shared
inequality constraints, exchanging only constraint-average estimates through
a doubly stochastic mixing matrix. Ships with an end-to-end delay-budget
negotiation case study (core network + access networks), a multi-domain
routing scenario, a centralized oracle, and a state-based-game verifier.
"""

from .consensus import (
    NegativeEntryError,
    NotDoublyStochasticError,
    NotStronglyConnectedError,
    WeightMatrix,
    WeightMatrixError,
    update_estimates,
    validate_weight_matrix,
)
from .core import (
    AgentSpec,
    Box,
    DecisionState,
    DimensionMismatchError,
    FeasibleSet,
    ProblemSpec,
    Product,
    SimplexBlock,
    evaluate_global_constraints,
    evaluate_penalized_objective,
    positive_part,
)
from .game import (
    AgentAction,
    GameState,
    InadmissibleActionError,
    NashReport,
    nodal_cost,
    potential,
    stationary_state,
    transition,
    verify_stationary_nash,
)
from .optimizer import (
    ConfigError,
    Constant,
    IterationTrace,
    LimiterConfig,
    NoNoise,
    Polynomial,
    RngStreams,
    RunConfig,
    TraceReporters,
    UniformBounded,
    UniformGradientProportional,
    apply_fictitious_budgets,
    compute_update_direction,
    run,
    step,
)
from .oracle import OracleResult, sample_feasible, solve_centralized
from .projection import contains, project

__version__ = "0.1.0"

__all__ = [
    "AgentAction",
    "AgentSpec",
    "Box",
    "ConfigError",
    "Constant",
    "DecisionState",
    "DimensionMismatchError",
    "FeasibleSet",
    "GameState",
    "InadmissibleActionError",
    "IterationTrace",
    "LimiterConfig",
    "NashReport",
    "NegativeEntryError",
    "NoNoise",
    "NotDoublyStochasticError",
    "NotStronglyConnectedError",
    "OracleResult",
    "Polynomial",
    "ProblemSpec",
    "Product",
    "RngStreams",
    "RunConfig",
    "SimplexBlock",
    "TraceReporters",
    "UniformBounded",
    "UniformGradientProportional",
    "WeightMatrix",
    "WeightMatrixError",
    "apply_fictitious_budgets",
    "compute_update_direction",
    "contains",
    "evaluate_global_constraints",
    "evaluate_penalized_objective",
    "nodal_cost",
    "positive_part",
    "potential",
    "project",
    "run",
    "sample_feasible",
    "solve_centralized",
    "stationary_state",
    "step",
    "transition",
    "update_estimates",
    "validate_weight_matrix",
    "__version__",
]
