"""Clearing games on financial liability networks.

Banks hold external assets and owe each other money along weighted edges.
Each bank chooses how to split incoming money over its debts (a threshold
strategy); the resulting clearing states, improvement dynamics and
equilibria are computed exactly over the rationals where possible.
"""
from .clearing import (
    ClearingResult,
    EngineConfig,
    brute_force_fixed_points,
    clearing,
    is_feasible_flow,
    kleene,
    max_clearing,
    min_clearing,
)
from .dynamics import (
    ImprovementStep,
    SECertificate,
    check_reduction_consistency,
    find_residual_cycle,
    improvement_step_max,
    improvement_step_min,
    run_dynamics,
    verify_strong_equilibrium,
)
from .equilibria import (
    FiniteStrategySet,
    WelfareSpec,
    coin_ranking_sets,
    edge_ranking_sets,
    is_nash,
    optimal_profile_search,
    realize_flow_as_profile,
    search_equilibrium,
    welfare,
    z_optimal_flow,
)
from .errors import (
    BTooSmall,
    ClearnetError,
    DeltaTooSmall,
    EnumerationTooLarge,
    FlowNotClearing,
    GadgetParameterError,
    InfeasibleTarget,
    InvalidNetwork,
    InvalidProfile,
    NonConvergence,
    RuleNotReductionConsistent,
    UnsupportedObjective,
)
from .model import Edge, FlowState, Network, Violation, validate_network
from .strategies import (
    PiecewiseLinear,
    Proportional,
    Ranking,
    ThresholdStrategy,
    evaluate_strategy,
    expand_to_partition,
    validate_profile,
)

__all__ = [
    "Edge",
    "FlowState",
    "Network",
    "Violation",
    "validate_network",
    "BTooSmall",
    "ClearingResult",
    "ClearnetError",
    "DeltaTooSmall",
    "EngineConfig",
    "EnumerationTooLarge",
    "FiniteStrategySet",
    "FlowNotClearing",
    "GadgetParameterError",
    "ImprovementStep",
    "InfeasibleTarget",
    "InvalidNetwork",
    "InvalidProfile",
    "NonConvergence",
    "PiecewiseLinear",
    "Proportional",
    "Ranking",
    "RuleNotReductionConsistent",
    "SECertificate",
    "ThresholdStrategy",
    "UnsupportedObjective",
    "WelfareSpec",
    "brute_force_fixed_points",
    "check_reduction_consistency",
    "clearing",
    "coin_ranking_sets",
    "edge_ranking_sets",
    "evaluate_strategy",
    "expand_to_partition",
    "find_residual_cycle",
    "improvement_step_max",
    "improvement_step_min",
    "is_feasible_flow",
    "is_nash",
    "kleene",
    "max_clearing",
    "min_clearing",
    "optimal_profile_search",
    "realize_flow_as_profile",
    "run_dynamics",
    "search_equilibrium",
    "validate_profile",
    "verify_strong_equilibrium",
    "welfare",
    "z_optimal_flow",
]
