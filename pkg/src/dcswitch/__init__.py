"""Delay-constrained input-queued switch scheduling."""

__version__ = "0.1.0"

from .capacity import (
    CapacityVerdict,
    UtilitySpec,
    check_capacity,
    circular_shift_schedule,
    maximize_concave_utility,
    maximize_linear_utility,
)
from .combinat import (
    build_appendix_b_matrix,
    decompose_subpermutation,
    edge_color_bipartite,
    greedy_iterative_mwm,
    max_weight_degree_constrained_subgraph,
    max_weight_matching,
    solve_t_disjoint_max_weight,
)
from .core import (
    FrameSchedule,
    InfeasibleError,
    SwitchConfig,
    ValidationError,
    advance_slot,
    is_matching,
    is_t_disjoint,
)
from .sim import ExperimentConfig, SimTrace, run_simulation, throughput_gap

__all__ = [
    "CapacityVerdict",
    "ExperimentConfig",
    "FrameSchedule",
    "InfeasibleError",
    "SimTrace",
    "SwitchConfig",
    "UtilitySpec",
    "ValidationError",
    "advance_slot",
    "build_appendix_b_matrix",
    "check_capacity",
    "circular_shift_schedule",
    "decompose_subpermutation",
    "edge_color_bipartite",
    "greedy_iterative_mwm",
    "is_matching",
    "is_t_disjoint",
    "max_weight_degree_constrained_subgraph",
    "max_weight_matching",
    "maximize_concave_utility",
    "maximize_linear_utility",
    "run_simulation",
    "solve_t_disjoint_max_weight",
    "throughput_gap",
]
