"""Multi-year maintenance planning for large road networks under annual budgets."""

from .allocator import AllocationResult, Candidate, exact_knapsack, greedy_knapsack, multichoice_allocate
from .agent import (
    NetworkSummary,
    ReplayBuffer,
    Trainer,
    TrainingConfig,
    Transition,
    build_state,
    q_target,
    select_candidate,
    summarize,
)
from .baselines import hybrid_first_year_plan, progressive_lp_plan, worst_first_plan
from .deterioration import (
    RehabEffect,
    WeibullCurve,
    effective_age,
    pqi_at_age,
    rehab_boost,
    transition,
)
from .experiments import ComparisonReport, SweepReport, compare, emit_report, gamma_sweep
from .netgen import GeneratorConfig, generate
from .network import (
    PQI_MAX,
    ActionKind,
    BudgetViolation,
    MaintenancePlan,
    NetworkState,
    RoadClass,
    Segment,
    condition_histogram,
    ehlos,
    halos,
    initial_state,
    load_network,
    load_plan,
    los,
    save_network,
    save_plan,
    to_cents,
)
from .rewards import RewardRecord, action_cost_cents, global_reward, local_reward, unit_cost
from .simulate import ArrayNetwork, rollout_plan

__version__ = "0.1.0"
