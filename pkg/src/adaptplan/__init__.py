"""Re-ordering execution of temporal plans under uncertain state."""
from .dispatcher import Decision, DecisionKind, ExecutorState, ReplanReason, handle_feedback, record_dispatch, select_next
from .errors import (
    AdaptPlanError,
    CapacityError,
    GroundingError,
    InconsistentApplicationError,
    InvalidPlanError,
    MalformedConditionError,
    NetworkInconsistencyError,
    PlannerFailure,
    PlanSyntaxError,
    ProtocolError,
    UnsupportedFeatureError,
)
from .extractor import OrderingResult, generate_plans
from .model import (
    Condition,
    DurativeAction,
    Effect,
    FuzzyState,
    InstantaneousAction,
    NodeKind,
    PlanNode,
    PlanningProblem,
    Timing,
    apply_node,
    joint_probability,
)
from .plan_graph import EdgeLabel, PlanNetwork, TemporalEdge, build_plan_network, prune_executed, relax
from .plan_io import TimeTriggeredPlan, parse_domain_problem, parse_time_triggered_plan, serialize_orderings
from .simulator import Simulator, WorldConfig, estimate
