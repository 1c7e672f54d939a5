"""Resilient multi-agent consensus under ternary event-based control.

A deterministic discrete-event simulator and analysis library for
consensus protocols that trim suspected-malicious neighbor values
(mean-subsequence-reduced filtering) and communicate via self-triggered
or event-triggered ternary controllers.
"""

from msrsim.graph import (
    DirectedGraph,
    RobustnessVerdict,
    assign_uniform_weights,
    check_robustness,
    circulant_graph,
    complete_graph,
    cycle_graph,
    from_undirected_edges,
    is_connected,
    random_geometric,
)
from msrsim.trimming import ValueWithSource, msr_trim
from msrsim.protocol import (
    AgentState,
    ProtocolKind,
    advance_state,
    build_delay_augmented_matrix,
    deadzone,
    epsilon_bound,
    event_triggered_receive,
    event_triggered_threshold_fire,
    self_triggered_fire,
    weighted_average,
)
from msrsim.adversary import AdversarySpec, RandomControl, SineWave, adversary_value, schedule_adversary
from msrsim.engine import DelayModel, FixedDelay, RunRecord, UniformDelay, ZeroDelay, run
from msrsim.metrics import (
    ConsensusOutcome,
    ConsensusVerdict,
    aggregate_counters,
    check_consensus,
    check_safety,
    success_rate,
)
from msrsim.scenario import ScenarioConfig, simulate

__all__ = [
    "AdversarySpec",
    "AgentState",
    "ConsensusOutcome",
    "ConsensusVerdict",
    "DelayModel",
    "DirectedGraph",
    "FixedDelay",
    "ProtocolKind",
    "RandomControl",
    "RobustnessVerdict",
    "RunRecord",
    "ScenarioConfig",
    "SineWave",
    "UniformDelay",
    "ValueWithSource",
    "ZeroDelay",
    "advance_state",
    "adversary_value",
    "aggregate_counters",
    "assign_uniform_weights",
    "build_delay_augmented_matrix",
    "check_consensus",
    "check_robustness",
    "check_safety",
    "circulant_graph",
    "complete_graph",
    "cycle_graph",
    "deadzone",
    "epsilon_bound",
    "event_triggered_receive",
    "event_triggered_threshold_fire",
    "from_undirected_edges",
    "is_connected",
    "msr_trim",
    "random_geometric",
    "run",
    "schedule_adversary",
    "self_triggered_fire",
    "simulate",
    "success_rate",
    "weighted_average",
]
