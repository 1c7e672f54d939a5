"""Per-agent hybrid automata for ternary event-based consensus.

Three controller variants share the same continuous flow (the state moves
at rate u with u in {-1, 0, +1}) and differ in when they recompute the
control:

* timer-driven agents ("self-triggered", with or without trimming) fire
  when a local countdown theta hits zero, broadcast if their control was
  nonzero, and re-arm the countdown at max(|average|, epsilon);
* event-driven agents recompute the control on every reception and
  transmit when their state drifts a threshold eta away from the value
  they last broadcast.

All transitions are pure functions from one :class:`AgentState` to the
next; the discrete-event engine owns scheduling and message passing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, TYPE_CHECKING

import numpy as np

from msrsim.trimming import ValueWithSource, msr_trim

if TYPE_CHECKING:  # pragma: no cover
    from msrsim.graph import DirectedGraph

#: Absolute slack for collapsing float residue of event-time arithmetic.
TIME_RESIDUE_TOL = 1e-9


class SchedulerError(RuntimeError):
    """An engine invariant was violated (internal bug, not user error)."""


class ProtocolKind(enum.Enum):
    BASELINE_SELF_TRIGGERED = "baseline_self_triggered"
    RESILIENT_SELF_TRIGGERED = "resilient_self_triggered"
    RESILIENT_EVENT_TRIGGERED = "resilient_event_triggered"

    @property
    def is_self_triggered(self) -> bool:
        return self is not ProtocolKind.RESILIENT_EVENT_TRIGGERED

    @property
    def uses_trimming(self) -> bool:
        return self is not ProtocolKind.BASELINE_SELF_TRIGGERED


@dataclass
class AgentState:
    """One regular agent's hybrid state.

    ``theta`` is the self-triggered countdown (None for event-triggered
    agents); ``eta`` is the event-triggered transmit threshold (None for
    self-triggered agents). ``stored`` maps neighbor id to the most
    recently delivered value (last write wins). ``last_broadcast`` is the
    agent's own value as of its latest transmission.
    """

    node_id: int
    x: float
    u: int = 0
    theta: float | None = None
    eta: float | None = None
    stored: dict[int, float] = field(default_factory=dict)
    last_broadcast: float = 0.0
    last_update_time: float = 0.0


def deadzone(z: float, eps: float) -> float:
    """Zero out inputs of magnitude below eps; pass |z| >= eps through."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return z if abs(z) >= eps else 0.0


def _sign(z: float) -> int:
    return (z > 0) - (z < 0)


def weighted_average(
    agent: AgentState,
    g: "DirectedGraph",
    members: Iterable[int],
    reference: float,
) -> float:
    """sum over members of a_ij * (stored_j - reference).

    Members must be stored in-neighbors of the agent. Iteration is in
    sorted id order so the float sum is reproducible.
    """
    total = 0.0
    i = agent.node_id
    for j in sorted(members):
        if j not in agent.stored:
            raise SchedulerError(f"member {j} of agent {i} has no stored value")
        total += g.weight(i, j) * (agent.stored[j] - reference)
    return total


def _trim_members(agent: AgentState, reference: float, f: int, kind: ProtocolKind) -> set[int]:
    if not kind.uses_trimming:
        return set(agent.stored)
    cand = [ValueWithSource(j, v) for j, v in agent.stored.items()]
    return msr_trim(reference, cand, f)


def self_triggered_fire(
    agent: AgentState,
    g: "DirectedGraph",
    f: int,
    eps: float,
    kind: ProtocolKind,
    now: float,
    force_broadcast: bool = False,
) -> tuple[AgentState, float | None]:
    """Discrete update when a self-triggered agent's countdown reaches 0.

    Broadcasts the current state if the control in force was nonzero
    (``force_broadcast`` waives that gate once, at bootstrap), trims the
    stored values against the current state, recomputes the control as
    the sign of the deadzoned average, and re-arms the countdown at
    max(|average|, eps). The physical state x is untouched.
    """
    if agent.theta is None or agent.theta > TIME_RESIDUE_TOL:
        raise SchedulerError(
            f"fire called on agent {agent.node_id} with theta={agent.theta!r} at t={now}"
        )
    broadcast: float | None = None
    last_broadcast = agent.last_broadcast
    if agent.u != 0 or force_broadcast:
        broadcast = agent.x
        last_broadcast = agent.x
    members = _trim_members(agent, agent.x, f, kind)
    ave = weighted_average(agent, g, members, agent.x)
    new = replace(
        agent,
        u=_sign(deadzone(ave, eps)),
        theta=max(abs(ave), eps),
        last_broadcast=last_broadcast,
        last_update_time=now,
    )
    return new, broadcast


def event_triggered_receive(
    agent: AgentState,
    g: "DirectedGraph",
    f: int,
    eps: float,
    now: float,
) -> AgentState:
    """Discrete update when an event-triggered agent processes a delivery.

    Trims and averages the stored values against the agent's last
    broadcast value (not its current state), then sets the control and
    the transmit threshold eta = max(|average|, eps).
    """
    members = _trim_members(agent, agent.last_broadcast, f, ProtocolKind.RESILIENT_EVENT_TRIGGERED)
    ave = weighted_average(agent, g, members, agent.last_broadcast)
    return replace(
        agent,
        u=_sign(deadzone(ave, eps)),
        eta=max(abs(ave), eps),
        last_update_time=now,
    )


def event_triggered_threshold_fire(agent: AgentState, now: float) -> tuple[AgentState, float]:
    """Transmission when the drift |x - last_broadcast| reaches eta.

    Resets the broadcast anchor to the current state and returns the
    value to send. Control and threshold are unchanged.
    """
    if agent.eta is None:
        raise SchedulerError(f"threshold fire on non-event-triggered agent {agent.node_id}")
    h = abs(agent.x - agent.last_broadcast) - agent.eta
    if h < -TIME_RESIDUE_TOL:
        raise SchedulerError(
            f"threshold fire on agent {agent.node_id} with h={h} < 0 at t={now}"
        )
    new = replace(agent, last_broadcast=agent.x, last_update_time=now)
    return new, agent.x


def advance_state(agent: AgentState, dt: float) -> AgentState:
    """Flow the continuous dynamics for dt: x drifts at rate u, the
    countdown (if any) decreases at rate 1. Exact arithmetic, no
    integrator; float residue within 1e-9 of zero collapses to zero
    (event-time flooring)."""
    if dt < 0:
        raise SchedulerError(f"advance_state with negative dt={dt}")
    theta = agent.theta
    if theta is not None:
        theta = theta - dt
        if theta < 0:
            if theta < -TIME_RESIDUE_TOL:
                raise SchedulerError(
                    f"dt={dt} pushes agent {agent.node_id} countdown below zero ({theta})"
                )
            theta = 0.0
    return replace(
        agent,
        x=agent.x + agent.u * dt,
        theta=theta,
        last_update_time=agent.last_update_time + dt,
    )


def epsilon_bound(omega: float, n: int, tau: int, c: float) -> float:
    """Largest sensitivity eps for which error level c is certified.

    omega is the minimum nonzero update coefficient (min of edge weights
    and self-weights), n the node count, tau the discrete delay bound.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie in (0, 1)")
    if n < 1 or tau < 0 or c < 0:
        raise ValueError("need n >= 1, tau >= 0, c >= 0")
    p = omega ** ((tau + 1) * n - 1)
    return p * (1.0 - omega) * c / (1.0 - p)


def induced_discrete_delay_bound(n: int, tau_prime: float, eps: float) -> int:
    """Discrete delay-step bound induced by the continuous bound tau_prime.

    Discrete update instants of one agent are at least eps apart, so a
    tau_prime-long window spans fewer than n * tau_prime / eps network
    events. Reported for diagnostics and theorem-scoped validation.
    """
    if tau_prime <= 0:
        return 0
    q = n * tau_prime / eps
    k = math.ceil(q) - 1 if q == math.floor(q) else math.floor(q)
    return max(0, int(k))


def build_delay_augmented_matrix(
    g: "DirectedGraph",
    delays: Mapping[tuple[int, int], int],
    e: Mapping[int, int],
    tau: int,
) -> np.ndarray:
    """n x (tau+1)n update matrix for the delayed discrete-time form.

    Row i places its self-weight at block-0 column i and the weight a_ij
    at block l = e_i + delay_ij, column j. Every row sums to one with
    nonnegative entries, witnessing the convex-combination structure.
    Verification utility only; the engine never uses it.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    n = g.n
    w = np.zeros((n, (tau + 1) * n))
    for i in range(n):
        ei = int(e.get(i, 0))
        if ei < 0:
            raise ValueError(f"e[{i}]={ei} negative")
        w[i, i] = g.self_weight(i)
        for j in sorted(g.neighbors(i)):
            lag = ei + int(delays.get((i, j), 0))
            if lag > tau:
                raise ValueError(
                    f"delay bound violated for ({i}, {j}): e_i + tau_j^i = {lag} > tau = {tau}"
                )
            w[i, lag * n + j] = g.weight(i, j)
    return w
