"""Deterministic discrete-event execution of a consensus scenario.

Controls live in {-1, 0, +1}, so every trajectory is piecewise linear and
every event time has a closed form; the simulation never integrates
numerically. A single priority queue orders events by time with a fixed
tie-break (delivery < adversary send < timer expiry < threshold cross,
then agent id, then insertion sequence), which makes runs bit-reproducible
for a given scenario.

Agent kinematics are advanced lazily: an agent's state is rebased only at
events that touch it, so a state at time t is always reconstructed as
x_start + u * (t - t_start) in one step, with no accumulated error.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import NamedTuple

import numpy as np

from msrsim.graph import DirectedGraph
from msrsim.protocol import (
    TIME_RESIDUE_TOL,
    AgentState,
    ProtocolKind,
    SchedulerError,
    advance_state,
    event_triggered_receive,
    event_triggered_threshold_fire,
    self_triggered_fire,
)

# -- delay models -----------------------------------------------------------


@dataclass(frozen=True)
class ZeroDelay:
    pass


@dataclass(frozen=True)
class FixedDelay:
    d: float

    def __post_init__(self) -> None:
        if self.d < 0:
            raise ValueError("fixed delay must be nonnegative")


@dataclass(frozen=True)
class UniformDelay:
    """Per-message delay drawn uniformly from [0, max_delay]."""

    max_delay: float

    def __post_init__(self) -> None:
        if self.max_delay < 0:
            raise ValueError("max delay must be nonnegative")


DelayModel = ZeroDelay | FixedDelay | UniformDelay


def delay_bound(model: DelayModel) -> float:
    """Largest delay the model can realize."""
    if isinstance(model, ZeroDelay):
        return 0.0
    if isinstance(model, FixedDelay):
        return model.d
    return model.max_delay


def draw_delay(model: DelayModel, rng: np.random.Generator) -> float:
    if isinstance(model, ZeroDelay):
        return 0.0
    if isinstance(model, FixedDelay):
        return model.d
    return float(rng.uniform(0.0, model.max_delay))


# -- events -----------------------------------------------------------------


class EventKind(enum.IntEnum):
    """Queue tie-break priority at equal times (lower pops first)."""

    DELIVERY = 0
    ADVERSARY_SEND = 1
    TIMER_EXPIRY = 2
    THRESHOLD_CROSS = 3


@dataclass(frozen=True, slots=True)
class SimEvent:
    """A scheduled discrete occurrence.

    ``agent`` is the acted-on agent (the receiver for deliveries).
    ``seq`` is the global insertion order, the final tie-break.
    """

    time: float
    kind: EventKind
    agent: int
    seq: int
    frm: int | None = None
    value: float | None = None
    sent_at: float | None = None
    generation: int | None = None


class LogEntry(NamedTuple):
    time: float
    kind: str
    agent: int | None
    frm: int | None
    to: int | None
    value: float | None


@dataclass
class Counters:
    updates: int = 0
    transmissions: int = 0


# -- scenario and record ------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Fully resolved inputs for one simulation run.

    ``adversary_schedules`` maps adversary node id to its precomputed
    (time, value) transmissions; ``delay_seed`` is the seed material for
    the per-message delay stream, kept separate from the draws that
    resolved the scenario so re-running a Scenario is bit-identical.
    """

    graph: DirectedGraph
    protocol: ProtocolKind
    f: int
    eps: float
    horizon: float
    delay: DelayModel
    initial_states: dict[int, float]
    adversary_schedules: dict[int, tuple[tuple[float, float], ...]]
    initial_u: dict[int, int] = field(default_factory=dict)
    delay_seed: tuple[int, ...] = (0,)
    log_events: bool = True
    echo: dict = field(default_factory=dict)


@dataclass
class RunRecord:
    """Everything observable about one run.

    Segments are per-agent (t_start, x_start, u) pieces covering [0,
    horizon]; a segment ends where the next begins (the last ends at the
    horizon). Counters follow the event-log tallies: a regular agent's
    ``updates`` is its number of timer fires (self-triggered) or processed
    receptions (event-triggered); ``transmissions`` counts broadcasts
    once each, not per edge.
    """

    protocol: ProtocolKind
    eps: float
    horizon: float
    regular: tuple[int, ...]
    adversaries: tuple[int, ...]
    segments: dict[int, list[tuple[float, float, int]]]
    events: list[LogEntry]
    counters: dict[int, Counters]
    final_states: dict[int, float]
    quiesced: bool
    echo: dict = field(default_factory=dict)

    def initial_states(self) -> dict[int, float]:
        return {i: self.segments[i][0][1] for i in self.regular}

    def state_at(self, i: int, t: float) -> float:
        """Reconstruct regular agent i's state at time t in [0, horizon]."""
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        pieces = self.segments[i]
        lo, hi = 0, len(pieces) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if pieces[mid][0] <= t:
                lo = mid
            else:
                hi = mid - 1
        t0, x0, u = pieces[lo]
        return x0 + u * (t - t0)

    def final_spread(self) -> float:
        vals = [self.final_states[i] for i in self.regular]
        return max(vals) - min(vals)


# -- the event loop -----------------------------------------------------------


def run(sc: Scenario) -> RunRecord:
    """Simulate the scenario from t=0 to the horizon.

    Bootstrap: every regular agent broadcasts its initial state at t=0
    (self-triggered agents through their first timer fire with the
    "control nonzero" gate waived; event-triggered agents in a pre-loop
    broadcast phase, since their thresholds start at zero). Event queue
    exhaustion before the horizon is normal termination.
    """
    g = sc.graph
    if sc.horizon <= 0:
        raise ValueError("horizon must be positive")
    if sc.eps <= 0:
        raise ValueError("eps must be positive")
    adversaries = tuple(sorted(sc.adversary_schedules))
    adversary_set = set(adversaries)
    regular = tuple(i for i in range(g.n) if i not in adversary_set)
    if set(sc.initial_states) != set(regular):
        raise ValueError("initial_states must cover exactly the regular agents")
    if not regular:
        raise ValueError("need at least one regular agent")

    is_event_triggered = sc.protocol is ProtocolKind.RESILIENT_EVENT_TRIGGERED
    rng = np.random.default_rng(sc.delay_seed)
    out_sorted = {i: sorted(g.out_neighbors(i)) for i in range(g.n)}

    states: dict[int, AgentState] = {}
    for i in regular:
        x0 = float(sc.initial_states[i])
        u0 = int(sc.initial_u.get(i, 0))
        if u0 not in (-1, 0, 1):
            raise ValueError(f"initial control {u0} not ternary")
        if is_event_triggered and u0 != 0:
            raise ValueError("event-triggered agents must start with u=0 (threshold starts at 0)")
        states[i] = AgentState(
            node_id=i,
            x=x0,
            u=u0,
            theta=None if is_event_triggered else 0.0,
            eta=0.0 if is_event_triggered else None,
            stored={},
            last_broadcast=x0,
            last_update_time=0.0,
        )

    heap: list = []
    seq = itertools.count()
    events: list[LogEntry] = []
    counters: dict[int, Counters] = {i: Counters() for i in range(g.n)}
    segments: dict[int, list[tuple[float, float, int]]] = {
        i: [(0.0, states[i].x, states[i].u)] for i in regular
    }
    generation: dict[int, int] = {i: 0 for i in regular}
    fired_once: set[int] = set()
    last_fire: dict[int, float] = {}
    last_tx: dict[int, float] = {}

    def push(ev: SimEvent) -> None:
        if ev.time <= sc.horizon:
            heappush(heap, (ev.time, int(ev.kind), ev.agent, ev.seq, ev))

    def log(time: float, kind: str, agent=None, frm=None, to=None, value=None) -> None:
        if sc.log_events:
            events.append(LogEntry(time, kind, agent, frm, to, value))

    def record_u(i: int, now: float, x_now: float, u_new: int) -> None:
        segs = segments[i]
        if segs[-1][2] == u_new:
            return
        if segs[-1][0] == now:
            segs[-1] = (now, x_now, u_new)
        else:
            segs.append((now, x_now, u_new))

    def broadcast(i: int, value: float, now: float) -> None:
        prev = last_tx.get(i)
        if prev is not None and now - prev < sc.eps - TIME_RESIDUE_TOL:
            raise SchedulerError(
                f"transmissions of agent {i} only {now - prev} apart (< eps={sc.eps})"
            )
        last_tx[i] = now
        counters[i].transmissions += 1
        log(now, "transmit", agent=i, value=value)
        for k in out_sorted[i]:
            d = draw_delay(sc.delay, rng)
            push(
                SimEvent(
                    time=now + d,
                    kind=EventKind.DELIVERY,
                    agent=k,
                    seq=next(seq),
                    frm=i,
                    value=value,
                    sent_at=now,
                )
            )

    def reschedule_cross(i: int, now: float) -> None:
        t = schedule_threshold_cross(states[i], now)
        if t is not None:
            push(
                SimEvent(
                    time=t,
                    kind=EventKind.THRESHOLD_CROSS,
                    agent=i,
                    seq=next(seq),
                    generation=generation[i],
                )
            )

    # initial events: timers at zero (self-triggered), adversary grids
    if not is_event_triggered:
        for i in regular:
            push(SimEvent(time=0.0, kind=EventKind.TIMER_EXPIRY, agent=i, seq=next(seq)))
    for a in adversaries:
        for t, v in sc.adversary_schedules[a]:
            push(SimEvent(time=t, kind=EventKind.ADVERSARY_SEND, agent=a, seq=next(seq), value=v))

    # bootstrap broadcast phase for event-triggered agents: thresholds start
    # at zero, so everyone transmits at t=0 before any reception is handled
    if is_event_triggered:
        for i in regular:
            states[i], value = event_triggered_threshold_fire(states[i], 0.0)
            broadcast(i, value, 0.0)

    while heap and heap[0][0] <= sc.horizon:
        _, _, _, _, ev = heappop(heap)
        now = ev.time

        if ev.kind is EventKind.TIMER_EXPIRY:
            i = ev.agent
            st = advance_state(states[i], now - states[i].last_update_time)
            force = i not in fired_once
            fired_once.add(i)
            prev = last_fire.get(i)
            if prev is not None and now - prev < sc.eps - TIME_RESIDUE_TOL:
                raise SchedulerError(
                    f"fires of agent {i} only {now - prev} apart (< eps={sc.eps})"
                )
            last_fire[i] = now
            st, value = self_triggered_fire(
                st, g, sc.f, sc.eps, sc.protocol, now, force_broadcast=force
            )
            states[i] = st
            counters[i].updates += 1
            log(now, "fire", agent=i)
            record_u(i, now, st.x, st.u)
            if value is not None:
                broadcast(i, value, now)
            push(SimEvent(time=now + st.theta, kind=EventKind.TIMER_EXPIRY, agent=i, seq=next(seq)))

        elif ev.kind is EventKind.DELIVERY:
            i = ev.agent
            log(now, "deliver", agent=i, frm=ev.frm, to=i, value=ev.value)
            if i in adversary_set:
                continue  # adversaries ignore incoming traffic
            states[i].stored[ev.frm] = ev.value
            if is_event_triggered:
                st = advance_state(states[i], now - states[i].last_update_time)
                st = event_triggered_receive(st, g, sc.f, sc.eps, now)
                states[i] = st
                counters[i].updates += 1
                record_u(i, now, st.x, st.u)
                generation[i] += 1
                reschedule_cross(i, now)

        elif ev.kind is EventKind.ADVERSARY_SEND:
            a = ev.agent
            log(now, "adversary_send", agent=a, value=ev.value)
            counters[a].transmissions += 1
            for k in out_sorted[a]:
                d = draw_delay(sc.delay, rng)
                push(
                    SimEvent(
                        time=now + d,
                        kind=EventKind.DELIVERY,
                        agent=k,
                        seq=next(seq),
                        frm=a,
                        value=ev.value,
                        sent_at=now,
                    )
                )

        else:  # THRESHOLD_CROSS
            i = ev.agent
            if ev.generation != generation[i]:
                continue  # superseded by a later control/threshold change
            st = advance_state(states[i], now - states[i].last_update_time)
            st, value = event_triggered_threshold_fire(st, now)
            states[i] = st
            broadcast(i, value, now)
            reschedule_cross(i, now)

    final_states = {}
    for i in regular:
        st = states[i]
        final_states[i] = st.x + st.u * (sc.horizon - st.last_update_time)
    quiesced = all(states[i].u == 0 for i in regular)

    return RunRecord(
        protocol=sc.protocol,
        eps=sc.eps,
        horizon=sc.horizon,
        regular=regular,
        adversaries=adversaries,
        segments=segments,
        events=events,
        counters=counters,
        final_states=final_states,
        quiesced=quiesced,
        echo=dict(sc.echo),
    )


def schedule_threshold_cross(agent: AgentState, now: float) -> float | None:
    """Exact time when |x - last_broadcast| reaches eta under drift u.

    If the threshold already sits at or below the current error (it can
    shrink on a reception), the crossing is due immediately, whatever the
    control. Otherwise None when the control is zero (the error is
    frozen below the threshold), else the closed-form crossing time.
    """
    if agent.eta is None:
        return None
    err = agent.x - agent.last_broadcast
    if abs(err) >= agent.eta:
        return now
    if agent.u == 0:
        return None
    if agent.u * err >= 0:
        dt = (agent.eta - abs(err)) / abs(agent.u)
    else:
        # drifting toward the anchor: the error shrinks through zero first
        dt = (abs(err) + agent.eta) / abs(agent.u)
    return now + dt
