import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msrsim.graph import DirectedGraph, assign_uniform_weights, complete_graph, cycle_graph
from msrsim.protocol import (
    AgentState,
    ProtocolKind,
    SchedulerError,
    advance_state,
    build_delay_augmented_matrix,
    deadzone,
    epsilon_bound,
    event_triggered_receive,
    event_triggered_threshold_fire,
    induced_discrete_delay_bound,
    self_triggered_fire,
    weighted_average,
)


class TestDeadzone:
    def test_below_threshold_zeroed(self):
        assert deadzone(0.05, 0.1) == 0.0

    def test_boundary_passes(self):
        assert deadzone(0.1, 0.1) == 0.1
        assert deadzone(-0.1, 0.1) == -0.1

    def test_zero(self):
        assert deadzone(0.0, 0.3) == 0.0

    def test_eps_must_be_positive(self):
        with pytest.raises(ValueError):
            deadzone(1.0, 0.0)


def two_node_graph():
    return assign_uniform_weights(complete_graph(2))


class TestWeightedAverage:
    def test_empty_members(self):
        g = two_node_graph()
        st0 = AgentState(node_id=0, x=0.3, stored={1: 1.0})
        assert weighted_average(st0, g, set(), 0.3) == 0.0

    def test_single_member(self):
        g = two_node_graph()
        st0 = AgentState(node_id=0, x=0.0, stored={1: 1.0})
        assert weighted_average(st0, g, {1}, 0.0) == pytest.approx(0.5)

    def test_symmetric_cancellation(self):
        g = assign_uniform_weights(complete_graph(5))  # a_ij = 0.2
        st0 = AgentState(node_id=0, x=0.5, stored={1: 0.9, 2: 0.1})
        assert weighted_average(st0, g, {1, 2}, 0.5) == pytest.approx(0.0)

    def test_missing_store_is_internal_error(self):
        g = two_node_graph()
        st0 = AgentState(node_id=0, x=0.0, stored={})
        with pytest.raises(SchedulerError):
            weighted_average(st0, g, {1}, 0.0)


class TestSelfTriggeredFire:
    def make(self, x, stored, u=0):
        return AgentState(node_id=0, x=x, u=u, theta=0.0, stored=dict(stored), last_broadcast=x)

    def test_consensus_fixed_point(self):
        g = two_node_graph()
        st0 = self.make(0.7, {1: 0.7})
        new, tx = self_triggered_fire(st0, g, 0, 0.1, ProtocolKind.RESILIENT_SELF_TRIGGERED, 1.0)
        assert new.u == 0 and new.theta == pytest.approx(0.1)
        assert tx is None  # u was zero, gate closed
        assert new.x == st0.x

    def test_small_average_inside_deadzone(self):
        # single neighbor, a=0.5, stored offset 0.1 -> ave = 0.05
        g = two_node_graph()
        st0 = self.make(0.0, {1: 0.1})
        new, _ = self_triggered_fire(st0, g, 0, 0.1, ProtocolKind.RESILIENT_SELF_TRIGGERED, 0.0)
        assert new.u == 0
        assert new.theta == pytest.approx(0.1)  # max(|0.05|, 0.1)

    def test_large_average_drives_motion(self):
        g = two_node_graph()
        st0 = self.make(0.0, {1: 0.6})
        new, _ = self_triggered_fire(st0, g, 0, 0.1, ProtocolKind.RESILIENT_SELF_TRIGGERED, 0.0)
        assert new.u == 1
        assert new.theta == pytest.approx(0.3)

    def test_broadcast_gate_uses_old_control(self):
        g = two_node_graph()
        st0 = self.make(0.4, {1: 0.4}, u=1)
        new, tx = self_triggered_fire(st0, g, 0, 0.1, ProtocolKind.RESILIENT_SELF_TRIGGERED, 2.0)
        assert tx == pytest.approx(0.4)
        assert new.last_broadcast == pytest.approx(0.4)
        assert new.u == 0

    def test_force_broadcast_waives_gate(self):
        g = two_node_graph()
        st0 = self.make(0.4, {1: 0.4}, u=0)
        _, tx = self_triggered_fire(
            st0, g, 0, 0.1, ProtocolKind.RESILIENT_SELF_TRIGGERED, 0.0, force_broadcast=True
        )
        assert tx == pytest.approx(0.4)

    def test_trimming_applied_for_resilient_kind(self):
        g = assign_uniform_weights(complete_graph(4))
        st0 = AgentState(node_id=0, x=0.0, theta=0.0, stored={1: 5.0, 2: 0.0, 3: 0.0})
        resilient, _ = self_triggered_fire(st0, g, 1, 0.1, ProtocolKind.RESILIENT_SELF_TRIGGERED, 0.0)
        assert resilient.u == 0  # outlier trimmed, remaining average is 0
        st0 = AgentState(node_id=0, x=0.0, theta=0.0, stored={1: 5.0, 2: 0.0, 3: 0.0})
        baseline, _ = self_triggered_fire(st0, g, 1, 0.1, ProtocolKind.BASELINE_SELF_TRIGGERED, 0.0)
        assert baseline.u == 1  # baseline ignores F and chases the outlier

    def test_fire_with_armed_timer_is_scheduler_bug(self):
        g = two_node_graph()
        st0 = AgentState(node_id=0, x=0.0, theta=0.5, stored={})
        with pytest.raises(SchedulerError):
            self_triggered_fire(st0, g, 0, 0.1, ProtocolKind.RESILIENT_SELF_TRIGGERED, 0.0)


class TestEventTriggeredReceive:
    def test_all_equal_quiesces(self):
        g = two_node_graph()
        st0 = AgentState(node_id=0, x=0.5, eta=0.3, stored={1: 0.5}, last_broadcast=0.5)
        new = event_triggered_receive(st0, g, 0, 0.1, 1.0)
        assert new.u == 0 and new.eta == pytest.approx(0.1)

    def test_single_neighbor_pull(self):
        g = two_node_graph()
        st0 = AgentState(node_id=0, x=0.0, eta=0.0, stored={1: 1.0}, last_broadcast=0.0)
        new = event_triggered_receive(st0, g, 0, 0.1, 0.0)
        assert new.u == 1 and new.eta == pytest.approx(0.5)

    def test_negative_average(self):
        g = two_node_graph()
        st0 = AgentState(node_id=0, x=0.0, eta=0.0, stored={1: -0.4}, last_broadcast=0.0)
        new = event_triggered_receive(st0, g, 0, 0.1, 0.0)
        assert new.u == -1 and new.eta == pytest.approx(0.2)

    def test_reference_is_last_broadcast_not_state(self):
        g = two_node_graph()
        st0 = AgentState(node_id=0, x=0.45, eta=0.5, stored={1: 0.5}, last_broadcast=0.0)
        new = event_triggered_receive(st0, g, 0, 0.1, 1.0)
        # average vs last_broadcast 0.0 gives 0.25, not vs x=0.45 (0.025)
        assert new.u == 1 and new.eta == pytest.approx(0.25)


class TestThresholdFire:
    def test_rebases_anchor_and_returns_value(self):
        st0 = AgentState(node_id=0, x=0.2, u=1, eta=0.2, last_broadcast=0.0)
        new, tx = event_triggered_threshold_fire(st0, 0.2)
        assert tx == pytest.approx(0.2)
        assert new.last_broadcast == pytest.approx(0.2)
        assert new.u == 1 and new.eta == pytest.approx(0.2)  # unchanged

    def test_downward_drift(self):
        st0 = AgentState(node_id=0, x=0.9, u=-1, eta=0.1, last_broadcast=1.0)
        new, tx = event_triggered_threshold_fire(st0, 5.0)
        assert tx == pytest.approx(0.9)

    def test_premature_fire_is_scheduler_bug(self):
        st0 = AgentState(node_id=0, x=0.05, u=1, eta=0.2, last_broadcast=0.0)
        with pytest.raises(SchedulerError):
            event_triggered_threshold_fire(st0, 1.0)


class TestAdvanceState:
    def test_zero_control_freezes_x(self):
        st0 = AgentState(node_id=0, x=0.5, u=0, theta=1.0)
        assert advance_state(st0, 0.7).x == 0.5

    def test_unit_rate_flow(self):
        st0 = AgentState(node_id=0, x=0.5, u=1, theta=1.0)
        new = advance_state(st0, 0.3)
        assert new.x == pytest.approx(0.8)
        assert new.theta == pytest.approx(0.7)

    def test_countdown_reaches_zero(self):
        st0 = AgentState(node_id=0, x=0.0, u=0, theta=0.4)
        assert advance_state(st0, 0.4).theta == 0.0

    def test_overrun_is_scheduler_bug(self):
        st0 = AgentState(node_id=0, x=0.0, u=0, theta=0.4)
        with pytest.raises(SchedulerError):
            advance_state(st0, 0.5)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-10, 10, allow_nan=False),
        st.sampled_from([-1, 0, 1]),
        st.floats(0, 5, allow_nan=False),
        st.floats(0, 5, allow_nan=False),
    )
    def test_flow_is_additive(self, x, u, d1, d2):
        st0 = AgentState(node_id=0, x=x, u=u, theta=None)
        a = advance_state(advance_state(st0, d1), d2)
        b = advance_state(st0, d1 + d2)
        assert a.x == pytest.approx(b.x, abs=1e-12)


class TestEpsilonBound:
    def test_two_node_half(self):
        assert epsilon_bound(0.5, 2, 0, 1.0) == pytest.approx(0.5)

    def test_zero_error_level(self):
        assert epsilon_bound(0.3, 4, 1, 0.0) == 0.0

    def test_k5_value(self):
        assert epsilon_bound(0.2, 5, 0, 1.0) == pytest.approx(0.0012820512820512821, rel=1e-12)

    def test_omega_domain(self):
        with pytest.raises(ValueError):
            epsilon_bound(1.0, 3, 0, 1.0)
        with pytest.raises(ValueError):
            epsilon_bound(0.0, 3, 0, 1.0)

    def test_monotone_in_c(self):
        assert epsilon_bound(0.3, 4, 0, 2.0) == pytest.approx(2 * epsilon_bound(0.3, 4, 0, 1.0))


class TestInducedDelayBound:
    def test_zero_tau_prime(self):
        assert induced_discrete_delay_bound(8, 0.0, 0.1) == 0

    def test_strictly_below_ratio(self):
        # bound is the largest integer strictly below n * tau' / eps
        assert induced_discrete_delay_bound(2, 0.1, 0.1) == 1
        assert induced_discrete_delay_bound(8, 0.1, 0.1) == 7
        assert induced_discrete_delay_bound(3, 0.05, 0.1) == 1


class TestDelayAugmentedMatrix:
    def test_two_node_no_delay(self):
        g = assign_uniform_weights(complete_graph(2))
        w = build_delay_augmented_matrix(g, {}, {}, 0)
        assert w.shape == (2, 2)
        assert np.allclose(w, [[0.5, 0.5], [0.5, 0.5]])

    def test_isolated_node_row(self):
        g = assign_uniform_weights(DirectedGraph(n=2, edges=frozenset({(0, 1), (1, 0)})))
        g2 = assign_uniform_weights(DirectedGraph(n=3, edges=frozenset({(0, 1), (1, 0)})))
        w = build_delay_augmented_matrix(g2, {}, {}, 1)
        assert w.shape == (3, 6)
        assert w[2, 2] == 1.0 and w[2].sum() == 1.0

    def test_delay_places_block(self):
        g = assign_uniform_weights(complete_graph(2))
        w = build_delay_augmented_matrix(g, {(0, 1): 1}, {0: 1, 1: 0}, 2)
        assert w.shape == (2, 6)
        assert w[0, 0] == pytest.approx(0.5)  # self weight in block 0
        assert w[0, 2 * 2 + 1] == pytest.approx(0.5)  # a_01 lands in block e_0 + tau = 2
        assert w[0].sum() == pytest.approx(1.0)

    def test_bound_violation_rejected(self):
        g = assign_uniform_weights(complete_graph(2))
        with pytest.raises(ValueError):
            build_delay_augmented_matrix(g, {(0, 1): 2}, {}, 1)

    def test_row_stochastic_exhaustive_small(self):
        # every delay assignment on graphs with n <= 4, tau <= 2 yields rows
        # summing to one with nonzero entries >= omega
        graphs = [
            assign_uniform_weights(complete_graph(2)),
            assign_uniform_weights(cycle_graph(3)),
            assign_uniform_weights(complete_graph(4)),
        ]
        for g in graphs:
            omega = g.omega
            in_edges = sorted((i, j) for i in range(g.n) for j in g.neighbors(i))
            for tau in (0, 1, 2):
                for evals in itertools.product(range(tau + 1), repeat=g.n):
                    e = dict(enumerate(evals))
                    slack = [tau - evals[i] for i, _ in in_edges]
                    for dvals in itertools.product(*[range(s + 1) for s in slack]):
                        delays = {edge: d for edge, d in zip(in_edges, dvals)}
                        w = build_delay_augmented_matrix(g, delays, e, tau)
                        assert np.allclose(w.sum(axis=1), 1.0)
                        assert (w >= 0).all()
                        nz = w[w > 0]
                        assert (nz >= omega - 1e-12).all()
                    if g.n == 4 and tau == 2:
                        break  # K4 with tau=2 explodes combinatorially; sample one e-vector
