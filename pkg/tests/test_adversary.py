import math

import numpy as np
import pytest

from msrsim.adversary import (
    AdversarySpec,
    RandomControl,
    SineWave,
    adversary_value,
    schedule_adversary,
)


def sine_spec(amplitude=1.0, period=1.0, offset=0.0, interval=0.1):
    return AdversarySpec(
        agent=0, behavior=SineWave(amplitude, period, offset), send_interval=interval
    )


class TestSineWave:
    def test_phase_zero(self):
        assert adversary_value(sine_spec(), 0.0) == pytest.approx(0.0)

    def test_quarter_period_peak(self):
        assert adversary_value(sine_spec(), 0.25) == pytest.approx(1.0)

    def test_offset_and_amplitude(self):
        spec = sine_spec(amplitude=2.0, period=4.0, offset=0.5)
        assert adversary_value(spec, 1.0) == pytest.approx(2.5)

    def test_defaults_weave_through_unit_band(self):
        spec = AdversarySpec(agent=0, behavior=SineWave(), send_interval=0.1)
        values = [adversary_value(spec, t) for t in np.linspace(0, 10, 101)]
        assert min(values) == pytest.approx(0.0, abs=1e-9)
        assert max(values) == pytest.approx(1.0, abs=1e-9)


class TestRandomControl:
    def test_integration_step(self):
        spec = AdversarySpec(agent=0, behavior=RandomControl(-10, 10), send_interval=1.0)
        sched = schedule_adversary(spec, 3.0, np.random.default_rng(5), initial_value=2.0)
        # replay the same stream: each value advances by the drawn rate times dt
        rng = np.random.default_rng(5)
        value = 2.0
        for k, (t, v) in enumerate(sched):
            assert t == pytest.approx(k * 1.0)
            assert v == pytest.approx(value)
            value += float(rng.uniform(-10, 10)) * 1.0

    def test_value_replay_matches_schedule(self):
        spec = AdversarySpec(agent=0, behavior=RandomControl(-2, 2), send_interval=0.5)
        sched = schedule_adversary(spec, 2.0, np.random.default_rng(9), initial_value=0.3)
        v = adversary_value(spec, 1.5, np.random.default_rng(9), initial_value=0.3)
        assert v == pytest.approx(dict((round(t, 9), x) for t, x in sched)[1.5])

    def test_needs_rng(self):
        spec = AdversarySpec(agent=0, behavior=RandomControl(), send_interval=1.0)
        with pytest.raises(ValueError):
            adversary_value(spec, 1.0)

    def test_lo_le_hi(self):
        with pytest.raises(ValueError):
            RandomControl(3.0, -3.0)


class TestSchedule:
    def test_zero_horizon_single_send(self):
        sched = schedule_adversary(sine_spec(interval=0.25), 0.0)
        assert len(sched) == 1 and sched[0][0] == 0.0

    def test_arithmetic_grid(self):
        sched = schedule_adversary(sine_spec(interval=0.1), 0.35)
        assert [t for t, _ in sched] == pytest.approx([0.0, 0.1, 0.2, 0.3])

    def test_grid_count_at_demo_horizon(self):
        # interval eps=0.1 over t in [0, 20]: 201 sends, float drift tolerated
        sched = schedule_adversary(sine_spec(interval=0.1), 20.0)
        assert len(sched) == 201
        assert sched[-1][0] <= 20.0

    def test_interval_positive(self):
        with pytest.raises(ValueError):
            AdversarySpec(agent=0, behavior=SineWave(), send_interval=0.0)
