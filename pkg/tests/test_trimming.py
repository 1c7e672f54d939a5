import pytest
from hypothesis import given, settings, strategies as st

from msrsim.trimming import ValueWithSource, msr_trim


def vs(pairs):
    return [ValueWithSource(s, v) for s, v in pairs]


class TestExamples:
    def test_one_high_one_low_removed(self):
        cand = vs([(0, 0.9), (1, 0.8), (2, 0.2), (3, 0.1), (4, 0.5)])
        assert msr_trim(0.5, cand, 1) == {1, 2, 4}

    def test_f_zero_keeps_all(self):
        cand = vs([(0, 0.9), (1, 0.1), (2, 0.5)])
        assert msr_trim(0.5, cand, 0) == {0, 1, 2}

    def test_all_below_removes_only_low_side(self):
        cand = vs([(0, 0.5), (1, 0.6)])
        assert msr_trim(1.0, cand, 1) == {1}

    def test_empty_candidates(self):
        assert msr_trim(0.0, [], 2) == set()

    def test_equal_to_own_never_removed(self):
        cand = vs([(0, 0.5), (1, 0.5), (2, 0.5)])
        assert msr_trim(0.5, cand, 3) == {0, 1, 2}

    def test_tie_breaks_by_higher_source(self):
        # two equal extremes above: the higher id counts as more extreme
        cand = vs([(0, 0.9), (1, 0.9), (2, 0.4)])
        assert msr_trim(0.3, cand, 1) == {0, 2}
        cand = vs([(0, 0.1), (5, 0.1), (2, 0.4)])
        assert msr_trim(0.5, cand, 1) == {0, 2}

    def test_duplicate_sources_rejected(self):
        with pytest.raises(ValueError):
            msr_trim(0.0, vs([(1, 0.1), (1, 0.2)]), 1)

    def test_negative_f_rejected(self):
        with pytest.raises(ValueError):
            msr_trim(0.0, [], -1)


candidates_strategy = st.lists(
    st.tuples(st.integers(0, 30), st.floats(-5, 5, allow_nan=False)),
    max_size=12,
    unique_by=lambda p: p[0],
)


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(st.floats(-5, 5, allow_nan=False), candidates_strategy, st.integers(0, 4))
    def test_at_most_2f_removed(self, own, pairs, f):
        survivors = msr_trim(own, vs(pairs), f)
        assert len(pairs) - len(survivors) <= 2 * f

    @settings(max_examples=300, deadline=None)
    @given(st.floats(-5, 5, allow_nan=False), candidates_strategy, st.integers(0, 4))
    def test_sandwich(self, own, pairs, f):
        # removed-above values dominate surviving above-values; mirror below
        values = dict(pairs)
        survivors = msr_trim(own, vs(pairs), f)
        removed = set(values) - survivors
        for r in removed:
            if values[r] > own:
                for s in survivors:
                    if values[s] > own:
                        assert values[r] >= values[s]
            else:
                assert values[r] < own
                for s in survivors:
                    if values[s] < own:
                        assert values[r] <= values[s]

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-5, 5, allow_nan=False),
        candidates_strategy,
        st.integers(0, 4),
        st.randoms(use_true_random=False),
    )
    def test_order_insensitive(self, own, pairs, f, rnd):
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        assert msr_trim(own, vs(pairs), f) == msr_trim(own, vs(shuffled), f)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-5, 5, allow_nan=False), st.integers(1, 8), st.integers(0, 3))
    def test_all_equal_untouched(self, own, k, f):
        cand = vs([(i, own) for i in range(k)])
        assert msr_trim(own, cand, f) == set(range(k))
