import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credalkit.credal import (
    CredalPrediction,
    InputValidationError,
    IntervalSystem,
    as_prob_vector,
    check_validity,
    intersection_probability,
    predict_class,
    reconstruct_intervals,
    wrap_ensemble,
)


class TestWrapEnsemble:
    def test_two_members(self):
        system = wrap_ensemble([(0.6, 0.4), (0.8, 0.2)])
        np.testing.assert_allclose(system.lower, [0.6, 0.2])
        np.testing.assert_allclose(system.upper, [0.8, 0.4])

    def test_single_member_identity(self):
        system = wrap_ensemble([(0.5, 0.5)])
        np.testing.assert_allclose(system.lower, [0.5, 0.5])
        np.testing.assert_allclose(system.upper, [0.5, 0.5])

    def test_three_members_three_classes(self):
        system = wrap_ensemble([(0.5, 0.3, 0.2), (0.4, 0.4, 0.2), (0.6, 0.2, 0.2)])
        np.testing.assert_allclose(system.lower, [0.4, 0.2, 0.2])
        np.testing.assert_allclose(system.upper, [0.6, 0.4, 0.2])

    def test_ragged_rows_rejected(self):
        with pytest.raises(InputValidationError):
            wrap_ensemble([(0.6, 0.4), (0.5, 0.3, 0.2)])

    def test_non_normalized_rows_rejected(self):
        with pytest.raises(InputValidationError):
            wrap_ensemble([(0.6, 0.3), (0.8, 0.2)])


class TestIntersectionProbability:
    def test_hand_case_two_classes(self):
        p_star, beta = intersection_probability(IntervalSystem((0.6, 0.2), (0.8, 0.4)))
        assert beta == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(p_star, [0.7, 0.3])

    def test_degenerate_point_set(self):
        p_star, beta = intersection_probability(IntervalSystem((0.5, 0.5), (0.5, 0.5)))
        assert beta == 0.5
        np.testing.assert_allclose(p_star, [0.5, 0.5])

    def test_hand_case_three_classes(self):
        p_star, beta = intersection_probability(
            IntervalSystem((0.4, 0.2, 0.2), (0.6, 0.4, 0.2))
        )
        assert beta == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(p_star, [0.5, 0.3, 0.2])

    def test_invalid_system_rejected(self):
        with pytest.raises(InputValidationError):
            intersection_probability(IntervalSystem((0.6, 0.6), (0.7, 0.7)))


class TestReconstructIntervals:
    def test_round_trips_wrap_example(self):
        pred = CredalPrediction(p_star=(0.7, 0.3), delta=(0.2, 0.2), beta=0.5)
        system = reconstruct_intervals(pred)
        np.testing.assert_allclose(system.lower, [0.6, 0.2])
        np.testing.assert_allclose(system.upper, [0.8, 0.4])

    def test_clipping_path(self):
        pred = CredalPrediction(p_star=(0.1, 0.9), delta=(0.5, 0.0), beta=1.0)
        system = reconstruct_intervals(pred)
        np.testing.assert_allclose(system.lower, [0.0, 0.9])
        np.testing.assert_allclose(system.upper, [0.1, 0.9])

    def test_zero_width(self):
        pred = CredalPrediction(p_star=(0.3, 0.7), delta=(0.0, 0.0), beta=0.2)
        system = reconstruct_intervals(pred)
        np.testing.assert_allclose(system.lower, pred.p_star)
        np.testing.assert_allclose(system.upper, pred.p_star)


class TestCheckValidity:
    def test_valid(self):
        ok, diagnostics = check_validity(IntervalSystem((0.6, 0.2), (0.8, 0.4)))
        assert ok and diagnostics == []

    def test_lower_sum_exceeds_one(self):
        ok, diagnostics = check_validity(IntervalSystem((0.6, 0.6), (0.7, 0.7)))
        assert not ok
        assert any("sum(lower)" in d for d in diagnostics)

    def test_degenerate_point_set(self):
        ok, _ = check_validity(IntervalSystem((1.0, 0.0), (1.0, 0.0)))
        assert ok


class TestPredictClass:
    @pytest.mark.parametrize(
        "p, expected",
        [((0.7, 0.3), 0), ((0.5, 0.5), 0), ((0.2, 0.3, 0.5), 2)],
    )
    def test_argmax_with_low_index_ties(self, p, expected):
        assert predict_class(p) == expected

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = rng.dirichlet(np.ones(rng.integers(2, 8)))
            scaled = as_prob_vector(p * 3.0 / (p * 3.0).sum())
            assert predict_class(p) == predict_class(scaled)


class TestProbVector:
    def test_renormalizes_within_tolerance(self):
        p = as_prob_vector((0.5, 0.5 + 5e-10))
        assert p.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_beyond_tolerance(self):
        with pytest.raises(InputValidationError):
            as_prob_vector((0.5, 0.6))

    def test_rejects_single_class(self):
        with pytest.raises(InputValidationError):
            as_prob_vector((1.0,))

    def test_rejects_non_finite(self):
        with pytest.raises(InputValidationError):
            as_prob_vector((np.nan, 1.0))


_member_matrix = st.integers(1, 10).flatmap(
    lambda m: st.integers(2, 10).flatmap(
        lambda c: st.lists(
            st.lists(st.floats(1e-3, 1e3), min_size=c, max_size=c),
            min_size=m,
            max_size=m,
        )
    )
)


def _normalize_rows(rows):
    mat = np.asarray(rows, dtype=np.float64)
    return mat / mat.sum(axis=1, keepdims=True)


@given(_member_matrix)
@settings(max_examples=200, deadline=None)
def test_wrap_intersection_properties(rows):
    mat = _normalize_rows(rows)
    system = wrap_ensemble(mat)
    ok, diagnostics = check_validity(system)
    assert ok, diagnostics
    p_star, beta = intersection_probability(system)
    assert 0.0 <= beta <= 1.0
    assert abs(p_star.sum() - 1.0) <= 1e-9
    assert np.all(p_star >= system.lower - 1e-12)
    assert np.all(p_star <= system.upper + 1e-12)


@given(_member_matrix)
@settings(max_examples=200, deadline=None)
def test_round_trip_reconstruction(rows):
    mat = _normalize_rows(rows)
    system = wrap_ensemble(mat)
    p_star, beta = intersection_probability(system)
    rebuilt = reconstruct_intervals(
        CredalPrediction(p_star=p_star, delta=system.width, beta=beta)
    )
    np.testing.assert_allclose(rebuilt.lower, system.lower, atol=1e-12, rtol=0)
    np.testing.assert_allclose(rebuilt.upper, system.upper, atol=1e-12, rtol=0)


@given(
    st.integers(2, 8).flatmap(
        lambda c: st.tuples(
            st.lists(st.floats(1e-3, 1e3), min_size=c, max_size=c),
            st.lists(st.floats(0.0, 1.0), min_size=c, max_size=c),
            st.floats(0.0, 1.0),
        )
    )
)
@settings(max_examples=200, deadline=None)
def test_containment_under_clipping(args):
    raw_p, delta, beta = args
    p_star = _normalize_rows([raw_p])[0]
    pred = CredalPrediction(p_star=p_star, delta=delta, beta=beta)
    system = reconstruct_intervals(pred)
    ok, diagnostics = check_validity(system)
    assert ok, diagnostics
    assert np.all(system.lower <= pred.p_star + 1e-12)
    assert np.all(system.upper >= pred.p_star - 1e-12)
    # post-clip width never exceeds the predicted interval length
    width = system.width
    assert np.all(width <= pred.delta + 1e-12)
    unclipped = (pred.p_star - pred.beta * pred.delta >= 0.0) & (
        pred.p_star + (1.0 - pred.beta) * pred.delta <= 1.0
    )
    np.testing.assert_allclose(width[unclipped], pred.delta[unclipped], atol=1e-12, rtol=0)


def test_width_equality_iff_no_clipping():
    pred = CredalPrediction(p_star=(0.1, 0.9), delta=(0.5, 0.0), beta=1.0)
    system = reconstruct_intervals(pred)
    # class 0 clips at zero, so its width strictly shrinks
    assert system.width[0] < pred.delta[0]
    assert system.width[1] == pred.delta[1]


def test_beta_clamped_against_float_noise():
    lower = np.array([0.3, 0.7 - 1e-16])
    upper = np.array([0.3, 0.7])
    p_star, beta = intersection_probability(IntervalSystem(lower, upper))
    assert 0.0 <= beta <= 1.0
    assert abs(p_star.sum() - 1.0) <= 1e-9
