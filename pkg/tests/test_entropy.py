import math

import numpy as np
import pytest

from credalkit.credal import InputValidationError, IntervalSystem, intersection_probability
from credalkit.entropy import (
    UncertaintyMeasure,
    binary_interval_uncertainty,
    decompose_uncertainty,
    grid_oracle_entropy_bounds,
    lower_entropy,
    min_entropy_bound,
    shannon_entropy,
    upper_entropy,
)

# direct evaluation of -sum p ln p for the frozen hand cases
H_08_02 = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2))
H_05_04_01 = -(0.5 * math.log(0.5) + 0.4 * math.log(0.4) + 0.1 * math.log(0.1))


class TestShannonEntropy:
    def test_degenerate(self):
        assert shannon_entropy((1.0, 0.0)) == 0.0

    def test_uniform_two(self):
        assert shannon_entropy((0.5, 0.5)) == pytest.approx(math.log(2), abs=1e-12)

    def test_skewed(self):
        assert shannon_entropy((0.8, 0.2)) == pytest.approx(H_08_02, abs=1e-12)
        assert shannon_entropy((0.8, 0.2)) == pytest.approx(0.500402, abs=1e-6)


class TestUpperEntropy:
    def test_wide_two_class(self):
        assert upper_entropy(IntervalSystem((0.2, 0.2), (0.8, 0.8))) == pytest.approx(
            math.log(2), abs=1e-9
        )

    def test_point_set(self):
        assert upper_entropy(IntervalSystem((0.8, 0.2), (0.8, 0.2))) == pytest.approx(
            H_08_02, abs=1e-9
        )

    def test_three_class_uniform_feasible(self):
        system = IntervalSystem((0.1, 0.1, 0.1), (0.5, 0.5, 0.5))
        assert upper_entropy(system) == pytest.approx(math.log(3), abs=1e-9)

    def test_invalid_rejected(self):
        with pytest.raises(InputValidationError):
            upper_entropy(IntervalSystem((0.6, 0.6), (0.7, 0.7)))


class TestLowerEntropy:
    def test_wide_two_class(self):
        assert lower_entropy(IntervalSystem((0.2, 0.2), (0.8, 0.8))) == pytest.approx(
            H_08_02, abs=1e-9
        )

    def test_point_set(self):
        assert lower_entropy(IntervalSystem((0.5, 0.5), (0.5, 0.5))) == pytest.approx(
            math.log(2), abs=1e-9
        )

    def test_three_class_vertex(self):
        system = IntervalSystem((0.1, 0.1, 0.1), (0.5, 0.5, 0.5))
        assert lower_entropy(system) == pytest.approx(H_05_04_01, abs=1e-9)
        assert lower_entropy(system) == pytest.approx(0.943348, abs=1e-6)

    def test_exact_flag_for_small_class_counts(self):
        _, _, exact = min_entropy_bound(IntervalSystem((0.2, 0.2), (0.8, 0.8)))
        assert exact

    def test_heuristic_flag_above_cutoff(self):
        count = 14
        lower = np.zeros(count)
        upper = np.ones(count)
        value, _, exact = min_entropy_bound(IntervalSystem(lower, upper))
        assert not exact
        assert value == pytest.approx(0.0, abs=1e-9)  # all mass on one class


class TestDecomposeUncertainty:
    def test_point_set(self):
        triple = decompose_uncertainty(IntervalSystem((0.5, 0.5), (0.5, 0.5)))
        assert triple.total == pytest.approx(math.log(2), abs=1e-9)
        assert triple.aleatoric == pytest.approx(math.log(2), abs=1e-9)
        assert triple.epistemic == pytest.approx(0.0, abs=1e-9)
        assert triple.measure is UncertaintyMeasure.CREDAL_ENTROPY

    def test_wide_two_class(self):
        triple = decompose_uncertainty(IntervalSystem((0.2, 0.2), (0.8, 0.8)))
        assert triple.total == pytest.approx(0.693147, abs=1e-6)
        assert triple.aleatoric == pytest.approx(0.500402, abs=1e-6)
        assert triple.epistemic == pytest.approx(0.192745, abs=1e-6)

    def test_vacuous(self):
        triple = decompose_uncertainty(IntervalSystem((0.0, 0.0), (1.0, 1.0)))
        assert triple.total == pytest.approx(math.log(2), abs=1e-9)
        assert triple.aleatoric == pytest.approx(0.0, abs=1e-9)
        assert triple.epistemic == pytest.approx(math.log(2), abs=1e-9)


class TestBinaryIntervalUncertainty:
    def test_hand_case(self):
        eu, tu = binary_interval_uncertainty(0.3, 0.7)
        assert eu == pytest.approx(0.4, abs=1e-12)
        assert tu == pytest.approx(0.7, abs=1e-12)

    def test_point_interval(self):
        eu, tu = binary_interval_uncertainty(0.5, 0.5)
        assert eu == 0.0
        assert tu == 0.5

    def test_vacuous_interval(self):
        eu, tu = binary_interval_uncertainty(0.0, 1.0)
        assert eu == 1.0
        assert tu == 1.0

    def test_inverted_bounds_rejected(self):
        with pytest.raises(InputValidationError):
            binary_interval_uncertainty(0.7, 0.3)


class TestGridOracle:
    def test_wide_two_class(self):
        lo, hi = grid_oracle_entropy_bounds(IntervalSystem((0.2, 0.2), (0.8, 0.8)), 0.001)
        assert hi == pytest.approx(math.log(2), abs=2e-3)
        assert lo == pytest.approx(H_08_02, abs=2e-3)

    def test_point_set_exact(self):
        lo, hi = grid_oracle_entropy_bounds(IntervalSystem((0.8, 0.2), (0.8, 0.2)), 0.01)
        assert lo == hi == pytest.approx(H_08_02, abs=1e-12)

    def test_vacuous_two_class(self):
        lo, hi = grid_oracle_entropy_bounds(IntervalSystem((0.0, 0.0), (1.0, 1.0)), 0.001)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(math.log(2), abs=1e-9)

    def test_class_count_limit(self):
        with pytest.raises(InputValidationError):
            grid_oracle_entropy_bounds(
                IntervalSystem(np.full(5, 0.1), np.full(5, 0.5)), 0.01
            )

    def test_step_range(self):
        with pytest.raises(InputValidationError):
            grid_oracle_entropy_bounds(IntervalSystem((0.2, 0.2), (0.8, 0.8)), 0.5)


def _random_system(rng, classes):
    rows = rng.dirichlet(np.ones(classes), size=rng.integers(2, 7))
    lower = rows.min(axis=0) * rng.uniform(0.0, 1.0, size=classes)
    widen = rng.uniform(size=classes) < 0.5
    upper = rows.max(axis=0) + (1.0 - rows.max(axis=0)) * rng.uniform(
        0.0, 1.0, size=classes
    ) * widen
    return IntervalSystem(lower, upper)


def test_sandwich_property():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        system = _random_system(rng, int(rng.integers(2, 5)))
        p_star, _ = intersection_probability(system)
        mid = shannon_entropy(p_star)
        assert lower_entropy(system) <= mid + 1e-9
        assert mid <= upper_entropy(system) + 1e-9


def test_oracle_agreement():
    rng = np.random.default_rng(7)
    step = 0.005
    for classes in (2, 3):
        tol = 2.0 * step * classes * abs(math.log(step))
        for _ in range(50):
            system = _random_system(rng, classes)
            grid_lo, grid_hi = grid_oracle_entropy_bounds(system, step)
            assert abs(upper_entropy(system) - grid_hi) <= tol
            assert abs(lower_entropy(system) - grid_lo) <= tol


def test_monotonicity_under_nesting():
    rng = np.random.default_rng(11)
    for _ in range(300):
        classes = int(rng.integers(2, 6))
        inner = _random_system(rng, classes)
        lower = inner.lower * rng.uniform(0.0, 1.0, size=classes)
        upper = inner.upper + (1.0 - inner.upper) * rng.uniform(0.0, 1.0, size=classes)
        outer = IntervalSystem(lower, upper)
        t_inner = decompose_uncertainty(inner)
        t_outer = decompose_uncertainty(outer)
        assert t_outer.epistemic >= t_inner.epistemic - 1e-9
        assert t_outer.total >= t_inner.total - 1e-9
        assert t_outer.aleatoric <= t_inner.aleatoric + 1e-9


def test_point_sets_have_zero_epistemic():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = rng.dirichlet(np.ones(int(rng.integers(2, 8))))
        triple = decompose_uncertainty(IntervalSystem(p, p))
        assert triple.epistemic == 0.0


def test_upper_entropy_bounded_by_log_class_count():
    rng = np.random.default_rng(19)
    for _ in range(500):
        classes = int(rng.integers(2, 9))
        system = _random_system(rng, classes)
        hi = upper_entropy(system)
        lo = lower_entropy(system)
        assert 0.0 <= lo <= hi <= math.log(classes) + 1e-9
