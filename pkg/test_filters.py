"""Tests for finite-horizon filters and filter limits"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.models.filters import (
    FilterKind,
    FilterSpec,
    IndexSet,
    Verdict,
    evens,
    everything,
    is_square,
    squares,
    tail,
)
from src.models.lattice import OSequenceLadder
from src.services.filters import contains, density, eventually_within, filter_limit_verdict
from src.utils.errors import StructuralError


def square_indicator(k):
    return np.where(is_square(k), 1.0, 1.0 / k)


def test_is_square_near_large_squares():
    k = np.array([1, 2, 4, 99_980_001, 99_980_000, 10 ** 12, 10 ** 12 + 1], dtype=np.int64)
    assert is_square(k).tolist() == [True, False, True, True, False, True, False]


def test_density_estimates():
    assert density(evens(), 1000) == 0.5
    assert density(everything(), 10) == 1.0
    assert density(squares(), 100) == 0.1


def test_explicit_index_set_mask():
    s = IndexSet.explicit([3, 1, 3, 7])
    assert s.mask(5).tolist() == [True, False, True, False, False]


def test_indices_start_at_one():
    with pytest.raises(ValueError):
        IndexSet.explicit([0, 1])


def test_cofinite_contains_tails():
    f = FilterSpec(kind=FilterKind.COFINITE, horizon=1000)
    assert contains(f, tail(10)) is Verdict.IN_FILTER
    # exceptions past the cutoff look like infinitely many
    assert contains(f, squares().complement()) is Verdict.UNDECIDABLE


def test_density_filter_on_non_squares():
    f = FilterSpec(kind=FilterKind.DENSITY, horizon=1_000_000, density_threshold=0.999)
    assert contains(f, squares().complement()) is Verdict.IN_FILTER
    assert contains(f, evens()) is Verdict.NOT_IN_FILTER


def test_explicit_base_membership():
    f = FilterSpec(kind=FilterKind.EXPLICIT_BASE, horizon=100, base_sets=[tail(50)])
    assert contains(f, tail(20)) is Verdict.IN_FILTER
    assert contains(f, evens()) is Verdict.NOT_IN_FILTER


def test_explicit_base_must_be_closed_under_intersection():
    with pytest.raises(ValueError):
        FilterSpec(kind=FilterKind.EXPLICIT_BASE, horizon=100, base_sets=[evens(), tail(50)])


def test_explicit_base_rejects_empty_set():
    with pytest.raises((ValueError, StructuralError)):
        FilterSpec(kind=FilterKind.EXPLICIT_BASE, horizon=10, base_sets=[tail(50)])


def test_statistical_convergence_of_square_indicator():
    """Density filter passes every rung, the cofinite filter fails every rung below 1"""
    ladder = OSequenceLadder.from_values([0.1, 0.01, 0.001])
    density_filter = FilterSpec(kind=FilterKind.DENSITY, horizon=1_000_000, density_threshold=0.999)
    report = filter_limit_verdict(square_indicator, 0.0, ladder, density_filter)
    assert report.passed
    assert all(r.verdict is Verdict.IN_FILTER for r in report.rungs)

    cofinite = FilterSpec(kind=FilterKind.COFINITE, horizon=1_000_000)
    report = filter_limit_verdict(square_indicator, 0.0, ladder, cofinite)
    assert not report.passed
    assert all(r.verdict is not Verdict.IN_FILTER for r in report.rungs)
    assert report.to_json_dict()["pass"] is False


def test_inverse_sequence_converges_under_cofinite():
    ladder = OSequenceLadder.from_values([0.1, 0.01, 0.001])
    f = FilterSpec(kind=FilterKind.COFINITE, horizon=100_000)
    assert filter_limit_verdict(lambda k: 1.0 / k, 0.0, ladder, f).passed
    assert eventually_within(lambda k: 1.0 / k, 0.0, 0.001, 100_000, 1000)


def test_lattice_valued_terms_use_unit_norm():
    ladder = OSequenceLadder.from_values([0.1, 0.01])
    f = FilterSpec(kind=FilterKind.COFINITE, horizon=10_000)

    def pairs(k):
        return np.stack([1.0 / k, -2.0 / k], axis=1)

    report = filter_limit_verdict(pairs, 0.0, ladder, f)
    assert report.passed
    assert report.rungs[-1].set_size == 10_000 - 199


@given(st.integers(min_value=1, max_value=5000))
@settings(max_examples=30, deadline=None)
def test_cofinite_membership_implies_density_membership(start):
    """Cofinite is coarser than density at the same horizon"""
    horizon = 20_000
    s = tail(start)
    cofinite = FilterSpec(kind=FilterKind.COFINITE, horizon=horizon)
    dense = FilterSpec(kind=FilterKind.DENSITY, horizon=horizon, density_threshold=0.999)
    if contains(cofinite, s) is Verdict.IN_FILTER:
        assert contains(dense, s) is Verdict.IN_FILTER


@given(st.integers(min_value=1, max_value=200), st.integers(min_value=1, max_value=200))
@settings(max_examples=30, deadline=None)
def test_filters_are_upward_closed(a, b):
    small, large = tail(max(a, b)), tail(min(a, b))
    f = FilterSpec(kind=FilterKind.COFINITE, horizon=1000)
    if contains(f, small) is Verdict.IN_FILTER:
        assert contains(f, large) is Verdict.IN_FILTER
