import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calshift.binning import BinningScheme, assign_bin, binning_kernel, build_equal_mass_bins
from calshift.errors import OutOfRange, TooFewSamples


def midpoint_oracle(scores, b):
    """Sort-and-midpoint construction written out with scalar arithmetic."""
    s = sorted(scores)
    n = len(s)
    edges = [0.0]
    for i in range(1, b):
        r = math.ceil(i * n / b)  # 1-based rank
        edges.append((s[r - 1] + s[r]) / 2)
    edges.append(1.0)
    return edges


def assign_oracle(edges, x):
    for i in range(len(edges) - 1):
        if x <= edges[i + 1]:
            return i
    return len(edges) - 2


def test_two_bins_example():
    np.testing.assert_allclose(build_equal_mass_bins([0.1, 0.2, 0.3, 0.4], 2).boundaries, [0, 0.25, 1])


def test_single_bin():
    np.testing.assert_array_equal(build_equal_mass_bins([0.3, 0.9, 0.1], 1).boundaries, [0, 1])


def test_tied_scores_collapse():
    scheme = build_equal_mass_bins([0.5] * 4, 2)
    np.testing.assert_array_equal(scheme.boundaries, [0, 0.5, 1])
    assert list(scheme.assign([0.5] * 4)) == [0, 0, 0, 0]


def test_too_few_samples():
    with pytest.raises(TooFewSamples):
        build_equal_mass_bins([0.1, 0.2], 3)


@given(
    st.lists(st.floats(0, 1), min_size=1, max_size=200),
    st.integers(1, 20),
)
@settings(max_examples=100, deadline=None)
def test_boundaries_match_oracle(scores, b):
    if len(scores) < b:
        return
    got = build_equal_mass_bins(scores, b).boundaries
    np.testing.assert_allclose(got, midpoint_oracle(scores, b), rtol=0, atol=1e-15)


@given(st.integers(1, 30), st.integers(1, 20), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_equal_occupancy_distinct_scores(mult, b, seed):
    n = mult * b
    scores = np.random.default_rng(seed).permutation(n) / n + 0.5 / n
    scheme = build_equal_mass_bins(scores, b)
    counts = np.bincount(scheme.assign(scores), minlength=b)
    assert np.all(counts == n // b)


@given(st.integers(2, 200), st.integers(1, 20), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_occupancy_within_one(n, b, seed):
    if n < b:
        return
    scores = np.random.default_rng(seed).random(n)
    counts = np.bincount(build_equal_mass_bins(scores, b).assign(scores), minlength=b)
    assert counts.max() - counts.min() <= 1


@pytest.mark.parametrize("s,expected", [(0.2, 0), (0.25, 0), (0.3, 1), (0.0, 0), (1.0, 1)])
def test_assign_bin(s, expected):
    assert assign_bin(BinningScheme([0, 0.25, 1]), s) == expected


def test_assign_out_of_range():
    with pytest.raises(OutOfRange):
        assign_bin(BinningScheme([0, 0.25, 1]), 1.5)
    with pytest.raises(OutOfRange):
        binning_kernel(BinningScheme([0, 0.25, 1]), -0.1, 0.5)


def test_kernel_examples():
    scheme = BinningScheme([0, 0.25, 1])
    assert binning_kernel(scheme, 0.1, 0.2) == 1
    assert binning_kernel(scheme, 0.1, 0.9) == 0
    assert binning_kernel(scheme, 0.7, 0.7) == 1


edges_st = st.lists(st.floats(0, 1), min_size=0, max_size=10).map(
    lambda xs: BinningScheme([0.0] + sorted(xs) + [1.0])
)


@given(edges_st, st.lists(st.floats(0, 1), min_size=1, max_size=12))
@settings(max_examples=100, deadline=None)
def test_kernel_is_equivalence_relation(scheme, pts):
    K = np.array([[binning_kernel(scheme, a, b) for b in pts] for a in pts])
    assert np.all(np.diag(K) == 1)
    assert np.array_equal(K, K.T)
    # transitivity: K[i,j] & K[j,l] implies K[i,l]
    assert np.all((K @ K > 0) <= (K > 0))


@given(edges_st, st.lists(st.floats(0, 1), min_size=2, max_size=50))
@settings(max_examples=100, deadline=None)
def test_assign_monotone_and_matches_oracle(scheme, pts):
    pts = sorted(pts)
    got = scheme.assign(pts)
    assert np.all(np.diff(got) >= 0)
    assert list(got) == [assign_oracle(list(scheme.boundaries), x) for x in pts]
