from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringheom.hierarchy import HierarchyCapacityError, HierarchySpace, enumerate_hierarchy


@settings(max_examples=25, deadline=None)
@given(K=st.integers(0, 4), N=st.integers(0, 5))
def test_size_is_binomial(K, N):
    space = enumerate_hierarchy(K, N)
    slots = 2 * (K + 1)
    assert len(space) == comb(N + slots, slots)
    assert np.all(space.indices.sum(axis=1) <= N)
    assert len({tuple(r) for r in space.indices}) == len(space)


def test_ordering_by_level():
    space = enumerate_hierarchy(1, 3)
    assert np.all(np.diff(space.level) >= 0)
    assert np.all(space.indices[0] == 0)


def test_raise_lower_maps_consistent():
    space = enumerate_hierarchy(1, 3)
    for j, idx in enumerate(space.indices):
        for s in range(space.n_slots):
            up = space.raise_map[j, s]
            if idx.sum() < 3:
                assert up >= 0
                expect = idx.copy()
                expect[s] += 1
                np.testing.assert_array_equal(space.indices[up], expect)
                assert space.lower_map[up, s] == j
            else:
                assert up == -1
        assert space.position(idx) == j


def test_ladder_matrices():
    space = enumerate_hierarchy(0, 2)
    R = space.raise_matrix(0).toarray()
    L = space.lower_matrix(0).toarray()
    j = space.position([1, 0])
    # (R y)_j = y_{j + e0}; (L y)_j = n0(j) y_{j - e0}
    assert R[j, space.position([2, 0])] == 1
    assert L[j, space.position([0, 0])] == 1
    assert L[space.position([2, 0]), j] == 2


def test_four_poles_depth_eight_size():
    assert len(enumerate_hierarchy(4, 8)) == 43758


def test_capacity_limit():
    with pytest.raises(HierarchyCapacityError):
        HierarchySpace(10, 12, max_size=1000)


def test_unknown_index_position():
    space = enumerate_hierarchy(0, 1)
    assert space.position([2, 0]) == -1
