from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from step_parts.hungarian import matching_weight, max_weight_matching


def brute_force(w: np.ndarray) -> float:
    n, m = w.shape
    if n <= m:
        return max(sum(w[i, p[i]] for i in range(n)) for p in itertools.permutations(range(m), n))
    return brute_force(w.T)


def test_identity_and_permutation():
    w = np.diag([5, 3, 7])
    assert max_weight_matching(w) == [(0, 0), (1, 1), (2, 2)]
    perm = [2, 0, 1]
    assert max_weight_matching(w[:, perm]) == [(0, 1), (1, 2), (2, 0)]


def test_rectangular_sides():
    w = np.array([[1, 9, 2], [8, 1, 1]])
    assert max_weight_matching(w) == [(0, 1), (1, 0)]
    assert max_weight_matching(w.T) == [(0, 1), (1, 0)]


def test_empty_and_bad_shape():
    assert max_weight_matching(np.zeros((0, 3))) == []
    with pytest.raises(ValueError):
        max_weight_matching(np.zeros(4))


def test_zero_matrix_full_matching():
    pairs = max_weight_matching(np.zeros((3, 5)))
    assert len(pairs) == 3 and len({c for _, c in pairs}) == 3


def test_random_against_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(300):
        n, m = rng.integers(1, 7, size=2)
        w = rng.integers(0, 50, size=(n, m)).astype(float)
        pairs = max_weight_matching(w)
        assert len(pairs) == min(n, m)
        assert len({r for r, _ in pairs}) == len(pairs) == len({c for _, c in pairs})
        assert matching_weight(w, pairs) == brute_force(w)


@settings(max_examples=150, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
              elements=st.floats(0, 1e6, allow_nan=False)))
def test_property_optimal(w):
    pairs = max_weight_matching(w)
    assert matching_weight(w, pairs) == pytest.approx(brute_force(w), rel=1e-12, abs=1e-6)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        max_weight_matching(np.array([[1.0, np.nan]]))
