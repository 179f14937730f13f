import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import interval_class
from spreadcast.quantizer import (
    NEUTRAL,
    SpreadQuantizer,
    class_bounds,
    class_direction,
    direction_array,
    quantize,
)

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


@pytest.mark.parametrize(
    "spread, cls",
    [(-15.0, 0), (0.0, 2), (5.0, 3), (-5.0, 2), (-5.000001, 1), (12.0, 4), (-12.0, 1), (-12.000001, 0),
     (4.999999, 2)],
)  # fmt: skip
def test_boundaries_left_closed(spread, cls):
    # -5.0 opens the neutral band [-5, 5)
    assert quantize(spread) == cls


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(ValueError):
        quantize(bad)


@pytest.mark.parametrize("c, direction", [(0, -1), (1, -1), (2, 0), (3, 1), (4, 1)])
def test_direction(c, direction):
    assert class_direction(c) == direction


def test_direction_array_matches_scalar():
    np.testing.assert_array_equal(direction_array([0, 1, 2, 3, 4]), [class_direction(c) for c in range(5)])


def test_bounds():
    assert class_bounds(0) == (-math.inf, -12.0)
    assert class_bounds(2) == (-5.0, 5.0)
    assert class_bounds(3) == (5.0, 12.0)
    assert class_bounds(4) == (12.0, math.inf)


def test_neutral_class_unique():
    assert [c for c in range(5) if class_direction(c) == 0] == [NEUTRAL]


@pytest.mark.parametrize("c", [-1, 5, 2.0])
def test_bad_class(c):
    with pytest.raises(ValueError):
        class_direction(c)


def test_dense_grid_against_interval_scan():
    grid = np.concatenate([np.arange(-40.0, 40.0, 0.01), [-12.0, -5.0, 5.0, 12.0]])
    q = SpreadQuantizer()
    vec = q.quantize_array(grid)
    for x, v in zip(grid, vec):
        assert v == q.quantize(float(x)) == interval_class(float(x))


@given(finite)
def test_exactly_one_interval_contains(x):
    q = SpreadQuantizer()
    owners = [c for c in range(5) if q.bounds(c)[0] <= x < q.bounds(c)[1]]
    assert owners == [q.quantize(x)]


@given(finite, finite)
def test_monotone(a, b):
    lo, hi = sorted((a, b))
    assert quantize(lo) <= quantize(hi)


def test_custom_thresholds():
    q = SpreadQuantizer((-20, -10, 10, 20))
    assert q.quantize(-15) == 1 and q.quantize(15) == 3


@pytest.mark.parametrize("t", [(1, 2, 3), (-5, -12, 5, 12), (0, 0, 1, 2)])
def test_invalid_thresholds(t):
    with pytest.raises(ValueError):
        SpreadQuantizer(t)
