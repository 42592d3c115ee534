import numpy as np
import pytest
from hypothesis import given, strategies as st

from speclocal.boxes import BBox, BoxError, boxes_to_array, round_half_up


def test_rejects_degenerate_extent():
    with pytest.raises(BoxError):
        BBox(0, 0, 0, 5)
    with pytest.raises(BoxError):
        BBox(0, 0, 5, 0.5)


def test_corners_roundtrip():
    b = BBox(3, 4, 10, 6)
    assert b.corners() == (3, 4, 13, 10)
    assert BBox.from_corners(*b.corners()) == b
    assert b.area == 60


def test_round_half_up_goes_up_on_ties():
    assert round_half_up(2.5) == 3
    assert round_half_up(-0.5) == 0
    assert round_half_up(1.4999) == 1


def test_clamp_inside_and_outside():
    assert BBox(-5, -5, 20, 20).clamp(10, 10) == BBox(0, 0, 10, 10)
    with pytest.raises(BoxError):
        BBox(50, 50, 5, 5).clamp(10, 10)


def test_boxes_to_array_accepts_mixed_inputs():
    arr = boxes_to_array([BBox(1, 2, 3, 4), (5, 6, 7, 8)])
    assert arr.tolist() == [[1, 2, 3, 4], [5, 6, 7, 8]]


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 40), st.integers(1, 40),
       st.integers(1, 60), st.integers(1, 60))
def test_clamped_box_stays_in_bounds(x, y, w, h, W, H):
    try:
        c = BBox(x, y, w, h).clamp(W, H)
    except BoxError:
        assert x >= W or y >= H or x + w <= 0 or y + h <= 0
        return
    assert 0 <= c.x and 0 <= c.y and c.x2 <= W and c.y2 <= H
    assert c.w >= 1 and c.h >= 1
