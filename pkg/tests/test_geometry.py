"""Rounding mode and bounding-box arithmetic."""

import pytest

from bronchometer.geometry import BoundingBox, round_half_up


@pytest.mark.parametrize(
    ("value", "expected"),
    [
        (0.5, 1),
        (1.5, 2),
        (2.5, 3),
        (2.4, 2),
        (2.6, 3),
        (-0.4, 0),
        (-0.5, 0),
        (-1.5, -1),
        (3.0, 3),
    ],
)
def test_round_half_up(value, expected):
    assert round_half_up(value) == expected


def test_box_rejects_inverted_corners():
    with pytest.raises(ValueError):
        BoundingBox(5, 0, 4, 10)
    with pytest.raises(ValueError):
        BoundingBox(0, 10, 4, 9)


def test_box_extent_arithmetic():
    # Extent product, not pixel count: a 33x26 pixel box measures 32*25.
    box = BoundingBox(213, 227, 245, 252)
    assert box.width == 32
    assert box.height == 25
    assert box.area == 800
    assert box.as_tuple() == (213, 227, 245, 252)


def test_overlaps_is_inclusive_on_edges():
    a = BoundingBox(0, 0, 10, 10)
    assert a.overlaps(BoundingBox(10, 10, 20, 20))  # shared corner pixel
    assert a.overlaps(BoundingBox(5, 5, 7, 7))  # containment
    assert not a.overlaps(BoundingBox(11, 0, 20, 10))
    assert not a.overlaps(BoundingBox(0, 11, 10, 20))


def test_overlaps_is_symmetric():
    a = BoundingBox(0, 0, 10, 10)
    b = BoundingBox(8, 8, 20, 20)
    assert a.overlaps(b) == b.overlaps(a)


def test_contains_point_edges():
    box = BoundingBox(2, 3, 5, 6)
    assert box.contains_point(2, 3)
    assert box.contains_point(5, 6)
    assert not box.contains_point(1, 3)
    assert not box.contains_point(5, 7)
