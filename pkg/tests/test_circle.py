"""Tests for circle arithmetic"""

import numpy as np
import pytest

from circoal.circle import arc_length, circular_sort, in_arc, in_arcs, offset
from circoal.exceptions import DegenerateConfiguration, InvalidParameter
from circoal.models import CirclePoint


@pytest.mark.parametrize(
    "u,v,expected",
    [
        (0.2, 0.7, 0.5),  # direct subtraction
        (0.7, 0.2, 0.5),  # wraps around: 1 - 0.7 + 0.2
        (0.3, 0.3, 0.0),  # empty arc
        (CirclePoint(1.25), 0.5, 0.25),  # representatives are reduced
    ],
)
def test_arc_length(u, v, expected):
    """Anticlockwise arc lengths"""
    assert arc_length(u, v) == pytest.approx(expected)


@pytest.mark.parametrize(
    "e,u,v,expected",
    [
        (0.5, 0.2, 0.7, True),
        (0.1, 0.7, 0.2, True),  # wrap-around arc
        (0.2, 0.2, 0.2, False),  # [u, u) is empty
        (0.2, 0.2, 0.7, True),  # closed at the start
        (0.7, 0.2, 0.7, False),  # open at the end
        (0.8, 0.2, 0.7, False),
    ],
)
def test_in_arc(e, u, v, expected):
    """Membership in half-open arcs"""
    assert in_arc(e, u, v) is expected


@pytest.mark.parametrize(
    "points,expected_points,expected_gaps",
    [
        ([0.9, 0.1, 0.5], [0.1, 0.5, 0.9], [0.4, 0.4, 0.2]),
        ([0.25], [0.25], [1.0]),  # a single point owns the circle
        ([0.0, 0.5], [0.0, 0.5], [0.5, 0.5]),
        ([-0.25, 0.5], [0.5, 0.75], [0.25, 0.75]),  # -0.25 is 0.75 on the circle
    ],
)
def test_circular_sort(points, expected_points, expected_gaps):
    """Sorted points and the gaps between consecutive ones"""
    sorted_points, gaps = circular_sort(points)

    assert [p.position for p in sorted_points] == pytest.approx(expected_points)
    assert list(gaps.gaps) == pytest.approx(expected_gaps)


def test_circular_sort_rejects_coincident_points():
    """Merging duplicates is left to the caller"""
    with pytest.raises(DegenerateConfiguration) as err:
        circular_sort([0.1, 0.4, 1.1])

    assert err.value.points == pytest.approx([0.1, 0.1, 0.4])


def test_circular_sort_rejects_empty_configuration():
    """There is nothing to sort"""
    with pytest.raises(InvalidParameter):
        circular_sort([])


def test_offset_and_in_arcs():
    """Vectorised distances; length 1 is the whole circle and length 0 the empty arc"""
    e = np.array([0.1, 0.5, 0.95])

    assert offset(e, 0.9) == pytest.approx([0.2, 0.6, 0.05])
    assert in_arcs(e, 0.9, 0.3).tolist() == [True, False, True]
    assert in_arcs(e, 0.9, 1.0).all()
    assert not in_arcs(e, 0.1, 0.0).any()
