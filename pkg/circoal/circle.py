"""
Arithmetic and ordering on the circle of circumference 1, identified with [0, 1).
"""

from typing import Sequence, Union

import numpy as np

from circoal.exceptions import DegenerateConfiguration, InvalidParameter
from circoal.models import CirclePoint, GapVector, Position, reduce_position

ArrayLike = Union[float, np.ndarray]


def _as_float(point: Position) -> float:
    return point.position if isinstance(point, CirclePoint) else reduce_position(point)


def arc_length(u: Position, v: Position) -> float:
    """Length of the anticlockwise arc [u, v); zero when u == v."""
    return reduce_position(_as_float(v) - _as_float(u))


def in_arc(e: Position, u: Position, v: Position) -> bool:
    """Check if e lies in the half-open anticlockwise arc [u, v).
    The arc [u, u) is empty.
    """
    return arc_length(u, e) < arc_length(u, v)


def offset(e: ArrayLike, u: ArrayLike) -> np.ndarray:
    """Anticlockwise distance from u to e, elementwise, in [0, 1)."""
    distance = np.mod(np.asarray(e, dtype=float) - np.asarray(u, dtype=float), 1.0)
    return np.where(distance >= 1.0, 0.0, distance)


def in_arcs(e: ArrayLike, u: ArrayLike, length: ArrayLike) -> np.ndarray:
    """Elementwise membership of e in the arc of the given length starting at u.

    Lengths are unwrapped, so length 1 is the whole circle and length 0 the empty arc.
    """
    return offset(e, u) < np.asarray(length, dtype=float)


def circular_sort(points: Sequence[Position]) -> tuple[tuple[CirclePoint, ...], GapVector]:
    """Sort points anticlockwise from the smallest representative and return their gaps.

    Gap i is the arc from point i to point i + 1, indices mod m; a single point owns the circle.
    Raises DegenerateConfiguration if two points coincide, since merging is up to the caller.
    """
    if not points:
        raise InvalidParameter("Cannot sort an empty configuration", parameter="points")
    positions = np.sort(np.array([_as_float(point) for point in points]))
    if np.any(np.diff(positions) == 0.0):
        raise DegenerateConfiguration(
            "Configuration contains coincident points", points=positions.tolist()
        )
    if positions.size == 1:
        gaps: tuple[float, ...] = (1.0,)
    else:
        gaps = tuple(np.diff(positions).tolist()) + (
            float(positions[0] + 1.0 - positions[-1]),
        )
    return tuple(CirclePoint(p) for p in positions.tolist()), GapVector(gaps)
