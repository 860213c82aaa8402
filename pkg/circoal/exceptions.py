"""Exceptions for circoal"""

from typing import Sequence


class InvalidParameter(ValueError):
    """A numeric argument violates the precondition of the operation it was passed to.
    The offending parameter name is kept in `parameter`.
    """

    def __init__(self, message: str, /, parameter: str) -> None:
        enhanced_message = f"{message} [parameter={parameter}]"
        super().__init__(enhanced_message)
        self.parameter: str = parameter


class DegenerateConfiguration(ValueError):
    """Two or more points of a configuration coincide.
    Callers decide how coincident points should be merged before retrying.
    """

    def __init__(self, message: str, /, points: Sequence[float]) -> None:
        enhanced_message = f"{message} [points={list(points)}]"
        super().__init__(enhanced_message)
        self.points: list[float] = list(points)


class SeriesTruncationError(ArithmeticError):
    """A series could not certify the requested tolerance within the allowed number of terms.
    `achieved_bound` is the tail bound reached with the maximal number of terms.
    """

    def __init__(self, message: str, /, achieved_bound: float) -> None:
        enhanced_message = f"{message} [achieved_bound={achieved_bound:.3e}]"
        super().__init__(enhanced_message)
        self.achieved_bound: float = achieved_bound


class CoalescenceHorizonExceeded(RuntimeError):
    """Simulation reached the safety horizon with replicates that have not coalesced.
    Coalescence is almost surely finite, so this points at a broken configuration.
    """

    def __init__(self, message: str, /, unfinished: int) -> None:
        enhanced_message = f"{message} [unfinished={unfinished}]"
        super().__init__(enhanced_message)
        self.unfinished: int = unfinished


class ShapeMismatch(ValueError):
    """Two samplers that are compared against each other produce arrays of different shapes."""

    def __init__(self, message: str, /, shapes: Sequence[tuple[int, ...]]) -> None:
        enhanced_message = f"{message} [shapes={list(shapes)}]"
        super().__init__(enhanced_message)
        self.shapes: list[tuple[int, ...]] = list(shapes)


class ConfigurationError(Exception):
    """An experiment configuration is invalid.
    Raised before any simulation starts, so no output file is written.
    """
