"""Closed-form laws of coalescence and fixation times on the circle.

All series are truncated with a certified remainder: terms are bounded by
scale * exp(-rate * (n + shift)^2) and the ratio of consecutive bounds decreases in n,
so the tail after term N is at most the next bound divided by one minus the next ratio.
"""

import math
from typing import Sequence, Union

import numpy as np

from circoal.constants import MEAN_FIXATION, VARIANCE_FIXATION
from circoal.exceptions import InvalidParameter, SeriesTruncationError
from circoal.models import GapVector, SeriesControl

PI2 = math.pi**2
# above this time the direct theta series converges faster than its Jacobi transform
JACOBI_SWITCH = 1.0 / math.pi

Gaps = Union[GapVector, Sequence[float]]


def _gap_vector(gaps: Gaps) -> GapVector:
    return gaps if isinstance(gaps, GapVector) else GapVector(tuple(gaps))


def _require_positive(value: float, name: str) -> None:
    if not value > 0:
        raise InvalidParameter(f"{name} must be positive, got {value}", parameter=name)


def _require_gap(g: float) -> None:
    if not 0.0 < g < 1.0:
        raise InvalidParameter(f"gap must lie in (0, 1), got {g}", parameter="g")


def _require_pair_or_more(gap_vector: GapVector) -> None:
    if gap_vector.m < 2:
        raise InvalidParameter(
            "T_m needs at least two particles", parameter="gaps"
        )


def series_length(
    rate: float, ctrl: SeriesControl, scale: float = 1.0, shift: float = 0.0
) -> int:
    """Number of terms n = 1..N needed so that sum_{n>N} scale*exp(-rate*(n+shift)^2) < abs_tol.

    Raises SeriesTruncationError with the achieved tail bound if N would exceed max_terms.
    """
    bound = math.inf
    for n in range(1, ctrl.max_terms + 1):
        x = n + 1 + shift
        next_term = scale * math.exp(-rate * x * x)
        ratio_gap = -math.expm1(-rate * (2.0 * x + 1.0))
        bound = next_term / ratio_gap if ratio_gap > 0 else math.inf
        if next_term < ctrl.abs_tol and bound < ctrl.abs_tol:
            return n
    raise SeriesTruncationError(
        f"Series with rate {rate:.3e} needs more than {ctrl.max_terms} terms",
        achieved_bound=bound,
    )


def laplace_gap_win(lam: float, g: float) -> float:
    """Laplace transform P[exp(-lam S)] of the time S at which an arc of length g takes the
    whole circle, sinh(g sqrt(lam)) / sinh(sqrt(lam)); on {S = inf} the integrand is 0.

    Evaluated in exponential form so large lam does not overflow.
    """
    _require_positive(lam, "lambda")
    _require_gap(g)
    s = math.sqrt(lam)
    return math.exp((g - 1.0) * s) * (-math.expm1(-2.0 * g * s)) / (-math.expm1(-2.0 * s))


def laplace_Tm(lam: float, gaps: Gaps) -> float:  # pylint: disable=invalid-name
    """Laplace transform of the full-coalescence time of m >= 2 particles.

    The events {arc i takes the circle} are disjoint, so the transform is the sum over arcs.
    """
    gap_vector = _gap_vector(gaps)
    _require_pair_or_more(gap_vector)
    return math.fsum(laplace_gap_win(lam, g) for g in gap_vector.gaps)


def mean_Tm(gaps: Gaps) -> float:  # pylint: disable=invalid-name
    """Mean full-coalescence time (1 - sum g_i^3) / 6.

    Obtained by differentiating laplace_Tm at 0; for two particles this is the
    gambler's-ruin time g(1-g)/2 of a variance-2 difference on (0, 1). The maximum,
    (1 - 1/m^2)/6, is attained exactly at equal spacing.
    """
    gap_vector = _gap_vector(gaps)
    _require_pair_or_more(gap_vector)
    return (1.0 - math.fsum(g**3 for g in gap_vector.gaps)) / 6.0


def mean_Tm_printed_prefactor(gaps: Gaps) -> float:  # pylint: disable=invalid-name
    """The (1 - sum g_i^3) / 4 variant of the mean; only used to show it is excluded by data."""
    return 1.5 * mean_Tm(gaps)


def cdf_gap_win(t: float, g: float, ctrl: SeriesControl = SeriesControl()) -> float:
    """P{S <= t} for an arc of length g: g + (2/pi) sum (-1)^n/n sin(n pi g) exp(-n^2 pi^2 t).

    Tends to g as t grows (the arc wins with probability g) and to 0 as t -> 0.
    """
    _require_positive(t, "t")
    _require_gap(g)
    n_terms = series_length(PI2 * t, ctrl, scale=2.0 / math.pi)
    n = np.arange(1, n_terms + 1, dtype=float)
    terms = (-1.0) ** n / n * np.sin(n * math.pi * g) * np.exp(-n * n * PI2 * t)
    value = g + 2.0 / math.pi * math.fsum(terms.tolist())
    return min(max(value, 0.0), g)


def cdf_Tm(  # pylint: disable=invalid-name
    t: float, gaps: Gaps, ctrl: SeriesControl = SeriesControl()
) -> float:
    """P{T_m <= t} as the sum over arcs of P{S_i <= t}."""
    gap_vector = _gap_vector(gaps)
    _require_pair_or_more(gap_vector)
    value = math.fsum(cdf_gap_win(t, g, ctrl) for g in gap_vector.gaps)
    return min(max(value, 0.0), 1.0)


def laplace_fixation(lam: float) -> float:
    """Laplace transform sqrt(lam) / sinh(sqrt(lam)) of the fixation time for diffuse types."""
    _require_positive(lam, "lambda")
    s = math.sqrt(lam)
    return 2.0 * s * math.exp(-s) / (-math.expm1(-2.0 * s))


def laplace_conditioned_exit(lam: float, x: float) -> float:
    """Laplace transform of the exit time of a variance-2 Brownian motion from (0, 1) started
    at x, conditioned on leaving through 1: sinh(x sqrt(lam)) / (x sinh(sqrt(lam))).

    Tends to laplace_fixation(lam) as x -> 0+.
    """
    return laplace_gap_win(lam, x) / x


def _alternating_theta(t: float, ctrl: SeriesControl) -> float:
    """sum over all integers n of (-1)^n exp(-n^2 pi^2 t)"""
    if t >= JACOBI_SWITCH:
        n_terms = series_length(PI2 * t, ctrl, scale=2.0)
        n = np.arange(1, n_terms + 1, dtype=float)
        return 1.0 + 2.0 * math.fsum(((-1.0) ** n * np.exp(-n * n * PI2 * t)).tolist())
    # Jacobi transform: (pi t)^(-1/2) sum_k exp(-(k - 1/2)^2 / t)
    prefactor = 1.0 / math.sqrt(math.pi * t)
    n_terms = series_length(1.0 / t, ctrl, scale=2.0 * prefactor, shift=-0.5)
    k = np.arange(1, n_terms + 1, dtype=float)
    return 2.0 * prefactor * math.fsum(np.exp(-((k - 0.5) ** 2) / t).tolist())


def _plain_theta(t: float, ctrl: SeriesControl) -> float:
    """sum over all integers n of exp(-n^2 pi^2 t)"""
    if t >= JACOBI_SWITCH:
        n_terms = series_length(PI2 * t, ctrl, scale=2.0)
        n = np.arange(1, n_terms + 1, dtype=float)
        return 1.0 + 2.0 * math.fsum(np.exp(-n * n * PI2 * t).tolist())
    prefactor = 1.0 / math.sqrt(math.pi * t)
    n_terms = series_length(1.0 / t, ctrl, scale=2.0 * prefactor)
    k = np.arange(1, n_terms + 1, dtype=float)
    return prefactor * (1.0 + 2.0 * math.fsum(np.exp(-k * k / t).tolist()))


def cdf_fixation(t: float, ctrl: SeriesControl = SeriesControl()) -> float:
    """P{T <= t} = 1 + 2 sum (-1)^n exp(-n^2 pi^2 t) for diffuse initial types.

    This is also the law of the time at which the Arratia flow image becomes a single point.
    """
    _require_positive(t, "t")
    return min(max(_alternating_theta(t, ctrl), 0.0), 1.0)


def cdf_fixation_lower_bound(t: float, ctrl: SeriesControl = SeriesControl()) -> float:
    """Lower bound on P{T <= t} valid for every initial condition.

    Same series as cdf_fixation: diffuse initial types are the slowest to fix.
    """
    return cdf_fixation(t, ctrl)


def mean_cluster_count(t: float, ctrl: SeriesControl = SeriesControl()) -> float:
    """Expected number of distinct images of the Arratia flow at time t,
    1 + 2 sum exp(-n^2 pi^2 t)."""
    _require_positive(t, "t")
    return max(_plain_theta(t, ctrl), 1.0)


def mean_fixation() -> float:
    """Mean fixation time 1/6, from sqrt(l)/sinh(sqrt(l)) = 1 - l/6 + ..."""
    return MEAN_FIXATION


def variance_fixation() -> float:
    """Variance of the fixation time, 7/180 - 1/36 = 1/90."""
    return VARIANCE_FIXATION


def cdf_on_grid(cdf, ts: Sequence[float]) -> np.ndarray:
    """Evaluate a scalar CDF on many points; non-positive times map to 0."""
    return np.array([cdf(float(t)) if t > 0 else 0.0 for t in ts])
