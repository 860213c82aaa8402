"""Tests for the stepping-stone model"""

import math

import numpy as np
import pytest

from circoal.analytics import cdf_fixation, mean_cluster_count
from circoal.exceptions import InvalidParameter
from circoal.harness import compare_summaries, ks_compare, lower_bound_report
from circoal.models import (
    AtomicCondition,
    DiffuseCondition,
    EmpiricalSummary,
    EngineConfig,
    GridConfig,
    StepFunction,
    Thresholds,
)
from circoal.stepping_stone import (
    canonicalize,
    entrance,
    evaluate,
    evaluate_many,
    evolve,
    expected_kappa_mean,
    fixation_samples,
    kappa_cdf,
    label_sampler,
    moment_duality_check,
    prevailing_interval,
    run_fixation,
)
from circoal.streams import stream

SMOKE_CFG = EngineConfig(dt=1e-3, rng_seed=29)
SMOKE_GRID = GridConfig(grid_size=64, dt=1e-3)
TWO_PIECES = StepFunction((0.2, 0.6), (0.3, 0.7))


@pytest.mark.parametrize(
    "step,expected",
    [
        # first and last pieces share a label across the wrap
        (
            StepFunction((0.0, 0.25, 0.5, 0.75), (0.1, 0.1, 0.2, 0.1)),
            StepFunction((0.5, 0.75), (0.2, 0.1)),
        ),
        (StepFunction((0.1, 0.4), (0.5, 0.5)), StepFunction.constant(0.5)),
        (TWO_PIECES, TWO_PIECES),
    ],
)
def test_canonicalize(step, expected):
    """Adjacent pieces with equal labels are merged"""
    assert canonicalize(step) == expected


@pytest.mark.parametrize(
    "e,expected",
    [
        (0.2, 0.3),  # right-continuous at a piece start
        (0.4, 0.3),
        (0.6, 0.7),
        (0.9, 0.7),
        (0.1, 0.7),  # before the first start: the last piece wraps around
        (1.3, 0.3),
    ],
)
def test_evaluate(e, expected):
    """Label of the piece containing e"""
    assert evaluate(TWO_PIECES, e) == expected


def test_evaluate_constant_and_many():
    """A constant function has its label everywhere"""
    assert evaluate(StepFunction.constant(0.4), 0.77) == 0.4
    assert evaluate_many(TWO_PIECES, np.array([[0.1, 0.5], [0.7, 0.2]])).tolist() == [
        [0.7, 0.3],
        [0.7, 0.3],
    ]


def test_evolve_single_piece():
    """Boundary motion is invisible with a single piece"""
    constant = StepFunction.constant(0.2)

    assert evolve(constant, 1.0, SMOKE_CFG, stream(1)) == constant
    assert evolve(TWO_PIECES, 0.0, SMOKE_CFG, stream(1)) == TWO_PIECES
    with pytest.raises(InvalidParameter):
        evolve(TWO_PIECES, -1.0, SMOKE_CFG, stream(1))


def test_evolve_keeps_labels():
    """Labels are never created, and pieces disappear as their boundaries meet"""
    evolved = evolve(TWO_PIECES, 0.05, SMOKE_CFG, stream(2))
    collapsed = evolve(TWO_PIECES, 5.0, EngineConfig(dt=1e-2), stream(3))

    assert set(evolved.labels) <= {0.3, 0.7}
    assert collapsed.n_pieces == 1
    assert collapsed.labels[0] in (0.3, 0.7)


def test_label_samplers():
    """Registered diffuse laws and their surviving-type moments"""
    uniform = DiffuseCondition()
    scaled = DiffuseCondition(sampler="site_scaled")
    sites = np.linspace(0.0, 0.99, 100)
    draws = label_sampler(scaled)(sites, stream(4))

    assert draws.shape == sites.shape
    assert (draws <= (1.0 + sites) / 2.0).all()
    assert expected_kappa_mean(uniform) == 0.5
    assert expected_kappa_mean(scaled) == 0.375
    with pytest.raises(InvalidParameter):
        label_sampler(DiffuseCondition(sampler="beta"))


@pytest.mark.parametrize(
    "sampler,k,expected",
    [
        ("uniform", 0.3, 0.3),
        ("uniform", 1.2, 1.0),
        ("site_scaled", 0.25, 0.5 * math.log(2.0)),
        ("site_scaled", 0.5, math.log(2.0)),  # both branches meet here
        ("site_scaled", 0.75, 0.5 - 1.5 * math.log(0.75)),
        ("site_scaled", 1.0, 1.0),
    ],
)
def test_kappa_cdf(sampler, k, expected):
    """Law of the surviving type"""
    assert kappa_cdf(DiffuseCondition(sampler=sampler), k) == pytest.approx(expected)


def test_entrance_of_a_step_function():
    """For a tiny eps the entrance state is the initial step function"""
    grid = GridConfig(grid_size=100, dt=1e-8)
    nu = StepFunction((0.0, 0.5), (0.2, 0.8))
    x = entrance(AtomicCondition(nu), 1e-8, grid, stream(5))

    assert set(x.labels) == {0.2, 0.8}
    assert evaluate(x, 0.25) == 0.2
    assert evaluate(x, 0.75) == 0.8


def test_entrance_of_a_diffuse_law():
    """The number of entrance pieces is the cluster count at eps"""
    grid = GridConfig(grid_size=256, dt=1e-3)
    pieces = [
        entrance(DiffuseCondition(), 0.01, grid, stream(6, i)).n_pieces for i in range(40)
    ]

    assert np.mean(pieces) == pytest.approx(mean_cluster_count(0.01), rel=0.2)
    with pytest.raises(InvalidParameter):
        entrance(DiffuseCondition(), 0.0, grid, stream(6))


def test_constant_initial_condition_is_fixed():
    """A single type has fixed at time 0"""
    outcome = run_fixation(
        AtomicCondition(StepFunction.constant(0.4)), 1e-3, SMOKE_GRID, SMOKE_CFG, stream(7)
    )

    assert outcome.T == 0.0
    assert outcome.kappa == 0.4


def test_atomic_survivor_law():
    """Type i survives with probability equal to its piece width"""
    nu = StepFunction((0.0, 0.2, 0.5), (0.25, 0.5, 0.75))
    reps = 4000
    samples = fixation_samples(AtomicCondition(nu), reps, 1e-3, SMOKE_GRID, SMOKE_CFG)

    assert samples.n == reps
    assert (samples.T > 0).all()
    assert np.isnan(samples.u_prime).all()
    for label, width in zip(nu.labels, nu.widths()):
        frequency = (samples.kappa == label).mean()
        assert frequency == pytest.approx(width, abs=4 * math.sqrt(0.25 / reps) + 0.01)


def test_atomic_fixation_can_precede_coalescence():
    """Two separated pieces of one type fix once the pieces between them vanish.

    Both runs move the same boundaries on the same streams, so fixation with a repeated
    type is never later than full coalescence, and strictly earlier when that type wins.
    """
    starts = (0.0, 0.25, 0.5, 0.75)
    repeated = AtomicCondition(StepFunction(starts, (0.3, 0.6, 0.3, 0.9)))
    distinct = AtomicCondition(StepFunction(starts, (0.3, 0.6, 0.45, 0.9)))
    assert canonicalize(repeated.step).n_pieces == 4

    pairs = [
        (
            run_fixation(repeated, 1e-3, SMOKE_GRID, SMOKE_CFG, stream(9, i)),
            run_fixation(distinct, 1e-3, SMOKE_GRID, SMOKE_CFG, stream(9, i)),
        )
        for i in range(200)
    ]

    assert all(fix.T <= full.T for fix, full in pairs)
    earlier = [fix for fix, full in pairs if fix.T < full.T]
    assert len(earlier) > 20
    assert all(fix.kappa == 0.3 for fix in earlier)


def test_atomic_fixation_lower_bound():
    """Fixation from three equal pieces is at least as fast as from a diffuse start"""
    nu = StepFunction((0.0, 1.0 / 3.0, 2.0 / 3.0), (0.2, 0.5, 0.8))
    samples = fixation_samples(AtomicCondition(nu), 3000, 1e-3, SMOKE_GRID, SMOKE_CFG)

    for t in (0.05, 0.1, 0.2, 0.5):
        fixed = EmpiricalSummary.from_samples((samples.T <= t).astype(float))
        report = lower_bound_report(fixed, cdf_fixation(t), f"P(T <= {t})")
        assert not report.advisory
        assert report.passed, report


def test_diffuse_fixation():
    """Fixation time, surviving type and prevailing piece from diffuse types"""
    reps = 2000
    samples = fixation_samples(DiffuseCondition(), reps, 1e-3, SMOKE_GRID, SMOKE_CFG)
    stderr = samples.T.std(ddof=1) / math.sqrt(reps)

    assert (samples.T >= 1e-3).all()
    assert abs(samples.T.mean() - 1.0 / 6.0) < 4 * stderr + 0.01
    assert abs(samples.kappa.mean() - 0.5) < 4 * math.sqrt(1.0 / 12.0 / reps)
    assert ((0.0 <= samples.u_prime) & (samples.u_prime < 1.0)).all()
    assert ks_compare(samples.u_prime, lambda u: min(max(u, 0.0), 1.0), "U'", 0.06).passed
    assert ks_compare(samples.T, cdf_fixation, "T", 0.06).passed


def test_prevailing_interval():
    """Only diffuse starts have a prevailing entrance piece"""
    u_prime, u_second = prevailing_interval(
        DiffuseCondition(), 1e-3, SMOKE_GRID, SMOKE_CFG, stream(8)
    )

    assert 0.0 <= u_prime.position < 1.0
    assert 0.0 <= u_second.position < 1.0
    with pytest.raises(InvalidParameter):
        prevailing_interval(
            AtomicCondition(TWO_PIECES), 1e-3, SMOKE_GRID, SMOKE_CFG, stream(8)
        )


def test_moment_duality_trivial_cases():
    """A constant function shows its label at every probe on both sides"""
    forward, backward = moment_duality_check(
        StepFunction.constant(0.4), 0.0, 0.05, [(0.3, 0.4), (0.8, 0.4)], SMOKE_CFG, 50
    )

    assert forward.mean == backward.mean == 1.0


@pytest.mark.parametrize(
    "s,t,probes",
    [
        (0.1, 0.1, [(0.3, 0.3)]),  # s < t
        (-0.1, 0.1, [(0.3, 0.3)]),
        (0.0, 0.1, []),
    ],
)
def test_moment_duality_errors(s, t, probes):
    """Invalid time windows and empty probe sets are rejected"""
    with pytest.raises(InvalidParameter):
        moment_duality_check(TWO_PIECES, s, t, probes, SMOKE_CFG, 10)


@pytest.mark.parametrize(
    "probes",
    [
        [(0.4, 0.3)],
        [(0.4, 0.3), (0.9, 0.7)],
        [(0.55, 0.3), (0.65, 0.7)],
    ],
)
def test_moment_duality(probes):
    """Forward and backward frequencies of seeing the probed types agree"""
    forward, backward = moment_duality_check(TWO_PIECES, 0.0, 0.05, probes, SMOKE_CFG, 4000)

    assert compare_summaries(forward, backward, "duality", Thresholds(n_sigma=4.0)).passed


def test_moment_duality_stream_keys():
    """The stream key selects the replicate streams of both sides"""
    check = (TWO_PIECES, 0.0, 0.05, [(0.4, 0.3)], SMOKE_CFG, 500)

    first = moment_duality_check(*check, stream_key=(3,))
    again = moment_duality_check(*check, stream_key=(3,))
    other = moment_duality_check(*check, stream_key=(4,))

    assert first == again
    assert first != other
