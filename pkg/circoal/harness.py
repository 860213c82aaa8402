"""
Monte Carlo estimation and the statistical checks that turn distributional identities
into pass/fail reports.
"""

# pylint: disable=logging-fstring-interpolation

import itertools
import math
from typing import Callable, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from circoal.analytics import cdf_on_grid, cdf_Tm, mean_Tm
from circoal.constants import (
    CHI2_ALPHA,
    CHUNK_SIZE,
    KAPPA_BINS,
    MAX_SCAN_CONFIGURATIONS,
    PRINTED_PREFACTOR_SIGMAS,
)
from circoal.exceptions import InvalidParameter, ShapeMismatch
from circoal.logger import logger
from circoal.models import (
    EmpiricalSummary,
    GapVector,
    SpacingRow,
    SpacingScan,
    TestReport,
    Thresholds,
)
from circoal.streams import chunk_sizes, run_chunks, stream

MAX_JOINT_ENTRIES = 12
# rounding slack when comparing closed-form means against equal spacing
MEAN_SLACK = 1e-14


def log_report(report: TestReport) -> None:
    """Log a report at INFO when it passed and at WARNING otherwise"""
    verdict = "passed" if report.passed else "FAILED"
    if report.advisory:
        verdict += " (advisory)"
    bound = "minimum" if report.comparison == "at_least" else "threshold"
    message = (
        f"{report.description}: statistic {report.statistic:.6g}, "
        f"{bound} {report.threshold:.6g}, {verdict}"
    )
    if report.passed:
        logger.info(message)
    else:
        logger.warning(message)


def is_low_power(n: int, thresholds: Thresholds = Thresholds()) -> bool:
    """Runs with fewer replicates than the low-power limit only give advisory reports"""
    return n < thresholds.low_power_reps


def mc_estimate(
    sampler: Callable[[np.random.Generator], float],
    reps: int,
    master_seed: int,
    threads: Optional[int] = None,
) -> EmpiricalSummary:
    """Mean and standard error of `sampler` over `reps` replicates.

    Replicate i draws from the stream (master_seed, i), so the estimate does not depend on
    how replicates are spread over threads.
    """
    if reps < 2:
        raise InvalidParameter(f"Need at least 2 replicates, got {reps}", parameter="reps")

    def job(first: int, size: int) -> list[float]:
        return [float(sampler(stream(master_seed, i))) for i in range(first, first + size)]

    sizes = chunk_sizes(reps, CHUNK_SIZE)
    firsts = np.concatenate(([0], np.cumsum(sizes)[:-1])).tolist()
    if len(sizes) == 1 or threads == 1:
        chunks = [job(first, size) for first, size in zip(firsts, sizes)]
    else:
        chunks = Parallel(n_jobs=-1 if threads is None else threads, prefer="threads")(
            delayed(job)(first, size) for first, size in zip(firsts, sizes)
        )
    return EmpiricalSummary.from_samples(list(itertools.chain.from_iterable(chunks)))


def mc_estimate_batched(
    job: Callable[[np.random.Generator, int], np.ndarray],
    reps: int,
    master_seed: int,
    threads: Optional[int] = None,
) -> EmpiricalSummary:
    """Same as mc_estimate for a sampler that fills a whole chunk of replicates at once"""
    if reps < 2:
        raise InvalidParameter(f"Need at least 2 replicates, got {reps}", parameter="reps")
    return EmpiricalSummary.from_samples(
        np.concatenate(run_chunks(job, reps, master_seed, threads))
    )


def compare_mean(
    summary: EmpiricalSummary,
    expected: float,
    description: str,
    thresholds: Thresholds = Thresholds(),
    allowance: float = 0.0,
) -> TestReport:
    """|mean - expected| against n_sigma standard errors plus an allowance for known bias"""
    return TestReport.check(
        abs(summary.mean - expected),
        thresholds.n_sigma * summary.stderr + allowance,
        description,
        advisory=is_low_power(summary.n, thresholds),
    )


def compare_summaries(
    first: EmpiricalSummary,
    second: EmpiricalSummary,
    description: str,
    thresholds: Thresholds = Thresholds(),
) -> TestReport:
    """Difference of two independent estimates against n_sigma combined standard errors"""
    return TestReport.check(
        abs(first.mean - second.mean),
        thresholds.n_sigma * math.hypot(first.stderr, second.stderr),
        description,
        advisory=is_low_power(min(first.n, second.n), thresholds),
    )


def exclusion_report(
    summary: EmpiricalSummary,
    excluded: float,
    description: str,
    sigmas: float = PRINTED_PREFACTOR_SIGMAS,
    thresholds: Thresholds = Thresholds(),
) -> TestReport:
    """Check that a value is excluded: the estimate lies at least `sigmas` standard errors
    away from it. The statistic is that distance in standard errors.
    """
    distance = abs(summary.mean - excluded)
    z_score = distance / summary.stderr if summary.stderr > 0 else math.inf
    return TestReport.check_at_least(
        z_score, sigmas, description, advisory=is_low_power(summary.n, thresholds)
    )


def ks_compare(
    samples: Sequence[float],
    cdf: Callable[[float], float],
    description: str,
    alpha_threshold: Optional[float] = None,
    thresholds: Thresholds = Thresholds(),
) -> TestReport:
    """Kolmogorov-Smirnov distance between the samples and a continuous CDF"""
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise InvalidParameter("Cannot test an empty sample", parameter="samples")
    result = stats.kstest(values, lambda ts: cdf_on_grid(cdf, np.atleast_1d(ts)))
    threshold = thresholds.ks_threshold if alpha_threshold is None else alpha_threshold
    return TestReport.check(
        result.statistic,
        threshold,
        description,
        advisory=is_low_power(values.size, thresholds),
    )


def encode_cells(samples: np.ndarray) -> np.ndarray:
    """Binary (reps, m, n) arrays to integer cell codes, entry (i, j) being bit i*n + j"""
    bits = samples.reshape(samples.shape[0], -1).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(bits.shape[1], dtype=np.int64))


def joint_law(samples: np.ndarray) -> dict[int, float]:
    """Empirical law of the cell codes"""
    codes, counts = np.unique(encode_cells(samples), return_counts=True)
    return {int(code): count / samples.shape[0] for code, count in zip(codes, counts)}


def joint_binary_compare(
    samples_a: np.ndarray,
    samples_b: np.ndarray,
    description: str,
    thresholds: Thresholds = Thresholds(),
) -> TestReport:
    """Total variation distance between the joint laws of two families of binary arrays.

    The threshold is tv_scale * sqrt(cells / reps), cells being the number of cells seen on
    either side and reps the smaller replicate count.
    """
    if samples_a.shape[1:] != samples_b.shape[1:]:
        raise ShapeMismatch(
            "Compared arrays must have the same shape",
            shapes=[samples_a.shape[1:], samples_b.shape[1:]],
        )
    n_entries = int(np.prod(samples_a.shape[1:]))
    if n_entries > MAX_JOINT_ENTRIES:
        raise InvalidParameter(
            f"Joint laws of {n_entries} binary entries are too large to tabulate",
            parameter="shape",
        )
    law_a = joint_law(samples_a)
    law_b = joint_law(samples_b)
    cells = sorted(set(law_a) | set(law_b))
    distance = 0.5 * math.fsum(abs(law_a.get(c, 0.0) - law_b.get(c, 0.0)) for c in cells)
    reps = min(samples_a.shape[0], samples_b.shape[0])
    return TestReport.check(
        distance,
        thresholds.tv_scale * math.sqrt(len(cells) / reps),
        description,
        advisory=is_low_power(reps, thresholds),
    )


def chi_square_compare(
    samples: Sequence[float],
    cdf: Callable[[float], float],
    description: str,
    bins: int = KAPPA_BINS,
    alpha: float = CHI2_ALPHA,
    thresholds: Thresholds = Thresholds(),
) -> TestReport:
    """Pearson chi-square of a histogram on [0, 1] with equal-width bins against a CDF.

    The threshold is the (1 - alpha) quantile of chi-square with bins - 1 degrees of freedom.
    """
    values = np.asarray(samples, dtype=float)
    edges = np.linspace(0.0, 1.0, bins + 1)
    observed, _ = np.histogram(values, bins=edges)
    probabilities = np.diff([cdf(float(edge)) for edge in edges])
    expected = probabilities / probabilities.sum() * observed.sum()
    result = stats.chisquare(observed, expected)
    return TestReport.check(
        result.statistic,
        stats.chi2.ppf(1.0 - alpha, bins - 1),
        description,
        advisory=is_low_power(values.size, thresholds),
    )


def lower_bound_report(
    hits: EmpiricalSummary,
    bound: float,
    description: str,
    thresholds: Thresholds = Thresholds(),
) -> TestReport:
    """Check an empirical probability against a lower bound, up to two standard errors"""
    return TestReport.check(
        bound - hits.mean,
        2.0 * hits.stderr,
        description,
        advisory=is_low_power(hits.n, thresholds),
    )


def compositions(m: int, grid_density: int) -> list[GapVector]:
    """Gap vectors of m points whose gaps are positive multiples of 1/grid_density"""
    if m < 2:
        raise InvalidParameter(f"m must be at least 2, got {m}", parameter="m")
    if grid_density < m:
        raise InvalidParameter(
            f"grid density must be at least m = {m}, got {grid_density}",
            parameter="grid_density",
        )
    count = math.comb(grid_density - 1, m - 1)
    if count > MAX_SCAN_CONFIGURATIONS:
        raise InvalidParameter(
            f"{count} configurations exceed the scan limit of {MAX_SCAN_CONFIGURATIONS}",
            parameter="grid_density",
        )
    configs = []
    for cuts in itertools.combinations(range(1, grid_density), m - 1):
        counts = np.diff((0, *cuts, grid_density))
        gaps = counts / grid_density
        # the last gap absorbs rounding
        gaps[-1] = 1.0 - math.fsum(gaps[:-1].tolist())
        configs.append(GapVector(tuple(gaps.tolist())))
    return configs


def spacing_scan(
    m: int, config_grid: Sequence[GapVector], t_list: Sequence[float]
) -> SpacingScan:
    """Closed-form table of the mean and CDF of T_m over configurations.

    The mean is maximal at equal spacing, which the report checks. Whether the CDF is
    minimal at equal spacing is only tabulated through argmin_cdf.
    """
    equal = GapVector.equal(m)
    configs = [g for g in config_grid if g.m == m]
    if len(configs) != len(config_grid):
        raise InvalidParameter(f"Every configuration must have {m} gaps", parameter="m")
    if not any(np.allclose(g.gaps, equal.gaps) for g in configs):
        configs.append(equal)
    rows = tuple(
        SpacingRow(
            gaps=gaps,
            mean=mean_Tm(gaps),
            cdf_values=tuple(cdf_Tm(t, gaps) for t in t_list),
        )
        for gaps in configs
    )
    means = np.array([row.mean for row in rows])
    cdfs = np.array([row.cdf_values for row in rows]).reshape(len(rows), len(t_list))
    excess = float(means.max() - mean_Tm(equal))
    report = TestReport.check(
        excess,
        MEAN_SLACK,
        f"mean T_{m} is maximal at equal spacing over {len(rows)} configurations",
    )
    return SpacingScan(
        t_list=tuple(float(t) for t in t_list),
        rows=rows,
        argmin_cdf=tuple(int(i) for i in np.argmin(cdfs, axis=0)),
        argmax_mean=int(np.argmax(means)),
        report=report,
    )
