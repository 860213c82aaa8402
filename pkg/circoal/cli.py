"""
Command-line interface: one subcommand per experiment.

Exit codes: 0 when every gated report passed, 1 when a report failed, 2 on a configuration
error. Configuration is validated before any simulation starts and files are only written
once an experiment has finished.
"""

# pylint: disable=logging-fstring-interpolation

import argparse
import math
import sys
from functools import partial
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from circoal import __version__
from circoal.analytics import (
    cdf_fixation,
    cdf_Tm,
    laplace_fixation,
    laplace_Tm,
    mean_cluster_count,
    mean_fixation,
    mean_Tm,
    mean_Tm_printed_prefactor,
)
from circoal.arratia import avoidance_probability, coupled_cluster_counts
from circoal.constants import (
    DEFAULT_DT,
    DEFAULT_EPS,
    DEFAULT_GRID_SIZE,
    GRID_ALLOWANCE_LIMIT,
    KAPPA_BINS,
    MAX_SCAN_CONFIGURATIONS,
    SMOKE_DT,
)
from circoal.engine import backward_indicators, forward_indicators, sample_coalescence
from circoal.exceptions import (
    CoalescenceHorizonExceeded,
    ConfigurationError,
    DegenerateConfiguration,
    InvalidParameter,
)
from circoal.harness import (
    chi_square_compare,
    compare_mean,
    compare_summaries,
    compositions,
    encode_cells,
    exclusion_report,
    is_low_power,
    joint_binary_compare,
    joint_law,
    ks_compare,
    log_report,
    lower_bound_report,
    spacing_scan,
)
from circoal.logger import LOG_LEVELS, logger, route_progress, set_log_level
from circoal.models import (
    AtomicCondition,
    DiffuseCondition,
    EmpiricalSummary,
    EngineConfig,
    ExperimentConfig,
    ExperimentResult,
    GapVector,
    GridConfig,
    StepFunction,
    TestReport,
    Thresholds,
)
from circoal.output import write_result
from circoal.stepping_stone import (
    LABEL_SAMPLERS,
    expected_kappa_mean,
    fixation_samples,
    kappa_cdf,
    moment_duality_check,
)
from circoal.streams import resolve_seed

DEFAULT_LAMBDAS = (0.5, 1.0)
REFINE_DTS = (1e-3, 1e-4, 1e-5)
DEFAULT_ARRATIA_TIMES = (0.05, 0.1, 0.5)
DEFAULT_ARRATIA_GRID = 1024
ALLOWANCE_TIME = 0.1
AVOIDANCE_TIME = 0.1
ARC_BATTERY = (((0.1, 0.3),), ((0.1, 0.3), (0.6, 0.7)))
LOWER_BOUND_TIMES = (0.05, 0.1, 0.2, 0.5)
ECDF_TIMES = tuple(round(0.02 * k, 2) for k in range(1, 26))
DEFAULT_SCAN_TIMES = (0.05, 0.1)
FENCE_SHIFT = 0.05
# (initial step function, probes (site, type)) for the moment duality
MOMENT_BATTERY = (
    (StepFunction((0.0, 0.5), (0.25, 0.75)), ((0.25, 0.25),)),
    (StepFunction((0.0, 0.5), (0.25, 0.75)), ((0.25, 0.25), (0.75, 0.75))),
    (
        StepFunction((0.0, 0.5), (0.25, 0.75)),
        ((0.45, 0.25), (0.55, 0.75), (0.95, 0.75)),
    ),
    (
        StepFunction((0.0, 0.25, 0.5, 0.75), (0.1, 0.2, 0.3, 0.4)),
        ((0.2, 0.1), (0.3, 0.2)),
    ),
)


def float_list(text: str) -> tuple[float, ...]:
    """Parse a comma-separated list of numbers"""
    try:
        return tuple(float(item) for item in text.split(",") if item.strip())
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from err


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigurationError(message)


def _require_reps(reps: int) -> None:
    _require(reps >= 2, f"reps must be at least 2, got {reps}")


def _require_times(times: Sequence[float], name: str) -> None:
    _require(len(times) > 0, f"{name} must not be empty")
    _require(all(t > 0 for t in times), f"{name} must be positive, got {list(times)}")


def _experiment(command: str, seed: int, **params: Any) -> ExperimentConfig:
    config = ExperimentConfig(command=command, params=params, seed=seed, version=__version__)
    logger.info(f"Running {command} with {config.as_dict()}")
    return config


def _warn_low_power(reps: int) -> None:
    if is_low_power(reps):
        logger.warning(f"LOW-POWER run with {reps} replicates: reports are advisory")


def _row(quantity: str, parameter: Any, summary: EmpiricalSummary, expected: float):
    return {
        "quantity": quantity,
        "parameter": parameter,
        "n": summary.n,
        "empirical": summary.mean,
        "stderr": summary.stderr,
        "closed_form": expected,
    }


def _gap_vector(args: argparse.Namespace) -> GapVector:
    _require(
        (args.gaps is None) != (args.m is None), "Give exactly one of --gaps and --m"
    )
    if args.gaps is not None:
        gaps = GapVector(args.gaps)
    else:
        gaps = GapVector.equal(args.m)
    _require(gaps.m >= 2, "T_m needs at least two particles")
    return gaps


def _refinement(
    gaps: GapVector, reps: int, seed: int, threads: Optional[int]
) -> tuple[list[dict[str, Any]], list[TestReport]]:
    """Mean T_m over dt levels with and without bridge correction"""
    rows = []
    means = {}
    for dt in REFINE_DTS:
        for bridge in (True, False):
            cfg = EngineConfig(dt=dt, rng_seed=seed, bridge_correction=bridge)
            times, _ = sample_coalescence(gaps.positions(), reps, cfg, threads)
            summary = EmpiricalSummary.from_samples(times)
            means[dt, bridge] = summary
            rows.append(
                {"dt": dt, "bridge_correction": bridge, **_row("mean", dt, summary, mean_Tm(gaps))}
            )
    finest, second = REFINE_DTS[-1], REFINE_DTS[-2]
    reports = [
        compare_summaries(
            means[second, True],
            means[finest, True],
            f"mean T_m stable between dt = {second} and dt = {finest}",
            Thresholds(n_sigma=2.0),
        ),
        TestReport.check(
            mean_Tm(gaps) - means[REFINE_DTS[0], False].mean,
            0.0,
            f"dt = {REFINE_DTS[0]} without bridge correction overestimates mean T_m",
            advisory=is_low_power(reps),
        ),
    ]
    return rows, reports


def cmd_coalesce_time(args: argparse.Namespace, seed: int) -> ExperimentResult:
    """Laplace transform, mean and winning arc of T_m against the closed forms"""
    gaps = _gap_vector(args)
    _require_reps(args.reps)
    _require_times(args.lambdas, "lambdas")
    cfg = EngineConfig(dt=args.dt, rng_seed=seed, bridge_correction=not args.no_bridge)
    config = _experiment(
        "coalesce-time",
        seed,
        gaps=list(gaps.gaps),
        dt=cfg.dt,
        bridge_correction=cfg.bridge_correction,
        reps=args.reps,
        lambdas=list(args.lambdas),
        refine=args.refine,
    )
    _warn_low_power(args.reps)

    times, winners = sample_coalescence(gaps.positions(), args.reps, cfg, args.threads)
    rows = []
    reports = []
    for lam in args.lambdas:
        summary = EmpiricalSummary.from_samples(np.exp(-lam * times))
        expected = laplace_Tm(lam, gaps)
        rows.append(_row("laplace", lam, summary, expected))
        reports.append(
            compare_mean(summary, expected, f"Laplace transform of T_m at lambda = {lam}")
        )
    mean_summary = EmpiricalSummary.from_samples(times)
    rows.append(_row("mean", "", mean_summary, mean_Tm(gaps)))
    reports.append(compare_mean(mean_summary, mean_Tm(gaps), "mean T_m = (1 - sum g^3)/6"))
    reports.append(
        exclusion_report(
            mean_summary,
            mean_Tm_printed_prefactor(gaps),
            "mean T_m excludes the (1 - sum g^3)/4 prefactor",
        )
    )
    for index, g in enumerate(gaps.gaps):
        hits = EmpiricalSummary.from_samples((winners == index).astype(float))
        rows.append(_row("winner_frequency", index, hits, g))
        reports.append(compare_mean(hits, g, f"arc {index} takes the circle w.p. {g}"))

    tables = {}
    if args.refine:
        tables["refinement"], refinement_reports = _refinement(
            gaps, args.reps, seed, args.threads
        )
        reports.extend(refinement_reports)
    return ExperimentResult(config, rows, reports, tables)


def _atomic_fixation(
    args: argparse.Namespace, grid: GridConfig, cfg: EngineConfig
) -> tuple[list[dict[str, Any]], list[TestReport], dict[str, list[dict[str, Any]]]]:
    gaps = GapVector(args.atomic_gaps)
    labels = tuple((i + 1) / (gaps.m + 1) for i in range(gaps.m))
    nu = StepFunction(gaps.positions(), labels)
    samples = fixation_samples(AtomicCondition(nu), args.reps, args.eps, grid, cfg, args.threads)
    rows = []
    reports = []
    for label, width in zip(labels, gaps.gaps):
        hits = EmpiricalSummary.from_samples((samples.kappa == label).astype(float))
        rows.append(_row("survivor_frequency", label, hits, width))
        reports.append(
            compare_mean(hits, width, f"type {label:.4f} survives w.p. {width}")
        )
    bound_rows = []
    for t in LOWER_BOUND_TIMES:
        fixed = EmpiricalSummary.from_samples((samples.T <= t).astype(float))
        bound_rows.append(_row("fixed_by", t, fixed, cdf_fixation(t)))
        reports.append(
            lower_bound_report(fixed, cdf_fixation(t), f"P(T <= {t}) above the lower bound")
        )
    tables = {
        "lower_bound": bound_rows,
        "samples": [{"T": T, "kappa": k} for T, k in zip(samples.T, samples.kappa)],
    }
    return rows, reports, tables


def _diffuse_fixation(
    args: argparse.Namespace, grid: GridConfig, cfg: EngineConfig
) -> tuple[list[dict[str, Any]], list[TestReport], dict[str, list[dict[str, Any]]]]:
    mu = DiffuseCondition(sampler=args.sampler)
    samples = fixation_samples(mu, args.reps, args.eps, grid, cfg, args.threads)
    rows = [
        _row(
            "ecdf",
            t,
            EmpiricalSummary.from_samples((samples.T <= t).astype(float)),
            cdf_fixation(t),
        )
        for t in ECDF_TIMES
    ]
    t_summary = EmpiricalSummary.from_samples(samples.T)
    laplace_summary = EmpiricalSummary.from_samples(np.exp(-samples.T))
    kappa_summary = EmpiricalSummary.from_samples(samples.kappa)
    law = partial(kappa_cdf, mu)
    reports = [
        ks_compare(samples.T, cdf_fixation, "fixation time law"),
        compare_mean(t_summary, mean_fixation(), "mean fixation time 1/6"),
        compare_mean(laplace_summary, laplace_fixation(1.0), "Laplace transform of T at 1"),
        chi_square_compare(samples.kappa, law, f"surviving type histogram ({KAPPA_BINS} bins)"),
        compare_mean(kappa_summary, expected_kappa_mean(mu), "mean surviving type"),
        ks_compare(
            samples.u_prime,
            lambda u: min(max(u, 0.0), 1.0),
            "start of the prevailing piece is uniform",
        ),
    ]
    rows.append(_row("mean", "", t_summary, mean_fixation()))
    rows.append(_row("laplace", 1.0, laplace_summary, laplace_fixation(1.0)))
    rows.append(_row("kappa_mean", "", kappa_summary, expected_kappa_mean(mu)))

    edges = np.linspace(0.0, 1.0, KAPPA_BINS + 1)
    observed, _ = np.histogram(samples.kappa, bins=edges)
    histogram = [
        {
            "bin_start": float(lo),
            "bin_end": float(hi),
            "observed": int(count),
            "expected": samples.n * (law(float(hi)) - law(float(lo))),
        }
        for lo, hi, count in zip(edges[:-1], edges[1:], observed)
    ]
    widths = np.mod(samples.u_second - samples.u_prime, 1.0)
    prevailing = [
        {"eps": args.eps, "grid_size": grid.grid_size, "median_width": float(np.median(widths))}
    ]
    tables = {
        "kappa_histogram": histogram,
        "prevailing": prevailing,
        "samples": [
            {"T": T, "kappa": k, "u_prime": u1, "u_second": u2}
            for T, k, u1, u2 in zip(
                samples.T, samples.kappa, samples.u_prime, samples.u_second
            )
        ],
    }
    return rows, reports, tables


def cmd_fixation(args: argparse.Namespace, seed: int) -> ExperimentResult:
    """Fixation time and surviving type of the stepping-stone model"""
    _require_reps(args.reps)
    _require(args.eps > 0, f"eps must be positive, got {args.eps}")
    _require(
        args.sampler in LABEL_SAMPLERS,
        f"unknown sampler {args.sampler!r}, expected one of {sorted(LABEL_SAMPLERS)}",
    )
    grid = GridConfig(grid_size=args.grid_size, dt=args.dt)
    cfg = EngineConfig(dt=args.dt, rng_seed=seed)
    if args.atomic_gaps is not None:
        GapVector(args.atomic_gaps)
    config = _experiment(
        "fixation",
        seed,
        eps=args.eps,
        grid_size=grid.grid_size,
        dt=cfg.dt,
        reps=args.reps,
        sampler=args.sampler,
        atomic_gaps=None if args.atomic_gaps is None else list(args.atomic_gaps),
    )
    _warn_low_power(args.reps)
    if args.atomic_gaps is not None:
        rows, reports, tables = _atomic_fixation(args, grid, cfg)
    else:
        rows, reports, tables = _diffuse_fixation(args, grid, cfg)
    return ExperimentResult(config, rows, reports, tables)


def cmd_arratia(args: argparse.Namespace, seed: int) -> ExperimentResult:
    """Cluster counts and the boundary/image avoidance identity of the Arratia flow"""
    _require_reps(args.reps)
    _require_times(args.t_list, "t-list")
    grid = GridConfig(grid_size=args.grid_size, dt=args.dt)
    config = _experiment(
        "arratia",
        seed,
        t_list=list(args.t_list),
        grid_size=grid.grid_size,
        dt=grid.dt,
        reps=args.reps,
    )
    _warn_low_power(args.reps)

    rows = []
    reports = []
    for t in args.t_list:
        coarse, fine = coupled_cluster_counts(t, grid, args.reps, seed, args.threads)
        summary = EmpiricalSummary.from_samples(coarse)
        fine_summary = EmpiricalSummary.from_samples(fine)
        allowance = abs(summary.mean - fine_summary.mean)
        expected = mean_cluster_count(t)
        rows.append(
            {
                **_row("mean_cluster_count", t, summary, expected),
                "mean_double_grid": fine_summary.mean,
                "allowance": allowance,
            }
        )
        reports.append(
            compare_mean(
                summary, expected, f"mean cluster count at t = {t}", allowance=allowance
            )
        )
        if t == ALLOWANCE_TIME:
            reports.append(
                TestReport.check(
                    allowance,
                    GRID_ALLOWANCE_LIMIT,
                    f"grid allowance |mean_M - mean_2M| at t = {t}",
                    advisory=is_low_power(args.reps),
                )
            )

    avoidance = []
    for arcs in ARC_BATTERY:
        sides = {
            side: avoidance_probability(
                side, arcs, AVOIDANCE_TIME, grid, args.reps, seed, args.threads
            )
            for side in ("U", "V")
        }
        label = " ".join(f"({a},{b})" for a, b in arcs)
        avoidance.append(
            {
                "arcs": label,
                "t": AVOIDANCE_TIME,
                "u_side": sides["U"].mean,
                "u_stderr": sides["U"].stderr,
                "v_side": sides["V"].mean,
                "v_stderr": sides["V"].stderr,
            }
        )
        reports.append(
            compare_summaries(sides["U"], sides["V"], f"U and V avoid {label} alike")
        )
        if len(arcs) == 1:
            [(a, b)] = arcs
            expected = cdf_Tm(AVOIDANCE_TIME, [b - a, 1.0 - (b - a)])
            reports.append(
                compare_mean(
                    sides["V"], expected, f"V avoids {label} iff particles from {a}, {b} met"
                )
            )
    return ExperimentResult(config, rows, reports, {"avoidance": avoidance})


def duality_points(m: int, n: int) -> tuple[list[float], list[float]]:
    """Particles y_i = i/m and fence z_j = (j + 1/2)/n + 0.05, both anticlockwise"""
    particles = [i / m for i in range(m)]
    fence = [((j + 0.5) / n + FENCE_SHIFT) % 1.0 for j in range(n)]
    return particles, fence


def _cell_label(code: int, m: int, n: int) -> str:
    bits = [(code >> k) & 1 for k in range(m * n)]
    return ";".join("".join(str(bits[i * n + j]) for j in range(n)) for i in range(m))


def cmd_duality(args: argparse.Namespace, seed: int) -> ExperimentResult:
    """Forward and backward indicator arrays, and the moment duality battery"""
    _require_reps(args.reps)
    _require(args.m >= 1 and args.n >= 1, "m and n must be positive")
    _require(args.m * args.n <= 12, f"m * n must be at most 12, got {args.m * args.n}")
    _require(args.t > 0, f"t must be positive, got {args.t}")
    cfg = EngineConfig(dt=args.dt, rng_seed=seed)
    config = _experiment(
        "duality", seed, m=args.m, n=args.n, t=args.t, dt=cfg.dt, reps=args.reps
    )
    _warn_low_power(args.reps)
    if 2 ** (args.m * args.n) > args.reps / 100:
        logger.warning(
            f"{2 ** (args.m * args.n)} possible cells for {args.reps} replicates: "
            "the joint laws are sparsely sampled"
        )

    particles, fence = duality_points(args.m, args.n)
    forward = forward_indicators(
        particles, fence, args.t, cfg, args.reps, args.threads, stream_key=(1,)
    )
    backward = backward_indicators(
        particles, fence, args.t, cfg, args.reps, args.threads, stream_key=(2,)
    )
    reports = [
        joint_binary_compare(forward, backward, "forward and backward indicator arrays")
    ]
    law_f, law_b = joint_law(forward), joint_law(backward)
    rows = [
        {
            "cell": code,
            "array": _cell_label(code, args.m, args.n),
            "forward": law_f.get(code, 0.0),
            "backward": law_b.get(code, 0.0),
        }
        for code in sorted(set(law_f) | set(law_b))
    ]
    logger.debug(f"Observed {len(np.unique(encode_cells(forward)))} forward cells")

    moments = []
    for index, (nu, probes) in enumerate(MOMENT_BATTERY):
        ahead, behind = moment_duality_check(
            nu, 0.0, args.t, probes, cfg, args.reps, args.threads, stream_key=(3 + index,)
        )
        reports.append(compare_summaries(ahead, behind, f"moment duality probe set {index}"))
        moments.append(
            {
                "probe_set": index,
                "probes": " ".join(f"({z},{k})" for z, k in probes),
                "forward": ahead.mean,
                "forward_stderr": ahead.stderr,
                "backward": behind.mean,
                "backward_stderr": behind.stderr,
            }
        )
    return ExperimentResult(config, rows, reports, {"moment_duality": moments})


def cmd_spacing_scan(args: argparse.Namespace, seed: int) -> ExperimentResult:
    """Closed-form scan of mean and CDF of T_m over configurations; never gates"""
    _require(args.m >= 2, f"m must be at least 2, got {args.m}")
    _require(
        args.grid_density >= args.m,
        f"grid density must be at least m = {args.m}, got {args.grid_density}",
    )
    count = math.comb(args.grid_density - 1, args.m - 1)
    _require(
        count <= MAX_SCAN_CONFIGURATIONS,
        f"{count} configurations exceed the scan limit of {MAX_SCAN_CONFIGURATIONS}",
    )
    _require_times(args.t_list, "t-list")
    config = _experiment(
        "spacing-scan",
        seed,
        m=args.m,
        grid_density=args.grid_density,
        t_list=list(args.t_list),
    )
    scan = spacing_scan(args.m, compositions(args.m, args.grid_density), args.t_list)
    rows = []
    for index, row in enumerate(scan.rows):
        entry: dict[str, Any] = {"gaps": list(row.gaps.gaps), "mean": row.mean}
        for t, value, argmin in zip(scan.t_list, row.cdf_values, scan.argmin_cdf):
            entry[f"cdf_{t}"] = value
            entry[f"argmin_{t}"] = index == argmin
        entry["argmax_mean"] = index == scan.argmax_mean
        rows.append(entry)
    return ExperimentResult(config, rows, [scan.report], gated=False)


def _common(parser: argparse.ArgumentParser, reps: Optional[int], dt: Optional[float]) -> None:
    parser.add_argument(
        "--seed", type=int, default=None, help="master seed (default: $CIRCOAL_SEED)"
    )
    parser.add_argument(
        "--threads", type=int, default=None, help="worker threads (default: all cores)"
    )
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="INFO")
    if reps is not None:
        parser.add_argument("--reps", type=int, default=reps)
    if dt is not None:
        parser.add_argument("--dt", type=float, default=dt)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment"""
    parser = argparse.ArgumentParser(
        prog="circoal",
        description="Monte Carlo checks for circular coalescing Brownian motion, "
        "the Arratia flow and the stepping-stone model",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    coalesce = commands.add_parser("coalesce-time", help="law of the coalescence time T_m")
    coalesce.add_argument("--gaps", type=float_list, default=None, help="e.g. 0.2,0.3,0.5")
    coalesce.add_argument("--m", type=int, default=None, help="m equally spaced particles")
    coalesce.add_argument("--lambdas", type=float_list, default=DEFAULT_LAMBDAS)
    coalesce.add_argument("--no-bridge", action="store_true", help="disable bridge correction")
    coalesce.add_argument("--refine", action="store_true", help=f"also run dt in {REFINE_DTS}")
    _common(coalesce, reps=50_000, dt=DEFAULT_DT)
    coalesce.set_defaults(handler=cmd_coalesce_time)

    fixation = commands.add_parser("fixation", help="fixation time and surviving type")
    fixation.add_argument("--eps", type=float, default=DEFAULT_EPS)
    fixation.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    fixation.add_argument("--sampler", default="uniform", help=f"one of {sorted(LABEL_SAMPLERS)}")
    fixation.add_argument(
        "--atomic-gaps",
        type=float_list,
        default=None,
        help="start from a step function with these piece widths and distinct types",
    )
    _common(fixation, reps=20_000, dt=DEFAULT_DT)
    fixation.set_defaults(handler=cmd_fixation)

    arratia = commands.add_parser("arratia", help="cluster counts of the Arratia flow")
    arratia.add_argument("--t-list", type=float_list, default=DEFAULT_ARRATIA_TIMES)
    arratia.add_argument("--grid-size", type=int, default=DEFAULT_ARRATIA_GRID)
    _common(arratia, reps=10_000, dt=SMOKE_DT)
    arratia.set_defaults(handler=cmd_arratia)

    duality = commands.add_parser("duality", help="duality of coalescing systems")
    duality.add_argument("--m", type=int, default=2)
    duality.add_argument("--n", type=int, default=2)
    duality.add_argument("--t", type=float, default=0.05)
    _common(duality, reps=50_000, dt=DEFAULT_DT)
    duality.set_defaults(handler=cmd_duality)

    scan = commands.add_parser("spacing-scan", help="closed-form scan over configurations")
    scan.add_argument("--m", type=int, default=3)
    scan.add_argument("--grid-density", type=int, default=10)
    scan.add_argument("--t-list", type=float_list, default=DEFAULT_SCAN_TIMES)
    _common(scan, reps=None, dt=None)
    scan.set_defaults(handler=cmd_spacing_scan)
    return parser


def _run(args: argparse.Namespace) -> int:
    handler: Callable[[argparse.Namespace, int], ExperimentResult] = args.handler
    try:
        _require(
            args.threads is None or args.threads >= 1,
            f"threads must be at least 1, got {args.threads}",
        )
        seed = resolve_seed(args.seed)
        result = handler(args, seed)
    except (ConfigurationError, InvalidParameter, DegenerateConfiguration) as err:
        logger.error(f"Invalid configuration: {err}")
        return 2
    except CoalescenceHorizonExceeded as err:
        logger.error(f"Simulation aborted: {err}")
        return 1

    for report in result.reports:
        log_report(report)
    write_result(result, args.out, args.format)
    if not result.passed:
        failed = [r.description for r in result.reports if not r.passed and not r.advisory]
        logger.warning(f"{len(failed)} checks failed: {failed}")
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one experiment and return its exit code.

    Without --out the result document is written to stdout and progress goes to stderr.
    """
    args = build_parser().parse_args(argv)
    set_log_level(args.log_level)
    if args.out is not None:
        return _run(args)
    previous = route_progress(sys.stderr)
    try:
        return _run(args)
    finally:
        route_progress(previous)
