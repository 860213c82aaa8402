"""
Step-function representation of the stepping-stone model with circular Brownian migration.

A state is a right-continuous step function of types. Its piece boundaries move as a circular
coalescing Brownian motion; a piece vanishes when its two boundaries meet. A diffuse initial
condition is entered at a small time eps through the Arratia flow: the preimage intervals of
the flow become the pieces, and each piece draws its type from the law at its image point.
"""

# pylint: disable=logging-fstring-interpolation

import math
from typing import Callable, Optional, Sequence

import numpy as np

from circoal.arratia import block_starts, images, run_flow
from circoal.circle import in_arcs, offset
from circoal.engine import (
    CoalescingBatch,
    coalesced,
    run_until,
    single_label,
    slot_order,
    to_caller_order,
    winner_gaps,
)
from circoal.exceptions import InvalidParameter
from circoal.logger import logger
from circoal.models import (
    AtomicCondition,
    CirclePoint,
    DiffuseCondition,
    EmpiricalSummary,
    EngineConfig,
    FixationOutcome,
    FixationSamples,
    GridConfig,
    InitialCondition,
    Position,
    StepFunction,
    reduce_position,
)
from circoal.streams import run_chunks

LabelSampler = Callable[[np.ndarray, np.random.Generator], np.ndarray]
Probe = tuple[Position, float]
FixationJob = Callable[
    [np.random.Generator, int], tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
]


def _uniform(sites: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return rng.random(sites.shape)


def _site_scaled(sites: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return rng.random(sites.shape) * (1.0 + sites) / 2.0


# diffuse type laws mu(e), sampled at the sites e
LABEL_SAMPLERS: dict[str, LabelSampler] = {
    "uniform": _uniform,
    "site_scaled": _site_scaled,
}


def label_sampler(condition: DiffuseCondition) -> LabelSampler:
    """Registered sampler of a diffuse initial condition"""
    try:
        return LABEL_SAMPLERS[condition.sampler]
    except KeyError as err:
        raise InvalidParameter(
            f"Unknown label sampler {condition.sampler!r}, "
            f"expected one of {sorted(LABEL_SAMPLERS)}",
            parameter="sampler",
        ) from err


def expected_kappa_mean(condition: DiffuseCondition) -> float:
    """Mean surviving type, the mean of the mixture of mu(e) over uniform e"""
    label_sampler(condition)
    return {"uniform": 0.5, "site_scaled": 0.375}[condition.sampler]


def kappa_cdf(condition: DiffuseCondition, k: float) -> float:
    """P{kappa <= k}: the surviving type has law int mu(e)(dk) de"""
    label_sampler(condition)
    k = min(max(k, 0.0), 1.0)
    if condition.sampler == "uniform":
        return k
    if k <= 0.5:
        return 2.0 * k * math.log(2.0)
    return 2.0 * k - 1.0 - 2.0 * k * math.log(k)


def canonicalize(x: StepFunction) -> StepFunction:
    """Merge circularly adjacent pieces carrying the same label"""
    labels = x.labels
    keep = [i for i in range(x.n_pieces) if labels[i] != labels[i - 1]]
    if not keep:
        return StepFunction.constant(labels[0])
    if len(keep) == x.n_pieces:
        return x
    return StepFunction(
        tuple(x.starts[i] for i in keep), tuple(labels[i] for i in keep)
    )


def evaluate_many(x: StepFunction, points: np.ndarray) -> np.ndarray:
    """Labels at many sites"""
    labels = np.asarray(x.labels)
    if x.n_pieces == 1:
        return np.full(np.shape(points), labels[0])
    piece = np.searchsorted(np.asarray(x.starts), offset(points, 0.0), side="right") - 1
    # sites before the first start belong to the last piece
    return labels[np.where(piece < 0, x.n_pieces - 1, piece)]


def evaluate(x: StepFunction, e: Position) -> float:
    """Label of the piece whose arc contains e"""
    return float(evaluate_many(x, np.array([reduce_position(float(e))]))[0])


def _pieces(positions: np.ndarray, closed: np.ndarray, labels: np.ndarray) -> StepFunction:
    """Step function of one replicate whose boundaries sit at `positions`"""
    is_open = ~closed
    starts = offset(positions[is_open], 0.0)
    order = np.argsort(starts, kind="stable")
    return canonicalize(
        StepFunction(
            tuple(starts[order].tolist()), tuple(labels[is_open][order].tolist())
        )
    )


def _require_eps(eps: float) -> None:
    if not eps > 0:
        raise InvalidParameter(f"eps must be positive, got {eps}", parameter="eps")


def _entrance_batch(
    mu: InitialCondition, eps: float, grid: GridConfig, size: int, rng: np.random.Generator
) -> tuple[CoalescingBatch, np.ndarray]:
    """Boundaries U_i(eps) of `size` entrance states and the type of every grid slot.

    Slot j sits at the boundary of its block, so open gaps are exactly the pieces
    [U_i, U_{i+1}) and the piece on gap j carries the type of slot j.
    """
    _require_eps(eps)
    flow = run_flow(eps, grid, size, rng)
    leaders = flow.leaders()
    sites = images(flow)
    if isinstance(mu, DiffuseCondition):
        drawn = label_sampler(mu)(sites, rng)
    else:
        drawn = evaluate_many(mu.step, sites)
    labels = np.take_along_axis(drawn, leaders, axis=1)
    positions = leaders / grid.grid_size - (leaders > np.arange(grid.grid_size))
    return CoalescingBatch(positions, flow.closed, time=eps), labels


def entrance(
    mu: InitialCondition, eps: float, grid: GridConfig, rng: np.random.Generator
) -> StepFunction:
    """State at time eps: types on the preimage intervals of the flow marginal.

    Diffuse types are drawn independently from mu(V_i(eps)); atomic types are nu(V_i(eps)).
    """
    batch, labels = _entrance_batch(mu, eps, grid, 1, rng)
    starts = np.flatnonzero(block_starts(batch)[0])
    logger.debug(f"Entrance state at eps = {eps} has {starts.size} pieces")
    return canonicalize(
        StepFunction(
            tuple((starts / grid.grid_size).tolist()),
            tuple(labels[0, starts].tolist()),
        )
    )


def evolve(
    x: StepFunction, dt_total: float, cfg: EngineConfig, rng: np.random.Generator
) -> StepFunction:
    """Move the boundaries of x for a time dt_total; labels are never created or changed"""
    if dt_total < 0:
        raise InvalidParameter(
            f"dt_total must be non-negative, got {dt_total}", parameter="dt_total"
        )
    x = canonicalize(x)
    if x.n_pieces == 1 or dt_total == 0:
        return x
    batch = CoalescingBatch.start(x.starts, 1)
    batch.advance(dt_total, cfg, rng)
    return _pieces(batch.positions[0], batch.closed[0], np.asarray(x.labels))


def _atomic_job(nu: StepFunction, cfg: EngineConfig) -> FixationJob:
    nu = canonicalize(nu)
    values, codes = np.unique(np.asarray(nu.labels), return_inverse=True)

    def job(rng: np.random.Generator, size: int):
        blank = np.full(size, np.nan)
        if nu.n_pieces == 1:
            return np.zeros(size), np.full(size, nu.labels[0]), blank, blank
        batch = CoalescingBatch.start(nu.starts, size)
        batch.labels = np.tile(codes, (size, 1))
        times, final = run_until(batch, single_label, cfg, rng)
        survivor = final.labels[np.arange(size), winner_gaps(final)]
        return times, values[survivor], blank, blank

    return job


def _diffuse_job(
    mu: DiffuseCondition, eps: float, grid: GridConfig, cfg: EngineConfig
) -> FixationJob:
    _require_eps(eps)
    label_sampler(mu)
    size_m = grid.grid_size

    def job(rng: np.random.Generator, size: int):
        batch, labels = _entrance_batch(mu, eps, grid, size, rng)
        leaders = batch.leaders()
        times, final = run_until(batch, coalesced, cfg, rng)
        # the only open gap is the entrance piece that took the circle
        winner = winner_gaps(final)
        rows = np.arange(size)
        return (
            eps + times,
            labels[rows, winner],
            leaders[rows, winner] / size_m,
            ((winner + 1) % size_m) / size_m,
        )

    return job


def _fixation_job(
    mu: InitialCondition, eps: float, grid: GridConfig, cfg: EngineConfig
) -> FixationJob:
    if isinstance(mu, AtomicCondition):
        return _atomic_job(mu.step, cfg)
    return _diffuse_job(mu, eps, grid, cfg)


def run_fixation(
    mu: InitialCondition,
    eps: float,
    grid: GridConfig,
    cfg: EngineConfig,
    rng: np.random.Generator,
) -> FixationOutcome:
    """Fixation time T and surviving type kappa of one replicate.

    Diffuse starts are entered at eps and T = eps + T(eps); atomic starts evolve from time 0
    and eps is ignored. Fixation is reached when a single label remains, which may happen
    before the boundaries have all met.
    """
    times, kappa, _, _ = _fixation_job(mu, eps, grid, cfg)(rng, 1)
    return FixationOutcome(T=float(times[0]), kappa=float(kappa[0]))


def fixation_samples(
    mu: InitialCondition,
    reps: int,
    eps: float,
    grid: GridConfig,
    cfg: EngineConfig,
    threads: Optional[int] = None,
) -> FixationSamples:
    """Independent fixation outcomes, chunk i drawing from the stream (cfg.rng_seed, i)"""
    results = run_chunks(_fixation_job(mu, eps, grid, cfg), reps, cfg.rng_seed, threads)
    samples = FixationSamples(
        *(np.concatenate([r[field] for r in results]) for field in range(4))
    )
    logger.debug(f"Sampled {reps} fixation times: mean {samples.T.mean():.5f}")
    return samples


def prevailing_interval(
    mu: DiffuseCondition,
    eps: float,
    grid: GridConfig,
    cfg: EngineConfig,
    rng: np.random.Generator,
) -> tuple[CirclePoint, CirclePoint]:
    """Boundaries (U', U'') of the entrance piece whose type eventually prevails"""
    if not isinstance(mu, DiffuseCondition):
        raise InvalidParameter(
            "The prevailing interval is defined for diffuse initial conditions",
            parameter="mu",
        )
    _, _, u_prime, u_second = _diffuse_job(mu, eps, grid, cfg)(rng, 1)
    return CirclePoint(float(u_prime[0])), CirclePoint(float(u_second[0]))


def _probe_labels_forward(
    nu: StepFunction, points: np.ndarray, duration: float, cfg: EngineConfig
) -> Callable[[np.random.Generator, int], np.ndarray]:
    labels = np.asarray(nu.labels)

    def job(rng: np.random.Generator, size: int) -> np.ndarray:
        if nu.n_pieces == 1:
            return np.full((size, points.size), labels[0])
        batch = CoalescingBatch.start(nu.starts, size)
        batch.advance(duration, cfg, rng)
        inside = ~batch.closed[:, :, None] & in_arcs(
            points[None, None, :],
            batch.positions[:, :, None],
            batch.gaps()[:, :, None],
        )
        return labels[np.argmax(inside, axis=1)]

    return job


def _probe_labels_backward(
    nu: StepFunction, points: Sequence[Position], duration: float, cfg: EngineConfig
) -> Callable[[np.random.Generator, int], np.ndarray]:
    slots, order = slot_order(points)

    def job(rng: np.random.Generator, size: int) -> np.ndarray:
        batch = CoalescingBatch.start(slots, size)
        batch.advance(duration, cfg, rng)
        return evaluate_many(nu, to_caller_order(batch.positions, order))

    return job


def moment_duality_check(
    nu: StepFunction,
    s: float,
    t: float,
    probes: Sequence[Probe],
    cfg: EngineConfig,
    reps: int,
    threads: Optional[int] = None,
    stream_key: Sequence[int] = (),
) -> tuple[EmpiricalSummary, EmpiricalSummary]:
    """Estimate both sides of the moment duality for the probes (z_j, k_j).

    forward: frequency of {the state started from nu at time s shows k_j at z_j at time t,
    for all j}. backward: frequency of {nu shows k_j at Z_j(t - s) for all j}, with Z a
    coalescing system started at the probe sites. The two sides draw from the streams keyed
    (*stream_key, 1) and (*stream_key, 2).
    """
    if not 0 <= s < t:
        raise InvalidParameter(f"Need 0 <= s < t, got s = {s}, t = {t}", parameter="s")
    if not probes:
        raise InvalidParameter("At least one probe is needed", parameter="probes")
    points = np.array([reduce_position(float(z)) for z, _ in probes])
    wanted = np.array([float(k) for _, k in probes])
    nu = canonicalize(nu)
    duration = t - s

    forward = _probe_labels_forward(nu, points, duration, cfg)
    backward = _probe_labels_backward(nu, [z for z, _ in probes], duration, cfg)

    def matches(job: Callable[[np.random.Generator, int], np.ndarray]):
        return lambda rng, size: np.all(job(rng, size) == wanted, axis=1).astype(float)

    sides = []
    for side, job in ((1, forward), (2, backward)):
        key = (*stream_key, side)
        samples = run_chunks(matches(job), reps, cfg.rng_seed, threads, stream_key=key)
        sides.append(EmpiricalSummary.from_samples(np.concatenate(samples)))
    logger.debug(
        f"Moment duality with {len(probes)} probes: forward {sides[0].mean:.4f}, "
        f"backward {sides[1].mean:.4f}"
    )
    return sides[0], sides[1]

