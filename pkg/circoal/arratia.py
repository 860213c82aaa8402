"""
Grid approximation of the Arratia flow on the circle.

M coalescing Brownian motions start at the grid points k/M. At time t the grid splits into
circularly consecutive blocks; block i starts at the grid point U_i and sits at the image V_i.
"""

# pylint: disable=logging-fstring-interpolation

from typing import Literal, Optional, Sequence

import numpy as np

from circoal.circle import arc_length, offset
from circoal.engine import (
    CoalescingBatch,
    coalesced,
    leaders_of,
    run_until,
    run_until_coalesced,
)
from circoal.exceptions import InvalidParameter
from circoal.logger import logger
from circoal.models import CirclePoint, EmpiricalSummary, FlowSnapshot, GridConfig
from circoal.streams import run_chunks

Side = Literal["U", "V"]
Arc = tuple[float, float]


def grid_points(grid_size: int) -> np.ndarray:
    """Starting positions k/M"""
    return np.arange(grid_size) / grid_size


def run_flow(
    t: float, grid: GridConfig, reps: int, rng: np.random.Generator
) -> CoalescingBatch:
    """`reps` independent grid systems evolved to time t"""
    if not t > 0:
        raise InvalidParameter(f"t must be positive, got {t}", parameter="t")
    batch = CoalescingBatch.start(grid_points(grid.grid_size), reps)
    batch.advance(t, grid.engine_config(), rng)
    return batch


def block_starts(batch: CoalescingBatch) -> np.ndarray:
    """Mask of the grid points that are the anticlockwise-first member of their block"""
    return ~np.roll(batch.closed, 1, axis=1)


def images(batch: CoalescingBatch) -> np.ndarray:
    """Position of every grid point's block, reduced to [0, 1)"""
    return offset(batch.positions, 0.0)


def flow_snapshot(t: float, grid: GridConfig, rng: np.random.Generator) -> FlowSnapshot:
    """One realisation of the flow marginal at time t on the grid.

    Blocks are listed by increasing U_i; V_i is paired with U_i, so the images follow the
    anticlockwise order of the boundaries.
    """
    batch = run_flow(t, grid, 1, rng)
    starts = np.flatnonzero(block_starts(batch)[0])
    positions = images(batch)[0]
    leaders = leaders_of(batch.closed)[0]
    return FlowSnapshot(
        t=t,
        n_clusters=int(starts.size),
        image_points=tuple(CirclePoint(float(positions[k])) for k in starts),
        boundaries=tuple(CirclePoint(k / grid.grid_size) for k in starts),
        block_of_grid=tuple(int(i) for i in np.searchsorted(starts, leaders)),
    )


def cluster_counts(
    t: float,
    grid: GridConfig,
    reps: int,
    seed: int,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Number of distinct images N(t) of `reps` independent grid systems"""

    def job(rng: np.random.Generator, size: int) -> np.ndarray:
        return run_flow(t, grid, size, rng).alive()

    counts = np.concatenate(run_chunks(job, reps, seed, threads))
    logger.debug(f"Mean cluster count at t = {t} (M = {grid.grid_size}): {counts.mean():.4f}")
    return counts


def coupled_cluster_counts(
    t: float,
    grid: GridConfig,
    reps: int,
    seed: int,
    threads: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster counts of the M-point grid and of the 2M-point grid on the same paths.

    The particles started at even points of the 2M grid form a coalescing system started at
    the M grid, so both counts come from one run and their difference is the resolution gain.
    """
    fine = GridConfig(
        grid_size=2 * grid.grid_size, dt=grid.dt, bridge_correction=grid.bridge_correction
    )

    def job(rng: np.random.Generator, size: int) -> np.ndarray:
        batch = run_flow(t, fine, size, rng)
        seen = np.zeros(batch.positions.shape, dtype=bool)
        seen[np.arange(size)[:, None], batch.leaders()[:, ::2]] = True
        return np.stack((seen.sum(axis=1), batch.alive()), axis=1)

    counts = np.concatenate(run_chunks(job, reps, seed, threads))
    return counts[:, 0], counts[:, 1]


def tau_sample(grid: GridConfig, rng: np.random.Generator) -> float:
    """Time at which the grid system collapses to a single point"""
    return run_until_coalesced(
        list(grid_points(grid.grid_size)), grid.engine_config(), rng
    ).t_coalesce


def tau_samples(
    grid: GridConfig, reps: int, seed: int, threads: Optional[int] = None
) -> np.ndarray:
    """Independent samples of the collapse time of the grid system"""
    cfg = grid.engine_config(seed)

    def job(rng: np.random.Generator, size: int) -> np.ndarray:
        batch = CoalescingBatch.start(grid_points(grid.grid_size), size)
        times, _ = run_until(batch, coalesced, cfg, rng)
        return times

    return np.concatenate(run_chunks(job, reps, seed, threads))


def _check_disjoint(arcs: Sequence[Arc]) -> list[tuple[float, float]]:
    """Start and length of each arc; open arcs may share endpoints but nothing else"""
    spans = sorted((float(a) % 1.0, arc_length(a, b)) for a, b in arcs)
    for start, length in spans:
        if not length > 0:
            raise InvalidParameter(
                f"Test arcs must have positive length, got start {start}", parameter="arcs"
            )
    for (start, length), (next_start, _) in zip(spans, spans[1:] + spans[:1]):
        room = arc_length(start, next_start) if len(spans) > 1 else 1.0
        if length > room + 1e-12:
            raise InvalidParameter(f"Test arcs overlap: {list(arcs)}", parameter="arcs")
    return spans


def avoids(
    points: np.ndarray, present: np.ndarray, spans: Sequence[tuple[float, float]]
) -> np.ndarray:
    """Rows whose present points all lie outside the open arcs"""
    hit = np.zeros(points.shape[0], dtype=bool)
    for start, length in spans:
        distance = offset(points, start)
        hit |= (present & (distance > 0.0) & (distance < length)).any(axis=1)
    return ~hit


def avoidance_probability(
    side: Side,
    arcs: Sequence[Arc],
    t: float,
    grid: GridConfig,
    reps: int,
    seed: int,
    threads: Optional[int] = None,
) -> EmpiricalSummary:
    """Estimate P{no U_i(t) (side "U") or no V_i(t) (side "V") falls in the union of the open
    anticlockwise arcs (a, b)}.
    """
    if side not in ("U", "V"):
        raise InvalidParameter(f"side must be 'U' or 'V', got {side!r}", parameter="side")
    if not arcs:
        return EmpiricalSummary.from_samples(np.ones(reps))
    spans = _check_disjoint(arcs)

    def job(rng: np.random.Generator, size: int) -> np.ndarray:
        batch = run_flow(t, grid, size, rng)
        if side == "U":
            points = np.broadcast_to(grid_points(grid.grid_size), batch.positions.shape)
        else:
            points = images(batch)
        return avoids(points, block_starts(batch), spans).astype(float)

    key = (0,) if side == "U" else (1,)
    samples = np.concatenate(run_chunks(job, reps, seed, threads, stream_key=key))
    return EmpiricalSummary.from_samples(samples)
