"""
Circular coalescing Brownian motion.

A batch holds replicates of one system as arrays of shape (replicates, m). Slots are kept in
anticlockwise order with unwrapped positions, and closed[:, j] records that slot j and slot j + 1
(mod m) have met. Blocks are maximal runs of slots joined by closed gaps; the first slot of a run
is its leader and carries the block's Brownian increment. At least one gap is always open, and
when a single block remains its only open gap has length 1.
"""

# pylint: disable=logging-fstring-interpolation

import math
from typing import Callable, Optional, Sequence

import numpy as np

from circoal.circle import arc_length, circular_sort, in_arcs, offset
from circoal.exceptions import (
    CoalescenceHorizonExceeded,
    DegenerateConfiguration,
    InvalidParameter,
)
from circoal.logger import logger
from circoal.models import (
    CoalescenceResult,
    CoalescingState,
    EngineConfig,
    Position,
    reduce_position,
)
from circoal.streams import run_chunks

FENCE_SUM_TOLERANCE = 1e-9


def leaders_of(closed: np.ndarray) -> np.ndarray:
    """Leader slot of every slot; a run wrapping past slot m-1 is led by its slot after 0."""
    slots = np.arange(closed.shape[1])
    is_start = ~np.roll(closed, 1, axis=1)
    leaders = np.maximum.accumulate(np.where(is_start, slots, -1), axis=1)
    return np.where(leaders < 0, leaders[:, -1:], leaders)


def gaps_of(positions: np.ndarray) -> np.ndarray:
    """Unwrapped arcs from slot j to slot j + 1, the last one closing the circle"""
    return np.concatenate(
        (np.diff(positions, axis=1), positions[:, :1] + 1.0 - positions[:, -1:]), axis=1
    )


class CoalescingBatch:
    """Replicates of a circular coalescing Brownian motion advanced in lockstep.

    `labels` optionally assigns an integer type code to every gap (the piece of a step function
    that starts at the slot); it follows the rows when the batch is filtered.
    """

    def __init__(
        self,
        positions: np.ndarray,
        closed: np.ndarray,
        time: float = 0.0,
        labels: Optional[np.ndarray] = None,
    ) -> None:
        self.positions = np.array(positions, dtype=float)
        self.closed = np.array(closed, dtype=bool)
        self.time = float(time)
        self.labels = labels

    @classmethod
    def start(cls, sorted_positions: Sequence[float], reps: int) -> "CoalescingBatch":
        """`reps` copies of the system started at the given anticlockwise positions"""
        row = np.asarray(sorted_positions, dtype=float)
        return cls(
            np.tile(row, (reps, 1)), np.zeros((reps, row.size), dtype=bool)
        )

    @property
    def n(self) -> int:
        """Number of replicates"""
        return self.positions.shape[0]

    @property
    def m(self) -> int:
        """Number of slots"""
        return self.positions.shape[1]

    def alive(self) -> np.ndarray:
        """Number of blocks per replicate"""
        return self.m - self.closed.sum(axis=1)

    def gaps(self) -> np.ndarray:
        """Unwrapped arc lengths"""
        return gaps_of(self.positions)

    def leaders(self) -> np.ndarray:
        """Leader slot per slot"""
        return leaders_of(self.closed)

    def select(self, rows: np.ndarray) -> "CoalescingBatch":
        """Sub-batch of the given rows (index array or boolean mask)"""
        return CoalescingBatch(
            self.positions[rows],
            self.closed[rows],
            self.time,
            None if self.labels is None else self.labels[rows],
        )

    def snap(self) -> None:
        """Put every slot exactly at its leader's position"""
        leaders = self.leaders()
        wrapped = leaders > np.arange(self.m)
        self.positions = np.take_along_axis(self.positions, leaders, axis=1) - wrapped

    def step(
        self, dt: float, rng: np.random.Generator, bridge_correction: bool = True
    ) -> None:
        """Advance all replicates by dt.

        Every block moves by an independent N(0, dt) increment. An open gap closes if it is
        non-positive at the end of the step or, with bridge correction, if the bridge of the
        variance-2 gap process between its positive endpoint values d0, d1 touches zero, which
        happens with probability exp(-d0 * d1 / dt). Merges take effect at the step end, all
        in one sweep, so chains of merges are allowed.
        """
        if not dt > 0:
            raise InvalidParameter(f"dt must be positive, got {dt}", parameter="dt")
        old_gaps = self.gaps()
        noise = rng.standard_normal(self.positions.shape) * math.sqrt(dt)
        self.positions += np.take_along_axis(noise, self.leaders(), axis=1)
        new_gaps = self.gaps()

        is_open = ~self.closed
        hit = is_open & (new_gaps <= 0.0)
        if bridge_correction:
            straddle = is_open & (old_gaps > 0.0) & (new_gaps > 0.0)
            crossing = np.exp(-np.clip(old_gaps * new_gaps, 0.0, None) / dt)
            hit |= straddle & (rng.random(self.positions.shape) < crossing)

        while hit.any():
            self._close(hit, new_gaps)
            # a leader that overtook the next block closes that gap as well
            new_gaps = self.gaps()
            hit = ~self.closed & (new_gaps <= 0.0)
        self.time += dt

    def _close(self, hit: np.ndarray, new_gaps: np.ndarray) -> None:
        closed = self.closed | hit
        full = closed.all(axis=1)
        if full.any():
            # one gap must stay open: the one that ended the step widest
            rows = np.flatnonzero(full)
            keep = np.argmax(np.where(hit[rows], new_gaps[rows], -np.inf), axis=1)
            closed[rows, keep] = False
        self.closed = closed
        self.snap()

    def advance(
        self, duration: float, cfg: EngineConfig, rng: np.random.Generator
    ) -> None:
        """Advance by `duration` in steps of cfg.dt, the last one possibly shorter"""
        if duration < 0:
            raise InvalidParameter(
                f"Cannot evolve backwards in time, got {duration}", parameter="t_target"
            )
        full_steps = int(math.floor(duration / cfg.dt + 1e-9))
        start = self.time
        for _ in range(full_steps):
            self.step(cfg.dt, rng, cfg.bridge_correction)
        remainder = duration - full_steps * cfg.dt
        if remainder > 1e-12 * max(1.0, duration):
            self.step(remainder, rng, cfg.bridge_correction)
        self.time = start + duration


StopRule = Callable[[CoalescingBatch], np.ndarray]


def coalesced(batch: CoalescingBatch) -> np.ndarray:
    """Rows where a single block remains"""
    return batch.alive() == 1


def single_label(batch: CoalescingBatch) -> np.ndarray:
    """Rows where every open gap carries the same type code"""
    if batch.labels is None:
        return coalesced(batch)
    codes = np.where(batch.closed, -1, batch.labels)
    highest = codes.max(axis=1)
    lowest = np.where(batch.closed, np.iinfo(codes.dtype).max, batch.labels).min(axis=1)
    return highest == lowest


def run_until(
    batch: CoalescingBatch,
    stop: StopRule,
    cfg: EngineConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, CoalescingBatch]:
    """Step every replicate until `stop` holds for it.

    Returns the stopping times (measured from the batch's current time) and a batch holding
    each replicate's state at its own stopping time. Finished rows are dropped from the working
    batch so late replicates do not pay for early ones.
    """
    origin = batch.time
    final = batch.select(np.arange(batch.n))
    times = np.zeros(batch.n)
    working = batch.select(np.arange(batch.n))
    active = np.arange(batch.n)

    done = stop(working)
    while True:
        if done.any():
            rows = active[done]
            times[rows] = working.time - origin
            final.positions[rows] = working.positions[done]
            final.closed[rows] = working.closed[done]
            working = working.select(~done)
            active = active[~done]
        if active.size == 0:
            break
        if working.time - origin > cfg.horizon:
            logger.error(
                f"{active.size} replicates still running at t = {working.time - origin:.3f}"
            )
            raise CoalescenceHorizonExceeded(
                f"Safety horizon {cfg.horizon} reached", unfinished=int(active.size)
            )
        working.step(cfg.dt, rng, cfg.bridge_correction)
        done = stop(working)
    final.time = float("nan")
    return times, final


def winner_gaps(batch: CoalescingBatch) -> np.ndarray:
    """Index of the only open gap of each fully coalesced replicate"""
    return np.argmin(batch.closed, axis=1)


def init(positions: Sequence[Position]) -> CoalescingState:
    """One block per position at time 0, slots in anticlockwise order.
    Coincident positions must be merged by the caller.
    """
    slots, order = slot_order(positions)
    return CoalescingState(
        time=0.0,
        positions=tuple(slots),
        closed=tuple([False] * len(slots)),
        order=tuple(int(i) for i in order),
    )


def _as_batch(state: CoalescingState) -> CoalescingBatch:
    return CoalescingBatch(
        np.array([state.positions]), np.array([state.closed]), time=state.time
    )


def _as_state(batch: CoalescingBatch, order: tuple[int, ...]) -> CoalescingState:
    return CoalescingState(
        time=batch.time,
        positions=tuple(batch.positions[0].tolist()),
        closed=tuple(bool(c) for c in batch.closed[0]),
        order=order,
    )


def step(
    state: CoalescingState, cfg: EngineConfig, rng: np.random.Generator
) -> CoalescingState:
    """One time step of length cfg.dt"""
    batch = _as_batch(state)
    batch.step(cfg.dt, rng, cfg.bridge_correction)
    return _as_state(batch, state.order)


def evolve_to(
    state: CoalescingState,
    t_target: float,
    cfg: EngineConfig,
    rng: np.random.Generator,
) -> CoalescingState:
    """Advance the state to time t_target"""
    if t_target < state.time:
        raise InvalidParameter(
            f"Target time {t_target} precedes state time {state.time}",
            parameter="t_target",
        )
    if t_target == state.time:
        return state
    batch = _as_batch(state)
    batch.advance(t_target - state.time, cfg, rng)
    return _as_state(batch, state.order)


def run_until_coalesced(
    positions: Sequence[Position], cfg: EngineConfig, rng: np.random.Generator
) -> CoalescenceResult:
    """Time T_m at which all m >= 2 particles have met, and the arc that took the circle"""
    if len(positions) < 2:
        raise InvalidParameter("T_m needs at least two particles", parameter="positions")
    state = init(positions)
    times, final = run_until(_as_batch(state), coalesced, cfg, rng)
    return CoalescenceResult(
        t_coalesce=float(times[0]), winner_gap_index=int(winner_gaps(final)[0])
    )


def sample_coalescence(
    positions: Sequence[Position],
    reps: int,
    cfg: EngineConfig,
    threads: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Coalescence times and winner arcs of `reps` independent replicates.

    Chunk i of the replicates draws from the stream (cfg.rng_seed, i).
    """
    if len(positions) < 2:
        raise InvalidParameter("T_m needs at least two particles", parameter="positions")
    sorted_points, _ = circular_sort(positions)
    start = [p.position for p in sorted_points]

    def job(rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        times, final = run_until(CoalescingBatch.start(start, size), coalesced, cfg, rng)
        return times, winner_gaps(final)

    results = run_chunks(job, reps, cfg.rng_seed, threads)
    times = np.concatenate([r[0] for r in results])
    winners = np.concatenate([r[1] for r in results])
    logger.debug(
        f"Sampled {reps} coalescence times for m = {len(start)}: mean {times.mean():.5f}"
    )
    return times, winners


def fence_lengths(fence: np.ndarray) -> np.ndarray:
    """Arc lengths [z_j, z_{j+1}) of a fence given in anticlockwise order"""
    if fence.size == 1:
        return np.ones(1)
    if np.unique(fence).size != fence.size:
        raise DegenerateConfiguration("Fence points must be distinct", points=fence.tolist())
    lengths = np.array(
        [arc_length(fence[j], fence[(j + 1) % fence.size]) for j in range(fence.size)]
    )
    if abs(lengths.sum() - 1.0) > FENCE_SUM_TOLERANCE:
        raise InvalidParameter(
            f"Fence must be in anticlockwise order, got {fence.tolist()}", parameter="fence"
        )
    return lengths


def indicators(
    particles: np.ndarray, fence: np.ndarray, fence_gaps: np.ndarray
) -> np.ndarray:
    """Batched indicator arrays: entry [..., i, j] says particle i lies in fence arc j.

    particles has shape (..., m); fence and fence_gaps have shape (..., n).
    """
    return in_arcs(
        particles[..., :, None], fence[..., None, :], fence_gaps[..., None, :]
    ).astype(np.int8)


def indicator_array(
    particles_at_t: Sequence[Position],
    fence: Sequence[Position],
    fence_gaps: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """m x n matrix with entry 1 iff particle i lies in [z_j, z_{j+1}), z_{n+1} := z_1.

    `fence_gaps` gives the unwrapped arc lengths of a fence whose points may have coalesced;
    without it the arcs follow from distinct fence points and a single point covers the circle.
    """
    points = np.array([reduce_position(float(p)) for p in particles_at_t])
    fence_points = np.array([reduce_position(float(z)) for z in fence])
    lengths = (
        fence_lengths(fence_points)
        if fence_gaps is None
        else np.asarray(fence_gaps, dtype=float)
    )
    return indicators(points, fence_points, lengths)


def slot_order(points: Sequence[Position]) -> tuple[list[float], np.ndarray]:
    """Sorted positions, and the caller index of the point in each slot"""
    sorted_points, _ = circular_sort(points)
    reduced = np.array([reduce_position(float(p)) for p in points])
    return [p.position for p in sorted_points], np.argsort(reduced, kind="stable")


def to_caller_order(values: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Reorder slot columns so column i belongs to the caller's point i"""
    result = np.empty_like(values)
    result[:, order] = values
    return result


def forward_indicators(
    starts: Sequence[Position],
    fence: Sequence[Position],
    t: float,
    cfg: EngineConfig,
    reps: int,
    threads: Optional[int] = None,
    stream_key: Sequence[int] = (),
) -> np.ndarray:
    """Samples of the arrays 1{Y_i(t) in [z_j, z_{j+1})} for a coalescing system Y started at
    `starts`; the fence z stays fixed. Shape (reps, m, n).
    """
    slots, order = slot_order(starts)
    fence_points = np.array([reduce_position(float(z)) for z in fence])
    lengths = fence_lengths(fence_points)

    def job(rng: np.random.Generator, size: int) -> np.ndarray:
        batch = CoalescingBatch.start(slots, size)
        batch.advance(t, cfg, rng)
        particles = to_caller_order(offset(batch.positions, 0.0), order)
        return indicators(particles, fence_points, lengths)

    return np.concatenate(
        run_chunks(job, reps, cfg.rng_seed, threads, stream_key=stream_key)
    )


def backward_indicators(
    starts: Sequence[Position],
    fence: Sequence[Position],
    t: float,
    cfg: EngineConfig,
    reps: int,
    threads: Optional[int] = None,
    stream_key: Sequence[int] = (),
) -> np.ndarray:
    """Samples of the arrays 1{y_i in [Z_j(t), Z_{j+1}(t))} for a coalescing fence Z started at
    `fence` (anticlockwise); the points y stay fixed. Shape (reps, m, n).

    Arcs between coalesced fence points are empty, and the last open arc covers the circle.
    """
    particles = np.array([reduce_position(float(y)) for y in starts])
    fence_points = np.array([reduce_position(float(z)) for z in fence])
    fence_lengths(fence_points)
    slots, order = slot_order(fence)

    def job(rng: np.random.Generator, size: int) -> np.ndarray:
        batch = CoalescingBatch.start(slots, size)
        batch.advance(t, cfg, rng)
        positions = to_caller_order(batch.positions, order)
        arcs = to_caller_order(batch.gaps(), order)
        return indicators(particles, positions, arcs)

    return np.concatenate(
        run_chunks(job, reps, cfg.rng_seed, threads, stream_key=stream_key)
    )
