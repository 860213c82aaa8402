"""
Various definitions.
"""

from dataclasses import dataclass, field
import math
from typing import Any, Optional, Sequence, Union

import numpy as np

from circoal.constants import (
    DEFAULT_ABS_TOL,
    DEFAULT_DT,
    DEFAULT_GRID_SIZE,
    DEFAULT_MAX_TERMS,
    DEFAULT_SEED,
    KS_THRESHOLD,
    LOW_POWER_REPS,
    N_SIGMA,
    SAFETY_HORIZON,
    TV_SCALE,
)
from circoal.exceptions import InvalidParameter

GAP_SUM_TOLERANCE = 1e-12


def reduce_position(value: float) -> float:
    """Reduce a real number modulo 1 into [0, 1)."""
    position = float(value) % 1.0
    # x % 1.0 rounds to 1.0 for tiny negative x
    if position >= 1.0:
        return 0.0
    return position


@dataclass(frozen=True)
class CirclePoint:
    """Class representing a point on the circle of circumference 1, identified with [0, 1)"""

    position: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", reduce_position(self.position))

    def __float__(self) -> float:
        return self.position


Position = Union[CirclePoint, float]


@dataclass(frozen=True)
class GapVector:
    """Anticlockwise arc lengths between consecutive points of a circular configuration.

    Attributes:
        gaps: (g_1, ..., g_m), each positive, summing to 1
    """

    gaps: tuple[float, ...]

    def __post_init__(self) -> None:
        gaps = tuple(float(gap) for gap in self.gaps)
        object.__setattr__(self, "gaps", gaps)
        if not gaps:
            raise InvalidParameter("A gap vector needs at least one gap", parameter="gaps")
        if any(gap <= 0.0 for gap in gaps):
            raise InvalidParameter(f"Gaps must be positive, got {gaps}", parameter="gaps")
        if abs(math.fsum(gaps) - 1.0) > GAP_SUM_TOLERANCE:
            raise InvalidParameter(
                f"gaps must sum to 1, got {math.fsum(gaps)!r}", parameter="gaps"
            )

    @classmethod
    def equal(cls, m: int) -> "GapVector":
        """Equal spacing of m points"""
        if m < 1:
            raise InvalidParameter(f"m must be positive, got {m}", parameter="m")
        return cls(tuple([1.0 / m] * m))

    @property
    def m(self) -> int:
        """Number of gaps, equal to the number of points"""
        return len(self.gaps)

    def positions(self, start: float = 0.0) -> tuple[float, ...]:
        """Points whose consecutive arcs are these gaps, the first one at `start`"""
        cumulative = np.concatenate(([0.0], np.cumsum(self.gaps[:-1])))
        return tuple(reduce_position(start + offset) for offset in cumulative)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for the infinite series of the closed-form results"""

    abs_tol: float = DEFAULT_ABS_TOL
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise InvalidParameter(
                f"abs_tol must be positive, got {self.abs_tol}", parameter="abs_tol"
            )
        if self.max_terms < 1:
            raise InvalidParameter(
                f"max_terms must be at least 1, got {self.max_terms}",
                parameter="max_terms",
            )


@dataclass(frozen=True)
class EngineConfig:
    """Time discretisation and seeding of the coalescing engine"""

    dt: float = DEFAULT_DT
    rng_seed: int = DEFAULT_SEED
    bridge_correction: bool = True
    horizon: float = SAFETY_HORIZON

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt}", parameter="dt")
        if not self.horizon > 0:
            raise InvalidParameter(
                f"horizon must be positive, got {self.horizon}", parameter="horizon"
            )


@dataclass(frozen=True)
class GridConfig:
    """Finite-grid approximation of the Arratia flow: M particles started at k/M"""

    grid_size: int = DEFAULT_GRID_SIZE
    dt: float = DEFAULT_DT
    bridge_correction: bool = True

    def __post_init__(self) -> None:
        if self.grid_size < 2:
            raise InvalidParameter(
                f"grid size must be at least 2, got {self.grid_size}",
                parameter="grid_size",
            )
        if not self.dt > 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt}", parameter="dt")

    def engine_config(self, rng_seed: int = DEFAULT_SEED) -> EngineConfig:
        """Engine settings matching this grid"""
        return EngineConfig(
            dt=self.dt, rng_seed=rng_seed, bridge_correction=self.bridge_correction
        )


@dataclass(frozen=True)
class CoalescingState:
    """Class to describe one realisation of a circular coalescing Brownian motion.

    Attributes:
        time: elapsed time
        positions: unwrapped particle positions in circular slot order; every slot lies in
            [positions[0], positions[0] + 1] and slots of one block share a position
        closed: closed[j] says slot j and slot j + 1 (mod m) have coalesced
        order: original index of the particle occupying each slot
    """

    time: float
    positions: tuple[float, ...]
    closed: tuple[bool, ...]
    order: tuple[int, ...]

    @property
    def m(self) -> int:
        """Number of particles"""
        return len(self.positions)

    @property
    def alive(self) -> int:
        """Number of blocks"""
        return self.m - sum(self.closed)

    def block_slots(self) -> list[list[int]]:
        """Slots of each block, blocks in circular order starting from the lowest leader slot"""
        m = self.m
        if self.alive == 1:
            # the single block starts right after its only open gap
            first = (self.closed.index(False) + 1) % m
            return [[(first + k) % m for k in range(m)]]
        blocks = []
        for start in range(m):
            if self.closed[start - 1]:
                continue
            members = [start]
            slot = start
            while self.closed[slot]:
                slot = (slot + 1) % m
                members.append(slot)
            blocks.append(members)
        return blocks

    @property
    def blocks(self) -> list[tuple[CirclePoint, frozenset[int]]]:
        """(position, original member indices) per block, in anticlockwise order"""
        return [
            (
                CirclePoint(self.positions[slots[0]]),
                frozenset(self.order[slot] for slot in slots),
            )
            for slots in self.block_slots()
        ]

    @property
    def partition(self) -> tuple[frozenset[int], ...]:
        """Partition of the original indices induced by the particle positions"""
        return tuple(members for _, members in self.blocks)

    @property
    def minimal_elements(self) -> tuple[int, ...]:
        """Minimal original index of each block"""
        return tuple(min(members) for members in self.partition)

    @property
    def gaps(self) -> tuple[float, ...]:
        """Unwrapped arc lengths from slot j to slot j + 1; they sum to 1"""
        positions = self.positions
        return tuple(
            positions[j + 1] - positions[j] for j in range(self.m - 1)
        ) + (positions[0] + 1.0 - positions[-1],)


@dataclass(frozen=True)
class CoalescenceResult:
    """Full-coalescence time and the sorted-order arc [y_i, y_{i+1}) that took the circle"""

    t_coalesce: float
    winner_gap_index: int


@dataclass(frozen=True)
class FlowSnapshot:
    """Grid approximation of the Arratia flow marginal at time t.

    Attributes:
        t: time of the snapshot
        n_clusters: number of distinct images N(t)
        image_points: V_i(t), anticlockwise
        boundaries: U_i(t), start of the preimage interval mapped to V_i(t)
        block_of_grid: cluster index of each grid point k/M
    """

    t: float
    n_clusters: int
    image_points: tuple[CirclePoint, ...]
    boundaries: tuple[CirclePoint, ...]
    block_of_grid: tuple[int, ...]


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function on the circle with values in the type space [0, 1].

    Piece i spans [starts[i], starts[i + 1]) with starts[n] := starts[0] and carries labels[i].
    A single piece covers the whole circle.
    """

    starts: tuple[float, ...]
    labels: tuple[float, ...]

    def __post_init__(self) -> None:
        starts = tuple(reduce_position(start) for start in self.starts)
        labels = tuple(float(label) for label in self.labels)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "labels", labels)
        if not starts or len(starts) != len(labels):
            raise InvalidParameter(
                f"Need one label per piece, got {len(starts)} starts and {len(labels)} labels",
                parameter="labels",
            )
        if any(not 0.0 <= label <= 1.0 for label in labels):
            raise InvalidParameter(
                f"Type labels must lie in [0, 1], got {labels}", parameter="labels"
            )
        if any(a >= b for a, b in zip(starts, starts[1:])):
            raise InvalidParameter(
                f"Piece starts must increase strictly, got {starts}", parameter="starts"
            )

    @classmethod
    def constant(cls, label: float) -> "StepFunction":
        """Single piece carrying `label` everywhere"""
        return cls((0.0,), (label,))

    @property
    def n_pieces(self) -> int:
        """Number of pieces"""
        return len(self.starts)

    def widths(self) -> tuple[float, ...]:
        """Lengths of the pieces"""
        if self.n_pieces == 1:
            return (1.0,)
        starts = self.starts
        return tuple(b - a for a, b in zip(starts, starts[1:])) + (
            starts[0] + 1.0 - starts[-1],
        )


@dataclass(frozen=True)
class AtomicCondition:
    """Initial condition given by a step function of types"""

    step: StepFunction


@dataclass(frozen=True)
class DiffuseCondition:
    """Initial condition whose type at every site is drawn from a diffuse law.

    `sampler` names a registered label sampler taking the site as input; see
    `circoal.stepping_stone.LABEL_SAMPLERS`.
    """

    sampler: str = "uniform"
    params: dict[str, float] = field(default_factory=dict)


InitialCondition = Union[AtomicCondition, DiffuseCondition]


@dataclass(frozen=True)
class FixationOutcome:
    """Fixation time T and surviving type kappa"""

    T: float
    kappa: float


@dataclass(frozen=True)
class FixationSamples:
    """Per-replicate fixation outcomes, one entry per replicate in replicate order.

    Attributes:
        T: fixation times
        kappa: surviving types
        u_prime: start U' of the entrance piece whose type prevailed (nan for atomic starts)
        u_second: end U'' of that piece (nan for atomic starts)
    """

    T: np.ndarray
    kappa: np.ndarray
    u_prime: np.ndarray
    u_second: np.ndarray

    @property
    def n(self) -> int:
        """Number of replicates"""
        return int(self.T.size)

    def outcome(self, index: int) -> FixationOutcome:
        """Outcome of one replicate"""
        return FixationOutcome(T=float(self.T[index]), kappa=float(self.kappa[index]))


@dataclass(frozen=True)
class EmpiricalSummary:
    """Monte Carlo estimate of a mean.

    Attributes:
        n: replicate count
        mean: sample mean
        stderr: sample standard deviation over sqrt(n)
        ecdf: sorted samples, kept when the distribution itself is tested
    """

    n: int
    mean: float
    stderr: float
    ecdf: Optional[tuple[float, ...]] = None

    @classmethod
    def from_samples(
        cls, samples: Union[Sequence[float], np.ndarray], keep_ecdf: bool = False
    ) -> "EmpiricalSummary":
        """Summarise samples; numpy's pairwise summation keeps the mean order-independent
        up to rounding."""
        values = np.asarray(samples, dtype=float)
        n = int(values.size)
        if n == 0:
            raise InvalidParameter("Cannot summarise an empty sample", parameter="samples")
        mean = float(np.sum(values) / n)
        stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        ecdf = tuple(float(value) for value in np.sort(values)) if keep_ecdf else None
        return cls(n=n, mean=mean, stderr=stderr, ecdf=ecdf)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one statistical check.

    With comparison "at_most" the check passes iff statistic <= threshold, with "at_least"
    iff statistic >= threshold.

    Advisory reports (for example low-power runs) are shown but never gate an exit code.
    """

    __test__ = False

    statistic: float
    threshold: float
    passed: bool
    description: str
    advisory: bool = False
    comparison: str = "at_most"

    @classmethod
    def check(
        cls, statistic: float, threshold: float, description: str, advisory: bool = False
    ) -> "TestReport":
        """Build a report whose verdict follows from statistic and threshold"""
        return cls(
            statistic=float(statistic),
            threshold=float(threshold),
            passed=bool(statistic <= threshold),
            description=description,
            advisory=advisory,
        )

    @classmethod
    def check_at_least(
        cls, statistic: float, threshold: float, description: str, advisory: bool = False
    ) -> "TestReport":
        """Build a report that passes when the statistic reaches the threshold"""
        return cls(
            statistic=float(statistic),
            threshold=float(threshold),
            passed=bool(statistic >= threshold),
            description=description,
            advisory=advisory,
            comparison="at_least",
        )


@dataclass(frozen=True)
class Thresholds:
    """Pass thresholds of the statistical checks"""

    n_sigma: float = N_SIGMA
    ks_threshold: float = KS_THRESHOLD
    tv_scale: float = TV_SCALE
    low_power_reps: int = LOW_POWER_REPS


@dataclass(frozen=True)
class SpacingRow:
    """Closed-form values for one configuration of a spacing scan"""

    gaps: GapVector
    mean: float
    cdf_values: tuple[float, ...]


@dataclass(frozen=True)
class SpacingScan:
    """Closed-form scan over configurations of m points.

    Attributes:
        t_list: times at which P{T_m <= t} is tabulated
        rows: one row per configuration, equal spacing included
        argmin_cdf: per time, index of the row minimising P{T_m <= t}
        argmax_mean: index of the row maximising the mean of T_m
        report: check that no configuration beats equal spacing on the mean
    """

    t_list: tuple[float, ...]
    rows: tuple[SpacingRow, ...]
    argmin_cdf: tuple[int, ...]
    argmax_mean: int
    report: TestReport


@dataclass
class ExperimentConfig:
    """Validated parameters of one CLI experiment"""

    command: str
    params: dict[str, Any]
    seed: int
    version: str

    def as_dict(self) -> dict[str, Any]:
        """Flat mapping written into output headers"""
        return {
            "command": self.command,
            "seed": self.seed,
            "version": self.version,
            **self.params,
        }


@dataclass
class ExperimentResult:
    """Everything one CLI experiment writes.

    Attributes:
        config: validated configuration
        rows: main table, one row per t, lambda, cell or configuration
        reports: statistical checks in the order they ran
        tables: additional named tables
        gated: whether the reports decide the exit code
    """

    config: ExperimentConfig
    rows: list[dict[str, Any]]
    reports: list[TestReport]
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    gated: bool = True

    @property
    def passed(self) -> bool:
        """True iff every gated, non-advisory report passed"""
        if not self.gated:
            return True
        return all(report.passed for report in self.reports if not report.advisory)
