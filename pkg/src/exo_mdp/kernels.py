"""Estimation of the exogenous transition kernel from observed traces.

Three estimates are built from the same transition counts:
- the empirical (maximum likelihood) kernel, uniform on unvisited rows,
- its optimistic version, the row inside an L1 ball that maximizes a given
  continuation value (applied inside the planners through `optimistic_rows`),
- a "Lite" kernel estimated from a Bernoulli-thinned subset of the events.

Memory m=1 counts pairs (xi_h, xi_{h+1}) per stage. Memory m=0 treats the
exogenous states as independent across stages and counts the marginal of
xi_h per stage; the kernel row for the transition h -> h+1 is then the
marginal of stage h+1 for every conditioning state.
"""

# python modules
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# our modules
from exo_mdp.errors import InvalidInputError
from exo_mdp.exo_core import ExoKernel, ExoTrace, make_rng

SUPPORTED_MEMORY = (0, 1)


def check_memory(memory: int) -> int:
    if memory not in SUPPORTED_MEMORY:
        raise InvalidInputError(
            f"memory={memory} is not supported, exogenous memory must be one of {SUPPORTED_MEMORY}"
        )
    return memory


@dataclass(frozen=True, eq=False)
class TransitionCounts:
    """Per-stage transition counts plus the ordered event log they came from.

    n has shape (H, Y, Y) for memory 1 and (H, 1, Y) for memory 0.
    The event log is kept as one (E_k, 3) chunk per update, so recording a
    trace never copies earlier events. events joins the chunks into one
    (h, row, column) array in arrival order, the event index is the row position.
    """

    n: np.ndarray
    memory: int
    event_chunks: tuple[np.ndarray, ...] = ()

    @classmethod
    def empty(cls, horizon: int, num_xi: int, memory: int = 1) -> "TransitionCounts":
        check_memory(memory)
        rows = num_xi if memory == 1 else 1
        return cls(
            n=np.zeros((horizon, rows, num_xi), dtype=np.int64),
            memory=memory,
        )

    @property
    def horizon(self) -> int:
        return self.n.shape[0]

    @property
    def num_xi(self) -> int:
        return self.n.shape[2]

    @cached_property
    def events(self) -> np.ndarray:
        if not self.event_chunks:
            return np.empty((0, 3), dtype=np.int64)
        return np.concatenate(self.event_chunks)

    @cached_property
    def num_events(self) -> int:
        return sum(chunk.shape[0] for chunk in self.event_chunks)


def trace_events(trace: ExoTrace, memory: int) -> np.ndarray:
    """Return the (h, row, column) events a trace contributes."""
    xi = trace.xi
    if memory == 1:
        stages = np.arange(len(xi) - 1)
        return np.column_stack([stages, xi[:-1], xi[1:]]).astype(np.int64)
    stages = np.arange(len(xi))
    return np.column_stack([stages, np.zeros_like(xi), xi]).astype(np.int64)


def _counts_from_events(events: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    n = np.zeros(shape, dtype=np.int64)
    if events.shape[0]:
        np.add.at(n, (events[:, 0], events[:, 1], events[:, 2]), 1)
    return n


def update_counts(counts: TransitionCounts, trace: ExoTrace) -> TransitionCounts:
    """Return new counts with the transitions of one trace added."""
    if len(trace) != counts.horizon:
        raise InvalidInputError(f"trace length {len(trace)} != horizon {counts.horizon}")
    if np.any(trace.xi >= counts.num_xi):
        raise InvalidInputError(f"trace entries must lie in [0, {counts.num_xi})")
    new_events = trace_events(trace, counts.memory)
    n = counts.n.copy()
    np.add.at(n, (new_events[:, 0], new_events[:, 1], new_events[:, 2]), 1)
    return TransitionCounts(n=n, memory=counts.memory, event_chunks=(*counts.event_chunks, new_events))


@dataclass(frozen=True, eq=False)
class EmpiricalKernel:
    """Row-stochastic estimate P_hat[h][xi] with the counts behind each row."""

    counts: TransitionCounts
    rows: np.ndarray
    row_counts: np.ndarray

    @property
    def stages(self) -> int:
        return self.rows.shape[0]

    @property
    def num_xi(self) -> int:
        return self.rows.shape[1]

    def row(self, h: int, xi: int) -> np.ndarray:
        return self.rows[h, xi]

    def as_exo_kernel(self) -> ExoKernel:
        return ExoKernel(self.rows)

    @classmethod
    def from_kernel(cls, kernel: ExoKernel, pseudo_count: int) -> "EmpiricalKernel":
        """Wrap a known kernel as if every row had been observed pseudo_count times."""
        n = np.rint(kernel.rows * pseudo_count).astype(np.int64)
        counts = TransitionCounts(n=n, memory=1)
        row_counts = np.full(kernel.rows.shape[:2], int(pseudo_count), dtype=np.int64)
        return cls(counts=counts, rows=kernel.rows.copy(), row_counts=row_counts)


def _normalize(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    totals = n.sum(axis=-1)
    num_xi = n.shape[-1]
    rows = np.full(n.shape, 1.0 / num_xi)
    visited = totals > 0
    rows[visited] = n[visited] / totals[visited][:, None]
    return rows, totals


def estimate_kernel(counts: TransitionCounts) -> EmpiricalKernel:
    """Count ratios on visited rows, uniform 1/|Xi| on unvisited rows."""
    horizon, num_xi = counts.horizon, counts.num_xi
    if counts.memory == 1:
        rows, totals = _normalize(counts.n)
        return EmpiricalKernel(counts=counts, rows=rows, row_counts=totals)

    marginals, marginal_totals = _normalize(counts.n[:, 0, :])
    rows = np.full((horizon, num_xi, num_xi), 1.0 / num_xi)
    row_counts = np.zeros((horizon, num_xi), dtype=np.int64)
    # transition h -> h+1 uses the marginal of stage h+1
    rows[:-1] = marginals[1:, None, :]
    row_counts[:-1] = marginal_totals[1:, None]
    return EmpiricalKernel(counts=counts, rows=rows, row_counts=row_counts)


def kernel_rows(kernel: ExoKernel | EmpiricalKernel, horizon: int, num_xi: int) -> np.ndarray:
    """Return the (H, Y, Y) row array of either kernel type, checked against the model shape."""
    rows = kernel.rows
    expected = (horizon, num_xi, num_xi)
    if rows.shape != expected:
        raise InvalidInputError(f"kernel shape {rows.shape} does not match the model {expected}")
    return rows


@dataclass(frozen=True)
class OptimismConfig:
    """Confidence radius c * sqrt(2 Y log(K Y / delta) / N)."""

    c: float
    episodes: int
    num_xi: int
    delta: float = 0.01

    def __post_init__(self) -> None:
        if self.c < 0:
            raise InvalidInputError(f"c={self.c} must be nonnegative")
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError(f"delta={self.delta} must lie in (0, 1)")
        if self.episodes < 1 or self.num_xi < 1:
            raise InvalidInputError(
                f"episodes={self.episodes} and num_xi={self.num_xi} must be positive"
            )


def bonus_radius(cfg: OptimismConfig, row_count: int | np.ndarray) -> float | np.ndarray:
    """L1 radius for a row observed row_count times (count 0 is evaluated at 1)."""
    log_term = math.log(cfg.episodes * cfg.num_xi / cfg.delta)
    n = np.maximum(np.asarray(row_count, dtype=float), 1.0)
    radius = cfg.c * np.sqrt(2.0 * cfg.num_xi * log_term / n)
    if np.ndim(radius) == 0:
        return float(radius)
    return radius


def optimistic_rows(rows: np.ndarray, values: np.ndarray, bonus: np.ndarray | float) -> np.ndarray:
    """Batched L1-ball optimism by mass transfer.

    For every row, move min(bonus / 2, 1 - row[best]) of probability onto the
    highest-value index (lowest index on ties), taking it from the other
    indices in ascending order of value (ascending index on ties), never
    below zero. rows and values have shape (n, Y), bonus is scalar or (n,).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, num_xi = rows.shape
    bonus = np.broadcast_to(np.minimum(np.asarray(bonus, dtype=float), 2.0), (n,))
    row_index = np.arange(n)

    best = np.argmax(values, axis=1)
    moved = np.minimum(bonus / 2.0, 1.0 - rows[row_index, best])
    moved = np.maximum(moved, 0.0)

    order = np.argsort(values, axis=1, kind="stable")
    donor_mass = np.take_along_axis(rows, order, axis=1)
    donor_mass[order == best[:, None]] = 0.0
    mass_before = np.cumsum(donor_mass, axis=1) - donor_mass
    taken = np.clip(moved[:, None] - mass_before, 0.0, donor_mass)

    result = rows.copy()
    np.put_along_axis(result, order, np.take_along_axis(result, order, axis=1) - taken, axis=1)
    result[row_index, best] += taken.sum(axis=1)
    np.maximum(result, 0.0, out=result)
    return result


def optimistic_row(row: np.ndarray, values: np.ndarray, bonus: float) -> np.ndarray:
    """Probability vector in the L1 ball of radius bonus around row maximizing Q . values."""
    if bonus < 0:
        raise InvalidInputError(f"bonus={bonus} must be nonnegative")
    return optimistic_rows(np.asarray(row)[None, :], np.asarray(values)[None, :], bonus)[0]


@dataclass(frozen=True)
class SubsampleConfig:
    ratio: float
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio <= 1.0:
            raise InvalidInputError(f"subsample ratio={self.ratio} must lie in (0, 1]")


def subsample_counts(counts: TransitionCounts, cfg: SubsampleConfig) -> TransitionCounts:
    """Keep each recorded event independently with probability cfg.ratio.

    Event i is kept iff the i-th uniform of the stream seeded by cfg.seed is
    below the ratio, so the decision for an event does not change as more
    events arrive.
    """
    uniforms = make_rng(cfg.seed, 0).random(counts.num_events)
    kept = counts.events[uniforms < cfg.ratio]
    n = _counts_from_events(kept, counts.n.shape)
    return TransitionCounts(n=n, memory=counts.memory, event_chunks=(kept,))
