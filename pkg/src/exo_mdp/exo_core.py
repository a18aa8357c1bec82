"""Domain types for tabular Exo-MDPs and the episode simulator.

An Exo-MDP state splits into an endogenous part x (controlled) and an
exogenous part xi that evolves as a Markov chain independent of the actions.
The endogenous transition is deterministic once the next exogenous state is
drawn: x_{h+1} = f[x_h][a_h][xi_{h+1}].

Stage indexing: documentation counts stages 1..H, arrays store stage h at
index h - 1. A value table therefore has H + 1 slices and slice H (stage H+1)
is the zero terminal value.

Randomness: every stochastic operation takes an explicit numpy Generator.
`make_rng` builds a PCG64 stream from a root seed and a tuple of integer keys
(counter-based splitting through SeedSequence spawn keys), so two calls with
the same (seed, keys) return identical streams.
"""

# python modules
import logging
from dataclasses import dataclass

import numpy as np

# our modules
from exo_mdp.errors import InvalidInputError

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-12

# substream keys, see make_rng
STREAM_ENVIRONMENT = 0
STREAM_EPISODE = 1
STREAM_EVALUATION = 2
STREAM_SUBSAMPLE = 3


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a reproducible PCG64 generator for the substream (seed, *keys)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def check_index(name: str, value: int, upper: int) -> int:
    """Validate 0 <= value < upper, return it as an int."""
    if not 0 <= int(value) < upper:
        raise InvalidInputError(f"{name}={value} is out of range [0, {upper})")
    return int(value)


def check_probability_rows(name: str, rows: np.ndarray) -> None:
    """Validate that the last axis of rows holds probability vectors."""
    if np.any(rows < 0.0) or np.any(rows > 1.0 + ROW_SUM_TOLERANCE):
        raise InvalidInputError(f"{name} has entries outside [0, 1]")
    sums = rows.sum(axis=-1)
    worst = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
    if worst > ROW_SUM_TOLERANCE:
        raise InvalidInputError(f"{name} rows do not sum to 1 (max deviation {worst:.3e})")


@dataclass(frozen=True, eq=False)
class ExoKernel:
    """Stage-indexed exogenous transition kernel, rows[h][xi] = P_h(. | xi)."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 3 or rows.shape[1] != rows.shape[2]:
            raise InvalidInputError(f"kernel rows must have shape (H, Y, Y), got {rows.shape}")
        check_probability_rows("kernel", rows)
        object.__setattr__(self, "rows", _frozen(rows))

    @property
    def stages(self) -> int:
        return self.rows.shape[0]

    @property
    def num_xi(self) -> int:
        return self.rows.shape[1]

    def row(self, h: int, xi: int) -> np.ndarray:
        """Return P_h(. | xi) for 0-based stage h."""
        return self.rows[h, xi]


@dataclass(frozen=True, eq=False)
class TabularExoMdp:
    """Tabular Exo-MDP.

    reward[x][a][xi] is time invariant, endo_map[x][a][xi_next] gives the next
    endogenous state, initial_dist is the distribution of xi_1 (uniform when
    omitted).
    """

    horizon: int
    reward: np.ndarray
    endo_map: np.ndarray
    true_kernel: ExoKernel
    initial_dist: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise InvalidInputError(f"horizon={self.horizon} must be positive")
        reward = np.array(self.reward, dtype=float)
        endo_map = np.array(self.endo_map, dtype=np.int64)
        if reward.ndim != 3:
            raise InvalidInputError(f"reward must have shape (X, A, Y), got {reward.shape}")
        if endo_map.shape != reward.shape:
            raise InvalidInputError(
                f"endo_map shape {endo_map.shape} does not match reward shape {reward.shape}"
            )
        num_x, _, num_xi = reward.shape
        if np.any(endo_map < 0) or np.any(endo_map >= num_x):
            raise InvalidInputError(f"endo_map entries must lie in [0, {num_x})")
        if self.true_kernel.stages != self.horizon or self.true_kernel.num_xi != num_xi:
            raise InvalidInputError(
                f"kernel shape {self.true_kernel.rows.shape} does not match "
                f"horizon={self.horizon}, num_xi={num_xi}"
            )
        if self.initial_dist is None:
            initial_dist = np.full(num_xi, 1.0 / num_xi)
        else:
            initial_dist = np.array(self.initial_dist, dtype=float)
            if initial_dist.shape != (num_xi,):
                raise InvalidInputError(f"initial_dist must have length {num_xi}")
            check_probability_rows("initial_dist", initial_dist)
        object.__setattr__(self, "reward", _frozen(reward))
        object.__setattr__(self, "endo_map", _frozen(endo_map))
        object.__setattr__(self, "initial_dist", _frozen(initial_dist))

    @property
    def num_x(self) -> int:
        return self.reward.shape[0]

    @property
    def num_a(self) -> int:
        return self.reward.shape[1]

    @property
    def num_xi(self) -> int:
        return self.reward.shape[2]

    @property
    def num_policies(self) -> int:
        """Number of deterministic Markov policies, |A|^(H |X| |Xi|)."""
        return self.num_a ** (self.horizon * self.num_x * self.num_xi)


@dataclass(frozen=True, eq=False)
class ExoTrace:
    """Realized exogenous states xi_1..xi_H of one episode."""

    xi: np.ndarray

    def __post_init__(self) -> None:
        xi = np.array(self.xi, dtype=np.int64).reshape(-1)
        if np.any(xi < 0):
            raise InvalidInputError("trace entries must be nonnegative")
        object.__setattr__(self, "xi", _frozen(xi))

    def __len__(self) -> int:
        return len(self.xi)


@dataclass(frozen=True, eq=False)
class TabularPolicy:
    """Deterministic Markov policy, action[h][x][xi]."""

    action: np.ndarray

    def __post_init__(self) -> None:
        action = np.array(self.action, dtype=np.int64)
        if action.ndim != 3:
            raise InvalidInputError(f"policy must have shape (H, X, Y), got {action.shape}")
        if np.any(action < 0):
            raise InvalidInputError("policy actions must be nonnegative")
        object.__setattr__(self, "action", _frozen(action))

    def check_against(self, mdp: TabularExoMdp) -> None:
        expected = (mdp.horizon, mdp.num_x, mdp.num_xi)
        if self.action.shape != expected:
            raise InvalidInputError(f"policy shape {self.action.shape} != {expected}")
        if np.any(self.action >= mdp.num_a):
            raise InvalidInputError(f"policy actions must lie in [0, {mdp.num_a})")


@dataclass(frozen=True, eq=False)
class ValueTable:
    """V[h][x][xi] for stages 1..H+1, the last slice is the zero terminal value."""

    v: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.v, dtype=float)
        if v.ndim != 3:
            raise InvalidInputError(f"value table must have shape (H+1, X, Y), got {v.shape}")
        if np.any(v[-1] != 0.0):
            raise InvalidInputError("terminal value slice must be zero")
        object.__setattr__(self, "v", _frozen(v))

    def stage_one(self) -> np.ndarray:
        return self.v[0]


@dataclass(frozen=True, eq=False)
class EpisodeLog:
    """One simulated episode."""

    trace: ExoTrace
    endo: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    @property
    def total_reward(self) -> float:
        return float(np.sum(self.rewards))


def sample_initial_xi(mdp: TabularExoMdp, rng: np.random.Generator) -> int:
    """Draw xi_1 from the configured initial distribution."""
    return int(rng.choice(mdp.num_xi, p=mdp.initial_dist))


def sample_exo_trace(kernel: ExoKernel, horizon: int, xi1: int, rng: np.random.Generator) -> ExoTrace:
    """Draw xi_1..xi_H from the kernel, starting at xi1.

    Uses one uniform per transition (inverse CDF), so the stream consumption
    does not depend on anything but the horizon.
    """
    xi1 = check_index("xi1", xi1, kernel.num_xi)
    return ExoTrace(sample_exo_traces(kernel, horizon, np.array([xi1]), rng)[0])


def sample_exo_traces(kernel: ExoKernel, horizon: int, xi1: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw a batch of traces, shape (B, H), one row per start in xi1.

    Consumes a (B, H - 1) block of uniforms; row b equals what sample_exo_trace
    would draw for xi1[b] from the same stream when B = 1.
    """
    xi1 = np.asarray(xi1, dtype=np.int64).reshape(-1)
    if np.any((xi1 < 0) | (xi1 >= kernel.num_xi)):
        raise InvalidInputError(f"xi1 entries must lie in [0, {kernel.num_xi})")
    if horizon < 1 or horizon > kernel.stages:
        raise InvalidInputError(f"horizon={horizon} must lie in [1, {kernel.stages}]")
    xi = np.empty((xi1.size, horizon), dtype=np.int64)
    xi[:, 0] = xi1
    uniforms = rng.random((xi1.size, horizon - 1))
    for h in range(horizon - 1):
        cdf = np.cumsum(kernel.rows[h][xi[:, h]], axis=1)
        # count of cdf entries <= u, i.e. searchsorted side="right"
        nxt = np.sum(uniforms[:, h][:, None] >= cdf, axis=1)
        xi[:, h + 1] = np.minimum(nxt, kernel.num_xi - 1)
    return xi


def simulate_episode(
    mdp: TabularExoMdp,
    policy: TabularPolicy,
    x1: int,
    xi1: int,
    rng: np.random.Generator,
) -> EpisodeLog:
    """Roll one episode of the true environment under policy."""
    x1 = check_index("x1", x1, mdp.num_x)
    policy.check_against(mdp)
    trace = sample_exo_trace(mdp.true_kernel, mdp.horizon, xi1, rng)
    endo, actions, rewards = _replay(mdp, policy, x1, trace.xi)
    return EpisodeLog(trace=trace, endo=endo, actions=actions, rewards=rewards)


def _replay(
    mdp: TabularExoMdp,
    policy: TabularPolicy,
    x1: int,
    xi: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    horizon = mdp.horizon
    endo = np.empty(horizon, dtype=np.int64)
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=float)
    x = x1
    for h in range(horizon):
        endo[h] = x
        a = int(policy.action[h, x, xi[h]])
        actions[h] = a
        rewards[h] = mdp.reward[x, a, xi[h]]
        if h + 1 < horizon:
            x = int(mdp.endo_map[x, a, xi[h + 1]])
    return endo, actions, rewards


def hindsight_value(mdp: TabularExoMdp, policy: TabularPolicy, x1: int, trace: ExoTrace) -> float:
    """Return the episode return of policy replayed along a fixed exogenous trace."""
    x1 = check_index("x1", x1, mdp.num_x)
    if len(trace) != mdp.horizon:
        raise InvalidInputError(f"trace length {len(trace)} != horizon {mdp.horizon}")
    if np.any(trace.xi >= mdp.num_xi):
        raise InvalidInputError(f"trace entries must lie in [0, {mdp.num_xi})")
    policy.check_against(mdp)
    _, _, rewards = _replay(mdp, policy, x1, trace.xi)
    return float(np.sum(rewards))


def traces_to_array(traces: list[ExoTrace], horizon: int) -> np.ndarray:
    """Stack traces into an (n, H) integer array."""
    if not traces:
        return np.empty((0, horizon), dtype=np.int64)
    array = np.stack([t.xi for t in traces])
    if array.shape[1] != horizon:
        raise InvalidInputError(f"trace length {array.shape[1]} != horizon {horizon}")
    return array


def hindsight_values(mdp: TabularExoMdp, policy_action: np.ndarray, x1: int, xi: np.ndarray) -> np.ndarray:
    """Vectorized hindsight replay of one policy over an (n, H) array of traces."""
    n = xi.shape[0]
    x = np.full(n, x1, dtype=np.int64)
    total = np.zeros(n)
    for h in range(mdp.horizon):
        a = policy_action[h, x, xi[:, h]]
        total += mdp.reward[x, a, xi[:, h]]
        if h + 1 < mdp.horizon:
            x = mdp.endo_map[x, a, xi[:, h + 1]]
    return total
