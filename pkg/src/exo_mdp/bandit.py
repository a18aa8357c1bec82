"""Exo-bandits: full-feedback FTL and UCB, and the partial-feedback PEG construction.

An Exo-bandit is an Exo-MDP with one stage and no endogenous state. The
exogenous draw xi is observed after every round, so the reward of every arm
is revealed (full feedback) and all arms share the same sample count.
Under full feedback the UCB bonus is the same for every arm, and UCB picks
exactly the arm FTL picks.

PEG (pure-exploitation greedy) is the partial-feedback counterpart: every
arm is pulled L times, then the arm with the best own-pull empirical mean is
played. If after the warm-start the optimal arm has empirical mean 0 while
another arm has a positive mean, the optimal arm is never pulled again.
"""

# python modules
import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

# our modules
from exo_mdp.errors import InvalidInputError
from exo_mdp.exo_core import check_probability_rows

logger = logging.getLogger(__name__)

BanditAlgorithm = Literal["ftl", "ucb"]

# rewards in [0, 1] are 1/2 sub-Gaussian
DEFAULT_SIGMA = 0.5


@dataclass(frozen=True, eq=False)
class ExoBandit:
    """reward_table[a][xi] with xi drawn i.i.d. from exo_dist every round."""

    reward_table: np.ndarray
    exo_dist: np.ndarray
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self) -> None:
        table = np.array(self.reward_table, dtype=float)
        dist = np.array(self.exo_dist, dtype=float)
        if table.ndim != 2 or table.shape[1] != dist.shape[0]:
            raise InvalidInputError(
                f"reward_table shape {table.shape} does not match exo_dist length {dist.shape}"
            )
        check_probability_rows("exo_dist", dist)
        object.__setattr__(self, "reward_table", table)
        object.__setattr__(self, "exo_dist", dist)

    @property
    def num_arms(self) -> int:
        return self.reward_table.shape[0]

    @property
    def num_xi(self) -> int:
        return self.reward_table.shape[1]

    @property
    def means(self) -> np.ndarray:
        return self.reward_table @ self.exo_dist

    @property
    def best_mean(self) -> float:
        return float(np.max(self.means))


@dataclass(frozen=True, eq=False)
class FullInfoState:
    """Reward sums of every arm at the start of round k (k - 1 observations)."""

    sums: np.ndarray
    k: int = 1

    @classmethod
    def initial(cls, num_arms: int) -> "FullInfoState":
        return cls(sums=np.zeros(num_arms), k=1)

    def observe(self, rewards: np.ndarray) -> "FullInfoState":
        """Add the revealed reward of every arm and move to the next round."""
        return FullInfoState(sums=self.sums + rewards, k=self.k + 1)

    def empirical_means(self) -> np.ndarray:
        return self.sums / (self.k - 1)


def ftl_select(state: FullInfoState) -> int:
    """Arm with the largest empirical mean, lowest index on ties; arm 0 before any data."""
    if state.k <= 1:
        return 0
    return int(np.argmax(state.empirical_means()))


def ucb_select(
    state: FullInfoState,
    sigma: float,
    num_arms: int,
    episodes: int,
    delta: float | None = None,
) -> int:
    """Arm maximizing mean + sqrt(2 sigma^2 log(A K / delta) / (k - 1)), delta defaults to 1/K."""
    if state.k <= 1:
        return 0
    if delta is None:
        delta = 1.0 / episodes
    bonus = math.sqrt(2.0 * sigma**2 * math.log(num_arms * episodes / delta) / (state.k - 1))
    return int(np.argmax(state.empirical_means() + bonus))


def ftl_regret_bound(episodes: int, num_arms: int, sigma: float = DEFAULT_SIGMA) -> float:
    """Cumulative regret bound 2 sigma sqrt(K log A) of FTL under full feedback."""
    return 2.0 * sigma * math.sqrt(episodes * math.log(max(num_arms, 1)))


@dataclass(frozen=True, eq=False)
class BanditRun:
    """Per-round output of one Exo-bandit run."""

    regret: np.ndarray
    arms: np.ndarray
    exo_error: np.ndarray
    ftl_ucb_agree: bool

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)


def run_exo_bandit(
    bandit: ExoBandit,
    algo: BanditAlgorithm,
    episodes: int,
    rng: np.random.Generator,
    delta: float | None = None,
) -> BanditRun:
    """Play `episodes` rounds of full-feedback FTL or UCB and record simple regret.

    exo_error[k] is the L2 distance between the empirical exogenous
    distribution available at round k (uniform before any data) and exo_dist.
    """
    if episodes < 1:
        raise InvalidInputError(f"episodes={episodes} must be positive")
    if algo not in ("ftl", "ucb"):
        raise InvalidInputError(f"unknown bandit algorithm '{algo}'")
    means = bandit.means
    best_mean = bandit.best_mean
    draws = rng.choice(bandit.num_xi, size=episodes, p=bandit.exo_dist)

    state = FullInfoState.initial(bandit.num_arms)
    xi_counts = np.zeros(bandit.num_xi)
    regret = np.empty(episodes)
    arms = np.empty(episodes, dtype=np.int64)
    exo_error = np.empty(episodes)
    agree = True
    for k in range(episodes):
        arm_ftl = ftl_select(state)
        arm_ucb = ucb_select(state, bandit.sigma, bandit.num_arms, episodes, delta)
        agree = agree and arm_ftl == arm_ucb
        arm = arm_ftl if algo == "ftl" else arm_ucb
        arms[k] = arm
        regret[k] = best_mean - means[arm]
        seen = xi_counts.sum()
        estimate = xi_counts / seen if seen > 0 else np.full(bandit.num_xi, 1.0 / bandit.num_xi)
        exo_error[k] = float(np.linalg.norm(estimate - bandit.exo_dist))

        xi = draws[k]
        xi_counts[xi] += 1
        state = state.observe(bandit.reward_table[:, xi])

    if not agree:
        logger.warning("UCB and FTL selections differed under full feedback")
    return BanditRun(regret=regret, arms=arms, exo_error=exo_error, ftl_ucb_agree=agree)


@dataclass(frozen=True, eq=False)
class PegInstance:
    """Bernoulli arms with means mu, each pulled warm_start times before greedy play."""

    means: np.ndarray
    warm_start: int = 1

    def __post_init__(self) -> None:
        means = np.array(self.means, dtype=float)
        if means.ndim != 1 or means.size < 2:
            raise InvalidInputError("PEG needs at least two arms")
        if np.any(means < 0.0) or np.any(means > 1.0):
            raise InvalidInputError("PEG arm means must lie in [0, 1]")
        if self.warm_start < 1:
            raise InvalidInputError(f"warm_start={self.warm_start} must be positive")
        object.__setattr__(self, "means", means)
        if self.gap <= 0:
            raise InvalidInputError("PEG needs a unique optimal arm (gap > 0)")

    @property
    def num_arms(self) -> int:
        return self.means.size

    @property
    def best_arm(self) -> int:
        return int(np.argmax(self.means))

    @property
    def gap(self) -> float:
        ordered = np.sort(self.means)
        return float(ordered[-1] - ordered[-2])


def peg_barrier_probability(instance: PegInstance) -> float:
    """P(optimal arm has warm-start mean 0 and some other arm a positive mean)."""
    best = instance.best_arm
    others = np.delete(instance.means, best)
    all_others_zero = float(np.prod((1.0 - others) ** instance.warm_start))
    return (1.0 - instance.means[best]) ** instance.warm_start * (1.0 - all_others_zero)


def peg_regret_lower_bound(instance: PegInstance, horizon: int) -> float:
    """Barrier probability times gap times the number of greedy rounds."""
    greedy_rounds = horizon - instance.num_arms * instance.warm_start
    return peg_barrier_probability(instance) * instance.gap * greedy_rounds


@dataclass(frozen=True, eq=False)
class PegBatchResult:
    """Outcome of many independent PEG runs.

    regret counts the greedy rounds only, warm_start_regret the forced pulls.
    """

    regret: np.ndarray
    warm_start_regret: np.ndarray
    barrier_hit: np.ndarray
    optimal_pulls_after_warm_start: np.ndarray
    mean_instant_regret: np.ndarray

    @property
    def barrier_absorbed(self) -> bool:
        return bool(np.all(self.optimal_pulls_after_warm_start[self.barrier_hit] == 0))


@dataclass(frozen=True)
class PegRun:
    regret: float
    barrier_hit: bool


def run_peg_batch(
    instance: PegInstance,
    horizon: int,
    num_runs: int,
    rng: np.random.Generator,
) -> PegBatchResult:
    """Simulate num_runs independent PEG runs of `horizon` rounds at once."""
    num_arms, warm_start = instance.num_arms, instance.warm_start
    if horizon < num_arms * warm_start:
        raise InvalidInputError(
            f"horizon={horizon} is shorter than the warm-start of {num_arms * warm_start} pulls"
        )
    means = instance.means
    best = instance.best_arm
    best_mean = float(means[best])
    runs = np.arange(num_runs)

    pulls = np.zeros((num_runs, num_arms))
    successes = np.zeros((num_runs, num_arms))
    instant = np.empty((num_runs, horizon))
    warm_rounds = num_arms * warm_start
    for t in range(horizon):
        if t < warm_rounds:
            arms = np.full(num_runs, t % num_arms)
        else:
            if t == warm_rounds:
                empirical = successes / pulls
                barrier_hit = (empirical[:, best] == 0.0) & (empirical.max(axis=1) > 0.0)
                best_pulls_at_warm_start = pulls[:, best].copy()
            arms = np.argmax(successes / pulls, axis=1)
        rewards = rng.random(num_runs) < means[arms]
        pulls[runs, arms] += 1
        successes[runs, arms] += rewards
        instant[:, t] = best_mean - means[arms]

    if horizon == warm_rounds:
        empirical = successes / pulls
        barrier_hit = (empirical[:, best] == 0.0) & (empirical.max(axis=1) > 0.0)
        best_pulls_at_warm_start = pulls[:, best].copy()

    result = PegBatchResult(
        regret=instant[:, warm_rounds:].sum(axis=1),
        warm_start_regret=instant[:, :warm_rounds].sum(axis=1),
        barrier_hit=barrier_hit,
        optimal_pulls_after_warm_start=pulls[:, best] - best_pulls_at_warm_start,
        mean_instant_regret=instant.mean(axis=0),
    )
    if not result.barrier_absorbed:
        logger.warning("optimal arm was pulled again after a barrier event")
    logger.debug(
        f"PEG: {num_runs} runs, barrier frequency {result.barrier_hit.mean():.4f}, "
        f"mean regret {result.regret.mean():.3f}"
    )
    return result


def run_peg(instance: PegInstance, horizon: int, rng: np.random.Generator) -> PegRun:
    """Single PEG run."""
    batch = run_peg_batch(instance, horizon, 1, rng)
    return PegRun(regret=float(batch.regret[0]), barrier_hit=bool(batch.barrier_hit[0]))
