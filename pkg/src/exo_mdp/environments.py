"""Benchmark environments: random tabular Exo-MDPs, the storage instance, bandit instances."""

# python modules
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

# our modules
from exo_mdp.bandit import ExoBandit, PegInstance
from exo_mdp.errors import InvalidInputError
from exo_mdp.exo_core import ExoKernel, TabularExoMdp
from exo_mdp.lfa import AnchorGrid, HatBasis, StorageSpec

logger = logging.getLogger(__name__)

# share of the price transition mass that stays local (stay or move to a neighbour)
PRICE_LOCAL_MASS = 0.7

STORAGE_DEFAULTS: dict[str, Any] = {
    "capacity": 10.0,
    "a_max": 2.0,
    "eta_plus": 1.0,
    "eta_minus": 1.0,
    "leakage": 1.0,
    "trans_cost": 0.1,
    "holding": 0.01,
    "reward_sign": 1,
    "clip_trades": True,
    "prices": None,
}


def make_tabular_benchmark(
    num_x: int,
    num_xi: int,
    num_a: int,
    horizon: int,
    dirichlet_alpha: float,
    rng: np.random.Generator,
) -> TabularExoMdp:
    """Uniform(0, 1) rewards, f = (x + a + xi') mod |X|, Dirichlet kernel rows shared by all stages."""
    if min(num_x, num_xi, num_a, horizon) < 1:
        raise InvalidInputError("all tabular benchmark sizes must be at least 1")
    if dirichlet_alpha <= 0:
        raise InvalidInputError(f"dirichlet_alpha={dirichlet_alpha} must be positive")
    reward = rng.random((num_x, num_a, num_xi))
    x, a, xi_next = np.meshgrid(np.arange(num_x), np.arange(num_a), np.arange(num_xi), indexing="ij")
    endo_map = (x + a + xi_next) % num_x
    kernel_rows = rng.dirichlet(np.full(num_xi, dirichlet_alpha), size=num_xi)
    # renormalize so rows sum to 1 within the kernel tolerance
    kernel_rows = kernel_rows / kernel_rows.sum(axis=1, keepdims=True)
    kernel = ExoKernel(np.repeat(kernel_rows[None, :, :], horizon, axis=0))
    return TabularExoMdp(horizon=horizon, reward=reward, endo_map=endo_map, true_kernel=kernel)


def price_kernel_rows(num_prices: int, local_mass: float = PRICE_LOCAL_MASS) -> np.ndarray:
    """local_mass split over {stay, left, right} that exist, the rest uniform over all prices."""
    rows = np.full((num_prices, num_prices), (1.0 - local_mass) / num_prices)
    for i in range(num_prices):
        local = [j for j in (i - 1, i, i + 1) if 0 <= j < num_prices]
        rows[i, local] += local_mass / len(local)
    return rows


@dataclass(frozen=True, eq=False)
class StorageBenchmark:
    spec: StorageSpec
    basis: HatBasis


def make_storage_benchmark(
    horizon: int,
    num_prices: int,
    num_anchors: int,
    overrides: dict[str, Any] | None = None,
) -> StorageBenchmark:
    """Storage spec with the default parameters and a uniform hat basis.

    overrides may set any key of STORAGE_DEFAULTS; prices default to 1..R.
    """
    if num_prices < 2 or num_anchors < 2:
        raise InvalidInputError(f"need R >= 2 prices and N >= 2 anchors, got R={num_prices}, N={num_anchors}")
    params = dict(STORAGE_DEFAULTS)
    unknown = set(overrides or {}) - set(params)
    if unknown:
        raise InvalidInputError(f"unknown storage parameters {sorted(unknown)}")
    params.update(overrides or {})
    prices = params.pop("prices")
    if prices is None:
        prices = np.arange(1, num_prices + 1, dtype=float)
    prices = np.asarray(prices, dtype=float)
    if prices.size != num_prices:
        raise InvalidInputError(f"{prices.size} prices given for R={num_prices}")
    kernel = ExoKernel(np.repeat(price_kernel_rows(num_prices)[None, :, :], horizon, axis=0))
    spec = StorageSpec(prices=prices, price_kernel=kernel, horizon=horizon, **params)
    basis = HatBasis(AnchorGrid.uniform(spec.capacity, num_anchors))
    return StorageBenchmark(spec=spec, basis=basis)


def make_gap_bandit(num_arms: int = 5, gap: float = 0.2, num_xi: int = 10) -> ExoBandit:
    """Bernoulli-style Exo-bandit with arm means [0.5 + gap, 0.5, ..., 0.5].

    xi is uniform over num_xi levels and arm a pays 1 on a window of
    mean * num_xi consecutive levels starting at a different offset per arm,
    so the arms are not comonotone. mean * num_xi must be an integer.
    """
    means = np.full(num_arms, 0.5)
    means[0] = 0.5 + gap
    hits = means * num_xi
    if not np.allclose(hits, np.round(hits)):
        raise InvalidInputError(f"num_xi={num_xi} cannot represent arm means {means.tolist()} exactly")
    table = np.zeros((num_arms, num_xi))
    for arm, width in enumerate(np.round(hits).astype(int)):
        offset = (3 * arm) % num_xi
        table[arm, (offset + np.arange(width)) % num_xi] = 1.0
    return ExoBandit(reward_table=table, exo_dist=np.full(num_xi, 1.0 / num_xi))


def make_peg_instance(means: list[float] | None = None, warm_start: int = 1) -> PegInstance:
    """Two-armed Bernoulli instance mu = [0.75, 0.5] by default."""
    return PegInstance(means=np.array(means or [0.75, 0.5]), warm_start=warm_start)
