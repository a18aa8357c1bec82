"""Shared fixtures: small random Exo-MDPs and storage specs."""

import numpy as np
import pytest

from exo_mdp.environments import make_storage_benchmark, make_tabular_benchmark
from exo_mdp.exo_core import make_rng


def random_mdp(seed: int, num_x: int = 2, num_xi: int = 2, num_a: int = 2, horizon: int = 2):
    return make_tabular_benchmark(num_x, num_xi, num_a, horizon, 1.0, make_rng(seed, 0))


@pytest.fixture
def tiny_mdp():
    """|X| = |Xi| = |A| = 2, H = 2."""
    return random_mdp(7)


@pytest.fixture
def default_mdp():
    """|X| = |Xi| = 5, |A| = 3, H = 5."""
    return random_mdp(11, num_x=5, num_xi=5, num_a=3, horizon=5)


@pytest.fixture
def storage_bench():
    return make_storage_benchmark(horizon=4, num_prices=4, num_anchors=6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
