import numpy as np
import pytest

from exo_mdp.environments import (
    make_gap_bandit,
    make_peg_instance,
    make_storage_benchmark,
    make_tabular_benchmark,
    price_kernel_rows,
)
from exo_mdp.errors import InvalidInputError
from exo_mdp.exo_core import make_rng


class TestTabularBenchmark:
    def test_default_sizes(self):
        mdp = make_tabular_benchmark(5, 5, 3, 5, 1.0, make_rng(0))
        assert (mdp.num_x, mdp.num_xi, mdp.num_a, mdp.horizon) == (5, 5, 3, 5)

    def test_endogenous_map(self):
        mdp = make_tabular_benchmark(5, 5, 3, 5, 1.0, make_rng(0))
        assert mdp.endo_map[4, 2, 4] == 0
        assert mdp.endo_map[1, 1, 2] == 4

    def test_kernel_rows(self):
        mdp = make_tabular_benchmark(5, 5, 3, 5, 1.0, make_rng(1))
        rows = mdp.true_kernel.rows
        np.testing.assert_allclose(rows.sum(axis=-1), 1.0, atol=1e-12)
        assert np.all(rows > 0.0)
        # one draw shared by all stages
        assert all(np.array_equal(rows[0], rows[h]) for h in range(5))

    def test_rewards_in_unit_interval(self):
        mdp = make_tabular_benchmark(5, 5, 3, 5, 1.0, make_rng(2))
        assert np.all((mdp.reward >= 0.0) & (mdp.reward < 1.0))

    def test_deterministic_given_seed(self):
        a = make_tabular_benchmark(4, 3, 2, 3, 0.5, make_rng(9))
        b = make_tabular_benchmark(4, 3, 2, 3, 0.5, make_rng(9))
        assert np.array_equal(a.reward, b.reward)
        assert np.array_equal(a.true_kernel.rows, b.true_kernel.rows)

    def test_invalid_alpha(self):
        with pytest.raises(InvalidInputError):
            make_tabular_benchmark(2, 2, 2, 2, 0.0, make_rng(0))


class TestStorageBenchmark:
    def test_interior_row(self):
        row = price_kernel_rows(10)[4]
        expected = np.full(10, 0.03)
        expected[[3, 4, 5]] += 0.7 / 3
        np.testing.assert_allclose(row, expected)

    def test_boundary_row(self):
        rows = price_kernel_rows(10)
        np.testing.assert_allclose(rows[0, :2], 0.7 / 2 + 0.03)
        np.testing.assert_allclose(rows[9, 8:], 0.7 / 2 + 0.03)

    @pytest.mark.parametrize("num_prices", [2, 3, 10, 40])
    def test_rows_sum_to_one(self, num_prices):
        np.testing.assert_allclose(price_kernel_rows(num_prices).sum(axis=1), 1.0, atol=1e-12)

    def test_defaults(self):
        bench = make_storage_benchmark(6, 10, 10)
        spec = bench.spec
        assert (spec.capacity, spec.a_max, spec.leakage) == (10.0, 2.0, 1.0)
        assert (spec.trans_cost, spec.holding, spec.reward_sign) == (0.1, 0.01, 1)
        np.testing.assert_array_equal(spec.prices, np.arange(1, 11))
        np.testing.assert_allclose(bench.basis.grid.anchors, np.linspace(0.0, 10.0, 10))
        assert spec.price_kernel.rows.shape == (6, 10, 10)

    @pytest.mark.parametrize("size", [20, 30, 40])
    def test_scaled_cases(self, size):
        bench = make_storage_benchmark(size, size, size)
        assert bench.spec.price_kernel.rows.shape == (size, size, size)
        assert bench.basis.size == size

    def test_unknown_override(self):
        with pytest.raises(InvalidInputError):
            make_storage_benchmark(6, 10, 10, {"capacty": 5.0})

    def test_price_count_mismatch(self):
        with pytest.raises(InvalidInputError):
            make_storage_benchmark(6, 3, 10, {"prices": [1.0, 2.0]})

    def test_too_few_prices(self):
        with pytest.raises(InvalidInputError):
            make_storage_benchmark(6, 1, 10)


class TestBanditInstances:
    def test_gap_bandit_means(self):
        bandit = make_gap_bandit()
        np.testing.assert_allclose(bandit.means, [0.7, 0.5, 0.5, 0.5, 0.5])

    def test_gap_bandit_arms_differ(self):
        table = make_gap_bandit().reward_table
        assert not np.array_equal(table[1], table[2])

    def test_gap_not_representable(self):
        with pytest.raises(InvalidInputError):
            make_gap_bandit(gap=0.15, num_xi=10)

    def test_peg_defaults(self):
        instance = make_peg_instance()
        np.testing.assert_array_equal(instance.means, [0.75, 0.5])
        assert instance.warm_start == 1
