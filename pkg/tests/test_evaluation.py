import numpy as np
import pytest

from conftest import random_mdp
from exo_mdp.environments import make_storage_benchmark
from exo_mdp.errors import InvalidInputError
from exo_mdp.evaluation import (
    StorageOracle,
    evaluate_storage_policy,
    exact_evaluate,
    instantaneous_regret,
    make_storage_oracle,
    model_error_frobenius,
    oracle_anchor_count,
)
from exo_mdp.exo_core import ExoKernel, TabularPolicy, make_rng, simulate_episode
from exo_mdp.kernels import TransitionCounts, estimate_kernel, update_counts
from exo_mdp.lfa import AnchorGrid, lsvi_backward_pass
from exo_mdp.tabular_planner import pto_plan


def _random_policy(mdp, seed: int) -> TabularPolicy:
    return TabularPolicy(make_rng(seed).integers(0, mdp.num_a, size=(mdp.horizon, mdp.num_x, mdp.num_xi)))


class TestExactEvaluate:
    def test_single_stage(self):
        mdp = random_mdp(1, num_x=3, num_xi=2, num_a=2, horizon=1)
        policy = _random_policy(mdp, 2)
        v = exact_evaluate(mdp, policy).v
        for x in range(3):
            for xi in range(2):
                assert v[0, x, xi] == mdp.reward[x, policy.action[0, x, xi], xi]
        assert np.all(v[1] == 0.0)

    def test_planner_consistency(self, default_mdp):
        out = pto_plan(default_mdp, default_mdp.true_kernel)
        np.testing.assert_allclose(exact_evaluate(default_mdp, out.policy).v, out.v.v, atol=1e-12)

    def test_shape_mismatch(self, tiny_mdp):
        with pytest.raises(InvalidInputError):
            exact_evaluate(tiny_mdp, TabularPolicy(np.zeros((3, 2, 2), dtype=int)))

    @pytest.mark.slow
    def test_matches_monte_carlo(self, tiny_mdp):
        policy = _random_policy(tiny_mdp, 3)
        rng = make_rng(4)
        returns = np.array([simulate_episode(tiny_mdp, policy, 1, 0, rng).total_reward for _ in range(100_000)])
        se = returns.std(ddof=1) / np.sqrt(returns.size)
        assert abs(returns.mean() - exact_evaluate(tiny_mdp, policy).v[0, 1, 0]) < 3 * se + 1e-12


class TestInstantaneousRegret:
    def test_optimal_policy_has_zero_regret(self, default_mdp):
        policy = pto_plan(default_mdp, default_mdp.true_kernel).policy
        assert instantaneous_regret(default_mdp, policy, "summed") == pytest.approx(0.0, abs=1e-12)
        assert instantaneous_regret(default_mdp, policy, "fixed", x1=2, xi1=3) == pytest.approx(0.0, abs=1e-12)

    def test_nonnegative_on_random_policies(self, default_mdp):
        v_star = pto_plan(default_mdp, default_mdp.true_kernel).v
        for seed in range(100):
            assert instantaneous_regret(default_mdp, _random_policy(default_mdp, seed), v_star=v_star) >= -1e-9

    def test_summed_is_sum_of_fixed(self, tiny_mdp):
        policy = _random_policy(tiny_mdp, 5)
        fixed = [instantaneous_regret(tiny_mdp, policy, "fixed", x, xi) for x in range(2) for xi in range(2)]
        assert instantaneous_regret(tiny_mdp, policy, "summed") == pytest.approx(sum(fixed), abs=1e-12)

    def test_unknown_mode(self, tiny_mdp):
        with pytest.raises(InvalidInputError):
            instantaneous_regret(tiny_mdp, _random_policy(tiny_mdp, 0), "average")

    @pytest.mark.slow
    def test_regret_increments_shrink(self, default_mdp):
        increments = []
        for seed in range(20):
            counts = TransitionCounts.empty(5, 5)
            regrets = []
            for k in range(1, 201):
                policy = pto_plan(default_mdp, estimate_kernel(counts)).policy
                regrets.append(instantaneous_regret(default_mdp, policy))
                rng = make_rng(seed, 1, k)
                counts = update_counts(counts, simulate_episode(default_mdp, policy, 0, int(rng.integers(5)), rng).trace)
            increments.append((np.mean(regrets[:50]), np.mean(regrets[-50:])))
        first, last = np.median(increments, axis=0)
        assert last < first


class TestModelError:
    def test_truth_has_zero_error(self, default_mdp):
        assert model_error_frobenius(default_mdp.true_kernel, default_mdp.true_kernel) == 0.0

    def test_single_stage_hand_value(self):
        hat = ExoKernel(np.array([[[1.0, 0.0], [0.0, 1.0]]]))
        true = ExoKernel(np.full((1, 2, 2), 0.5))
        assert model_error_frobenius(hat, true) == pytest.approx(1.0)

    def test_last_stage_is_ignored(self):
        hat = ExoKernel(np.array([[[0.5, 0.5], [0.5, 0.5]], [[1.0, 0.0], [0.0, 1.0]]]))
        true = ExoKernel(np.full((2, 2, 2), 0.5))
        assert model_error_frobenius(hat, true) == 0.0

    def test_shape_mismatch(self, tiny_mdp):
        with pytest.raises(InvalidInputError):
            model_error_frobenius(ExoKernel(np.full((3, 2, 2), 0.5)), tiny_mdp.true_kernel)

    @pytest.mark.slow
    def test_error_decays_with_data(self):
        errors = {20: [], 200: []}
        for seed in range(20):
            mdp = random_mdp(seed, num_x=5, num_xi=5, num_a=3, horizon=5)
            counts = TransitionCounts.empty(5, 5)
            policy = TabularPolicy(np.zeros((5, 5, 5), dtype=int))
            for k in range(1, 201):
                rng = make_rng(seed, 1, k)
                counts = update_counts(counts, simulate_episode(mdp, policy, 0, int(rng.integers(5)), rng).trace)
                if k in errors:
                    errors[k].append(model_error_frobenius(estimate_kernel(counts), mdp.true_kernel))
        assert np.median(errors[200]) < 0.5 * np.median(errors[20])


class TestStorageEvaluation:
    def test_self_comparison_is_exact(self, storage_bench):
        spec, basis = storage_bench.spec, storage_bench.basis
        weights = lsvi_backward_pass(spec, basis, spec.price_kernel)
        result = evaluate_storage_policy(
            spec, basis, weights, [0.0, 5.0], 50, make_rng(1), oracle=StorageOracle(basis, weights)
        )
        assert result.regret == 0.0
        assert result.mean_return == result.oracle_mean_return

    def test_zero_price_zero_cost(self):
        bench = make_storage_benchmark(4, 3, 5, {"prices": [0.0, 0.0, 0.0], "trans_cost": 0.0, "holding": 0.0})
        weights = lsvi_backward_pass(bench.spec, bench.basis, bench.spec.price_kernel)
        result = evaluate_storage_policy(bench.spec, bench.basis, weights, [0.0, 10.0], 20, make_rng(2))
        assert result.mean_return == 0.0
        assert result.oracle_mean_return == 0.0

    def test_learned_weights_have_nonnegative_regret(self, storage_bench):
        spec, basis = storage_bench.spec, storage_bench.basis
        oracle = make_storage_oracle(spec, oracle_anchor_count(basis.size))
        uniform = estimate_kernel(TransitionCounts.empty(spec.horizon, spec.num_prices))
        weights = lsvi_backward_pass(spec, basis, uniform)
        result = evaluate_storage_policy(spec, basis, weights, [0.0, 5.0], 500, make_rng(3), oracle)
        assert result.regret > -3 * result.regret_se

    def test_invalid_rollouts(self, storage_bench):
        spec, basis = storage_bench.spec, storage_bench.basis
        weights = lsvi_backward_pass(spec, basis, spec.price_kernel)
        with pytest.raises(InvalidInputError):
            evaluate_storage_policy(spec, basis, weights, [0.0], 0, make_rng(0))

    @pytest.mark.slow
    def test_independent_batches_agree(self, storage_bench):
        spec, basis = storage_bench.spec, storage_bench.basis
        oracle = make_storage_oracle(spec, oracle_anchor_count(basis.size))
        uniform = estimate_kernel(TransitionCounts.empty(spec.horizon, spec.num_prices))
        weights = lsvi_backward_pass(spec, basis, uniform)
        a = evaluate_storage_policy(spec, basis, weights, [5.0], 10_000, make_rng(10), oracle)
        b = evaluate_storage_policy(spec, basis, weights, [5.0], 10_000, make_rng(11), oracle)
        pooled = np.sqrt(a.regret_se**2 + b.regret_se**2)
        assert abs(a.regret - b.regret) < 3 * pooled + 1e-12

    def test_oracle_beats_true_kernel_learner(self, storage_bench):
        spec, basis = storage_bench.spec, storage_bench.basis
        weights = lsvi_backward_pass(spec, basis, spec.price_kernel)
        oracle = make_storage_oracle(spec, oracle_anchor_count(basis.size))
        result = evaluate_storage_policy(spec, basis, weights, [0.0, 5.0], 2000, make_rng(12), oracle)
        assert result.regret >= -3 * result.regret_se - 1e-9


class TestOracleAnchorCount:
    @pytest.mark.parametrize("num_anchors, factor", [(6, 4), (10, 4), (2, 1), (5, 3)])
    def test_learner_anchors_are_oracle_anchors(self, num_anchors, factor):
        learner = AnchorGrid.uniform(10.0, num_anchors).anchors
        oracle = AnchorGrid.uniform(10.0, oracle_anchor_count(num_anchors, factor)).anchors
        np.testing.assert_allclose(oracle[::factor], learner, atol=1e-12)

    def test_default_factor(self):
        assert oracle_anchor_count(6) == 21
        assert oracle_anchor_count(10) == 37

    @pytest.mark.parametrize("num_anchors, factor", [(1, 4), (6, 0)])
    def test_invalid(self, num_anchors, factor):
        with pytest.raises(InvalidInputError):
            oracle_anchor_count(num_anchors, factor)
