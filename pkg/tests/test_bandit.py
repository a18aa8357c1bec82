import math

import numpy as np
import pytest

from exo_mdp.bandit import (
    ExoBandit,
    FullInfoState,
    PegInstance,
    ftl_regret_bound,
    ftl_select,
    peg_barrier_probability,
    peg_regret_lower_bound,
    run_exo_bandit,
    run_peg,
    run_peg_batch,
    ucb_select,
)
from exo_mdp.environments import make_gap_bandit
from exo_mdp.errors import InvalidInputError
from exo_mdp.exo_core import make_rng


class TestSelection:
    def test_ftl_first_round(self):
        assert ftl_select(FullInfoState.initial(3)) == 0

    def test_ftl_argmax(self):
        assert ftl_select(FullInfoState(sums=np.array([2.0, 1.0, 3.0]), k=3)) == 2

    def test_ftl_tie_goes_to_lowest(self):
        assert ftl_select(FullInfoState(sums=np.array([1.0, 1.0]), k=3)) == 0

    def test_ucb_example(self):
        assert ucb_select(FullInfoState(sums=np.array([1.0, 2.0]), k=3), sigma=1.0, num_arms=2, episodes=10) == 1

    def test_ucb_equals_ftl_on_random_states(self):
        rng = make_rng(1)
        for _ in range(200):
            k = int(rng.integers(1, 50))
            state = FullInfoState(sums=rng.uniform(0, k - 1, size=4), k=k)
            assert ucb_select(state, 0.5, 4, 100) == ftl_select(state)

    def test_observe_shares_counts(self):
        state = FullInfoState.initial(2).observe(np.array([1.0, 0.0])).observe(np.array([0.0, 0.0]))
        assert state.k == 3
        np.testing.assert_allclose(state.empirical_means(), [0.5, 0.0])


class TestRunExoBandit:
    def test_single_arm_no_regret(self):
        bandit = ExoBandit(reward_table=np.array([[0.0, 1.0]]), exo_dist=np.array([0.5, 0.5]))
        run = run_exo_bandit(bandit, "ftl", 50, make_rng(0))
        assert np.all(run.regret == 0.0)

    def test_constant_rewards_lock_in_after_one_round(self):
        bandit = ExoBandit(reward_table=np.array([[1.0, 1.0], [0.0, 0.0]]), exo_dist=np.array([0.5, 0.5]))
        run = run_exo_bandit(bandit, "ftl", 20, make_rng(0))
        assert np.all(run.regret[1:] == 0.0)

    def test_constant_rewards_wrong_first_arm(self):
        bandit = ExoBandit(reward_table=np.array([[0.0, 0.0], [1.0, 1.0]]), exo_dist=np.array([0.5, 0.5]))
        run = run_exo_bandit(bandit, "ucb", 20, make_rng(0))
        assert run.regret[0] == 1.0
        assert np.all(run.regret[1:] == 0.0)

    def test_ftl_and_ucb_agree_on_same_stream(self):
        bandit = make_gap_bandit()
        ftl = run_exo_bandit(bandit, "ftl", 200, make_rng(5))
        ucb = run_exo_bandit(bandit, "ucb", 200, make_rng(5))
        assert ftl.ftl_ucb_agree and ucb.ftl_ucb_agree
        assert np.array_equal(ftl.arms, ucb.arms)

    def test_exo_error_starts_at_uniform_prior(self):
        bandit = ExoBandit(reward_table=np.eye(2), exo_dist=np.array([0.8, 0.2]))
        run = run_exo_bandit(bandit, "ftl", 5, make_rng(2))
        assert run.exo_error[0] == pytest.approx(math.sqrt(0.3**2 * 2))

    def test_invalid_algorithm(self):
        with pytest.raises(InvalidInputError):
            run_exo_bandit(make_gap_bandit(), "thompson", 5, make_rng(0))

    def test_bound_formula(self):
        assert ftl_regret_bound(500, 5) == pytest.approx(2 * 0.5 * math.sqrt(500 * math.log(5)))

    @pytest.mark.slow
    def test_cumulative_regret_below_bound(self):
        bandit = make_gap_bandit()
        runs = [run_exo_bandit(bandit, "ftl", 500, make_rng(seed, 1)) for seed in range(100)]
        assert all(run.ftl_ucb_agree for run in runs)
        finals = [run.cumulative_regret[-1] for run in runs]
        assert np.mean(finals) <= 1.5 * ftl_regret_bound(500, bandit.num_arms)

    @pytest.mark.slow
    def test_sublinear_growth(self):
        bandit = make_gap_bandit()
        runs = [run_exo_bandit(bandit, "ftl", 1000, make_rng(seed, 1)).cumulative_regret for seed in range(100)]
        at_250 = np.mean([r[249] for r in runs])
        at_1000 = np.mean([r[999] for r in runs])
        assert at_1000 < 2 * at_250


class TestPeg:
    def test_instance_gap(self):
        instance = PegInstance(means=np.array([0.75, 0.5]))
        assert instance.gap == pytest.approx(0.25)
        assert instance.best_arm == 0

    def test_instance_needs_unique_best(self):
        with pytest.raises(InvalidInputError):
            PegInstance(means=np.array([0.5, 0.5]))

    def test_barrier_probability(self):
        assert peg_barrier_probability(PegInstance(means=np.array([0.75, 0.5]))) == pytest.approx(0.125)

    def test_lower_bound(self):
        bound = peg_regret_lower_bound(PegInstance(means=np.array([0.75, 0.5])), 1000)
        assert bound == pytest.approx(0.125 * 0.25 * 998)

    def test_deterministic_rewards(self):
        result = run_peg(PegInstance(means=np.array([1.0, 0.0])), 100, make_rng(0))
        assert result.regret == 0.0
        assert not result.barrier_hit

    def test_horizon_shorter_than_warm_start(self):
        with pytest.raises(InvalidInputError):
            run_peg(PegInstance(means=np.array([0.75, 0.5]), warm_start=3), 5, make_rng(0))

    def test_barrier_absorbs(self):
        batch = run_peg_batch(PegInstance(means=np.array([0.75, 0.5])), 200, 2000, make_rng(3))
        assert batch.barrier_hit.any()
        assert batch.barrier_absorbed
        assert np.all(batch.regret[batch.barrier_hit] == pytest.approx(0.25 * 198))

    @pytest.mark.slow
    def test_barrier_frequency(self):
        batch = run_peg_batch(PegInstance(means=np.array([0.75, 0.5])), 2, 100_000, make_rng(4))
        assert abs(batch.barrier_hit.mean() - 0.125) < 0.01

    @pytest.mark.slow
    def test_linear_regret(self):
        instance = PegInstance(means=np.array([0.75, 0.5]))
        batch = run_peg_batch(instance, 1000, 10_000, make_rng(5))
        se = batch.regret.std(ddof=1) / np.sqrt(batch.regret.size)
        assert batch.regret.mean() >= peg_regret_lower_bound(instance, 1000) - 3 * se
