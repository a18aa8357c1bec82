"""Experiment orchestration: the online episode loop of every algorithm.

Each (algorithm, seed) pair is one job. Jobs fan out over a joblib worker
pool and every job builds its own environment and random streams from the
seed, so results do not depend on the pool size. Streams are keyed by
(seed, stream, episode) only, never by the algorithm, so all algorithms on
one seed face the same exogenous traces.
"""

# python modules
import logging
import time
from dataclasses import dataclass
from typing import Any

import numpy as np
from joblib import Parallel, delayed

# our modules
from exo_mdp.bandit import peg_barrier_probability, peg_regret_lower_bound, run_exo_bandit, run_peg_batch
from exo_mdp.environments import (
    StorageBenchmark,
    make_gap_bandit,
    make_peg_instance,
    make_storage_benchmark,
    make_tabular_benchmark,
)
from exo_mdp.evaluation import (
    StorageOracle,
    evaluate_storage_policy,
    instantaneous_regret,
    make_storage_oracle,
    model_error_frobenius,
    optimal_values,
    oracle_anchor_count,
)
from exo_mdp.exo_core import (
    STREAM_ENVIRONMENT,
    STREAM_EPISODE,
    STREAM_EVALUATION,
    STREAM_SUBSAMPLE,
    make_rng,
    sample_exo_trace,
    sample_initial_xi,
    simulate_episode,
)
from exo_mdp.experiment_configs import LITE_ALGORITHMS, ExperimentConfig
from exo_mdp.kernels import (
    OptimismConfig,
    SubsampleConfig,
    TransitionCounts,
    estimate_kernel,
    subsample_counts,
    update_counts,
)
from exo_mdp.lfa import lsvi_backward_pass
from exo_mdp.tabular_planner import ftl_erm_plan, pto_opt_plan, pto_plan

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunRecord:
    experiment: str
    algorithm: str
    seed: int
    episode: int
    instant_regret: float
    cumulative_regret: float
    model_error: float
    wall_time_ms: float


@dataclass(frozen=True)
class AlgorithmJob:
    """One algorithm variant; label is the name written to the records."""

    label: str
    name: str
    ratio: float | None = None


def algorithm_jobs(cfg: ExperimentConfig) -> list[AlgorithmJob]:
    """Expand lite algorithms into one job per subsample ratio, labelled <algo>_<ratio>."""
    jobs = []
    for name in cfg.algorithms:
        if name in LITE_ALGORITHMS:
            jobs.extend(AlgorithmJob(f"{name}_{ratio:g}", name, ratio) for ratio in cfg.subsample_ratios)
        else:
            jobs.append(AlgorithmJob(name, name))
    return jobs


def sort_records(records: list[RunRecord]) -> list[RunRecord]:
    return sorted(records, key=lambda r: (r.algorithm, r.seed, r.episode))


def _subsample_seed(seed: int, episode: int) -> int:
    return int(make_rng(seed, STREAM_SUBSAMPLE, episode).integers(2**62))


def _fan_out(cfg: ExperimentConfig, worker, *args: Any) -> list[RunRecord]:
    jobs = algorithm_jobs(cfg)
    logger.info(
        f"Running {cfg.experiment}: {len(jobs)} algorithm variants x {len(cfg.seeds)} seeds, "
        f"K={cfg.episodes}, n_jobs={cfg.n_jobs}"
    )
    start = time.perf_counter()
    results = Parallel(n_jobs=cfg.n_jobs)(delayed(worker)(cfg, job, seed, *args) for job in jobs for seed in cfg.seeds)
    records = sort_records([record for run in results for record in run])
    logger.info(f"Finished {cfg.experiment} in {time.perf_counter() - start:.1f} s, {len(records)} records")
    return records


class _EpisodeClock:
    """Per-episode wall time in ms, 0 when timing is off."""

    def __init__(self, enabled: bool) -> None:
        self.enabled = enabled
        self._start = 0.0

    def start(self) -> None:
        if self.enabled:
            self._start = time.perf_counter()

    def elapsed_ms(self) -> float:
        if not self.enabled:
            return 0.0
        return 1000.0 * (time.perf_counter() - self._start)


""" Tabular """


def _tabular_run(cfg: ExperimentConfig, job: AlgorithmJob, seed: int) -> list[RunRecord]:
    env = cfg.environment
    mdp = make_tabular_benchmark(
        num_x=env["num_x"],
        num_xi=env["num_xi"],
        num_a=env["num_a"],
        horizon=env["horizon"],
        dirichlet_alpha=env["dirichlet_alpha"],
        rng=make_rng(seed, STREAM_ENVIRONMENT),
    )
    v_star = optimal_values(mdp)
    optimism = OptimismConfig(c=cfg.c, episodes=cfg.episodes, num_xi=mdp.num_xi, delta=cfg.delta)
    counts = TransitionCounts.empty(mdp.horizon, mdp.num_xi, cfg.memory)
    traces = []
    clock = _EpisodeClock(cfg.record_wall_time)
    cumulative = 0.0
    records = []
    for k in range(1, cfg.episodes + 1):
        clock.start()
        kernel = estimate_kernel(counts)
        if job.name == "pto":
            policy = pto_plan(mdp, kernel).policy
        elif job.name == "pto_opt":
            policy = pto_opt_plan(mdp, kernel, optimism).policy
        elif job.name == "pto_lite":
            kernel = estimate_kernel(subsample_counts(counts, SubsampleConfig(job.ratio, _subsample_seed(seed, k))))
            policy = pto_plan(mdp, kernel).policy
        else:
            policy = ftl_erm_plan(mdp, traces, cfg.x1, cfg.policy_cap)
        wall_time_ms = clock.elapsed_ms()

        regret = instantaneous_regret(mdp, policy, cfg.regret_mode, cfg.x1, cfg.xi1, v_star)
        cumulative += regret
        records.append(
            RunRecord(
                experiment=cfg.experiment,
                algorithm=job.label,
                seed=seed,
                episode=k,
                instant_regret=regret,
                cumulative_regret=cumulative,
                model_error=model_error_frobenius(kernel, mdp.true_kernel),
                wall_time_ms=wall_time_ms,
            )
        )

        rng = make_rng(seed, STREAM_EPISODE, k)
        log = simulate_episode(mdp, policy, cfg.x1, sample_initial_xi(mdp, rng), rng)
        counts = update_counts(counts, log.trace)
        traces.append(log.trace)
        logger.debug(f"{job.label} seed={seed} k={k}: regret {regret:.6f}, return {log.total_reward:.4f}")
    return records


def run_tabular_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """Online PTO, PTO-Opt, PTO-Lite and FTL-ERM on random tabular Exo-MDPs."""
    return _fan_out(cfg, _tabular_run)


""" Storage """


def _storage_run(
    cfg: ExperimentConfig,
    job: AlgorithmJob,
    seed: int,
    bench: StorageBenchmark,
    oracle: StorageOracle,
) -> list[RunRecord]:
    spec, basis = bench.spec, bench.basis
    env = cfg.environment
    optimism = OptimismConfig(c=cfg.c, episodes=cfg.episodes, num_xi=spec.num_prices, delta=cfg.delta)
    counts = TransitionCounts.empty(spec.horizon, spec.num_prices, cfg.memory)
    clock = _EpisodeClock(cfg.record_wall_time)
    cumulative = 0.0
    records = []
    for k in range(1, cfg.episodes + 1):
        clock.start()
        if job.name == "lsvi_lite":
            kernel = estimate_kernel(subsample_counts(counts, SubsampleConfig(job.ratio, _subsample_seed(seed, k))))
        else:
            kernel = estimate_kernel(counts)
        weights = lsvi_backward_pass(spec, basis, kernel, optimism if job.name == "lsvi_opt" else None)
        wall_time_ms = clock.elapsed_ms()

        evaluation = evaluate_storage_policy(
            spec,
            basis,
            weights,
            env["eval_grid"],
            env["num_rollouts"],
            make_rng(seed, STREAM_EVALUATION, k),
            oracle,
        )
        cumulative += evaluation.regret
        records.append(
            RunRecord(
                experiment=cfg.experiment,
                algorithm=job.label,
                seed=seed,
                episode=k,
                instant_regret=evaluation.regret,
                cumulative_regret=cumulative,
                model_error=model_error_frobenius(kernel, spec.price_kernel),
                wall_time_ms=wall_time_ms,
            )
        )

        rng = make_rng(seed, STREAM_EPISODE, k)
        xi1 = int(rng.integers(spec.num_prices))
        counts = update_counts(counts, sample_exo_trace(spec.price_kernel, spec.horizon, xi1, rng))
        logger.debug(f"{job.label} seed={seed} k={k}: regret {evaluation.regret:.4f} +- {evaluation.regret_se:.4f}")
    return records


def run_storage_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """Online LSVI-PE, LSVI-Opt and LSVI-Lite on the storage benchmark."""
    env = cfg.environment
    bench = make_storage_benchmark(env["horizon"], env["num_prices"], env["num_anchors"], env["overrides"])
    oracle = make_storage_oracle(bench.spec, oracle_anchor_count(env["num_anchors"], env["oracle_anchor_factor"]))
    return _fan_out(cfg, _storage_run, bench, oracle)


""" Bandits """


def _bandit_run(cfg: ExperimentConfig, job: AlgorithmJob, seed: int) -> list[RunRecord]:
    env = cfg.environment
    bandit = make_gap_bandit(env["num_arms"], env["gap"], env["num_xi"])
    run = run_exo_bandit(bandit, job.name, cfg.episodes, make_rng(seed, STREAM_EPISODE))
    cumulative = run.cumulative_regret
    return [
        RunRecord(
            experiment=cfg.experiment,
            algorithm=job.label,
            seed=seed,
            episode=k + 1,
            instant_regret=float(run.regret[k]),
            cumulative_regret=float(cumulative[k]),
            model_error=float(run.exo_error[k]),
            wall_time_ms=0.0,
        )
        for k in range(cfg.episodes)
    ]


def run_bandit_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """Full-feedback FTL and UCB on the gap Exo-bandit."""
    return _fan_out(cfg, _bandit_run)


def _peg_run(cfg: ExperimentConfig, seed: int) -> tuple[list[RunRecord], dict[str, Any]]:
    env = cfg.environment
    instance = make_peg_instance(env["means"], env["warm_start"])
    batch = run_peg_batch(instance, cfg.episodes, env["runs"], make_rng(seed, STREAM_EPISODE))
    cumulative = np.cumsum(batch.mean_instant_regret)
    records = [
        RunRecord(
            experiment=cfg.experiment,
            algorithm="peg",
            seed=seed,
            episode=t + 1,
            instant_regret=float(batch.mean_instant_regret[t]),
            cumulative_regret=float(cumulative[t]),
            model_error=0.0,
            wall_time_ms=0.0,
        )
        for t in range(cfg.episodes)
    ]
    summary = {
        "seed": seed,
        "barrier_frequency": float(batch.barrier_hit.mean()),
        "barrier_absorbed": batch.barrier_absorbed,
        "mean_regret": float(batch.regret.mean()),
        "mean_warm_start_regret": float(batch.warm_start_regret.mean()),
    }
    return records, summary


def run_peg_experiment(cfg: ExperimentConfig) -> tuple[list[RunRecord], dict[str, Any]]:
    """PEG batches per seed, with per-round mean regret and a barrier summary."""
    env = cfg.environment
    instance = make_peg_instance(env["means"], env["warm_start"])
    logger.info(f"Running peg: {len(cfg.seeds)} seeds x {env['runs']} runs, T={cfg.episodes}")
    results = Parallel(n_jobs=cfg.n_jobs)(delayed(_peg_run)(cfg, seed) for seed in cfg.seeds)
    records = sort_records([record for run, _ in results for record in run])
    summary = {
        "means": instance.means.tolist(),
        "warm_start": instance.warm_start,
        "rounds": cfg.episodes,
        "runs_per_seed": env["runs"],
        "barrier_probability": peg_barrier_probability(instance),
        "regret_lower_bound": peg_regret_lower_bound(instance, cfg.episodes),
        "per_seed": [seed_summary for _, seed_summary in results],
    }
    logger.info(
        f"PEG barrier probability {summary['barrier_probability']:.4f}, "
        f"regret lower bound {summary['regret_lower_bound']:.2f}"
    )
    return records, summary


def summarize_records(records: list[RunRecord]) -> dict[str, dict[str, float]]:
    """Final-episode cumulative regret per algorithm, mean and standard error over seeds."""
    summary = {}
    algorithms = sorted({r.algorithm for r in records})
    for algorithm in algorithms:
        runs = [r for r in records if r.algorithm == algorithm]
        last = max(r.episode for r in runs)
        finals = np.array([r.cumulative_regret for r in runs if r.episode == last])
        se = float(np.std(finals, ddof=1) / np.sqrt(finals.size)) if finals.size > 1 else 0.0
        summary[algorithm] = {
            "episodes": int(last),
            "seeds": int(finals.size),
            "final_cumulative_regret_mean": float(finals.mean()),
            "final_cumulative_regret_se": se,
        }
    return summary
