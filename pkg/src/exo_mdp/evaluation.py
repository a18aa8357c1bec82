"""Policy evaluation, regret and model-error metrics."""

# python modules
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

# our modules
from exo_mdp.errors import InvalidInputError
from exo_mdp.exo_core import ExoKernel, TabularExoMdp, TabularPolicy, ValueTable, check_index, sample_exo_traces
from exo_mdp.kernels import EmpiricalKernel, kernel_rows
from exo_mdp.lfa import (
    AnchorGrid,
    HatBasis,
    StorageSpec,
    WeightTable,
    greedy_actions,
    lsvi_backward_pass,
    storage_post_decisions,
    storage_pre_decision,
    storage_reward,
)
from exo_mdp.tabular_planner import continuation_values, pto_plan

logger = logging.getLogger(__name__)

RegretMode = Literal["summed", "fixed"]

# oracle grid splits every learner anchor interval into this many pieces
ORACLE_ANCHOR_FACTOR = 4


def exact_evaluate(mdp: TabularExoMdp, policy: TabularPolicy) -> ValueTable:
    """V^pi by backward induction on the true kernel."""
    policy.check_against(mdp)
    rows = mdp.true_kernel.rows
    num_x, num_xi = mdp.num_x, mdp.num_xi
    x_index = np.arange(num_x)[:, None]
    xi_index = np.arange(num_xi)[None, :]
    v = np.zeros((mdp.horizon + 1, num_x, num_xi))
    for h in reversed(range(mdp.horizon)):
        actions = policy.action[h]
        v[h] = mdp.reward[x_index, actions, xi_index]
        if h + 1 < mdp.horizon:
            # cont[x][a][xi'] -> value of following pi's action at (x, xi)
            cont = continuation_values(mdp, v[h + 1])
            cont_pi = cont[x_index, actions, :]
            v[h] += np.einsum("kj,xkj->xk", rows[h], cont_pi)
    return ValueTable(v)


def optimal_values(mdp: TabularExoMdp) -> ValueTable:
    """V* from planning on the true kernel."""
    return pto_plan(mdp, mdp.true_kernel).v


def instantaneous_regret(
    mdp: TabularExoMdp,
    policy: TabularPolicy,
    mode: RegretMode = "summed",
    x1: int = 0,
    xi1: int = 0,
    v_star: ValueTable | None = None,
) -> float:
    """Stage-1 value gap, summed over every (x, xi) or at the single state (x1, xi1)."""
    if v_star is None:
        v_star = optimal_values(mdp)
    gap = v_star.stage_one() - exact_evaluate(mdp, policy).stage_one()
    if mode == "summed":
        return float(np.sum(gap))
    if mode == "fixed":
        x1 = check_index("x1", x1, mdp.num_x)
        xi1 = check_index("xi1", xi1, mdp.num_xi)
        return float(gap[x1, xi1])
    raise InvalidInputError(f"unknown regret mode '{mode}'")


def model_error_frobenius(kernel_hat: EmpiricalKernel | ExoKernel, kernel_true: ExoKernel) -> float:
    """Mean Frobenius norm of P_hat_h - P_h over the transition stages.

    The last stage row never receives data, so with H > 1 stages only the
    first H - 1 enter the mean; a single-stage kernel uses its only stage.
    """
    rows_true = kernel_true.rows
    rows_hat = kernel_rows(kernel_hat, rows_true.shape[0], rows_true.shape[1])
    stages = rows_true.shape[0]
    used = stages - 1 if stages > 1 else 1
    diff = rows_hat[:used] - rows_true[:used]
    return float(np.mean(np.linalg.norm(diff, ord="fro", axis=(1, 2))))


""" Storage evaluation """


@dataclass(frozen=True, eq=False)
class StorageOracle:
    """Greedy comparator policy, weights on its own (dense) basis."""

    basis: HatBasis
    weights: WeightTable


@dataclass(frozen=True)
class StorageEvaluation:
    mean_return: float
    oracle_mean_return: float
    regret: float
    regret_se: float


def oracle_anchor_count(num_anchors: int, factor: int = ORACLE_ANCHOR_FACTOR) -> int:
    """Anchors of the uniform grid that refines an N-anchor uniform grid factor times.

    factor (N - 1) + 1 anchors keep every learner anchor on the oracle grid.
    """
    if num_anchors < 2 or factor < 1:
        raise InvalidInputError(f"need num_anchors >= 2 and factor >= 1, got {num_anchors} and {factor}")
    return factor * (num_anchors - 1) + 1


def make_storage_oracle(spec: StorageSpec, num_anchors: int) -> StorageOracle:
    """LSVI on the true price kernel with num_anchors uniform anchors."""
    basis = HatBasis(AnchorGrid.uniform(spec.capacity, num_anchors))
    weights = lsvi_backward_pass(spec, basis, spec.price_kernel)
    logger.info(f"Built storage oracle with {num_anchors} anchors")
    return StorageOracle(basis=basis, weights=weights)


def rollout_storage_policy(
    spec: StorageSpec,
    basis: HatBasis,
    weights: WeightTable,
    x1: np.ndarray,
    xi: np.ndarray,
) -> np.ndarray:
    """Return of the greedy policy induced by weights along each price trace."""
    x = np.asarray(x1, dtype=float).copy()
    total = np.zeros(x.shape[0])
    for h in range(spec.horizon):
        prices = xi[:, h]
        actions, _ = greedy_actions(spec, basis, weights.w[h][prices], x, prices)
        total += storage_reward(spec, x, actions, prices)
        if h + 1 < spec.horizon:
            x = storage_pre_decision(spec, storage_post_decisions(spec, x, actions), 0)
    return total


def evaluate_storage_policy(
    spec: StorageSpec,
    basis: HatBasis,
    weights: WeightTable,
    grid: list[float] | np.ndarray,
    num_rollouts: int,
    rng: np.random.Generator,
    oracle: StorageOracle | None = None,
) -> StorageEvaluation:
    """Monte-Carlo return and regret against the oracle on shared price traces.

    Every start level in grid gets num_rollouts traces with xi_1 uniform; the
    policy and the oracle are rolled along the same traces.
    """
    if num_rollouts < 1:
        raise InvalidInputError(f"num_rollouts={num_rollouts} must be positive")
    if oracle is None:
        oracle = make_storage_oracle(spec, oracle_anchor_count(basis.size))
    starts = np.repeat(np.asarray(grid, dtype=float), num_rollouts)
    xi1 = rng.integers(spec.num_prices, size=starts.size)
    xi = sample_exo_traces(spec.price_kernel, spec.horizon, xi1, rng)

    returns = rollout_storage_policy(spec, basis, weights, starts, xi)
    oracle_returns = rollout_storage_policy(spec, oracle.basis, oracle.weights, starts, xi)
    diff = oracle_returns - returns
    se = float(np.std(diff, ddof=1) / np.sqrt(diff.size)) if diff.size > 1 else 0.0
    return StorageEvaluation(
        mean_return=float(np.mean(returns)),
        oracle_mean_return=float(np.mean(oracle_returns)),
        regret=float(np.mean(diff)),
        regret_se=se,
    )
