"""Backward dynamic programming for tabular Exo-MDPs.

pto_plan solves the Bellman recursion on a plug-in kernel (predict, then
optimize). pto_opt_plan replaces every expectation over the next exogenous
state by its optimistic version inside the L1 ball around the empirical
row; the optimistic row is recomputed for every (h, x, a, xi) because the
continuation values V[h+1][f[x][a][.]][.] depend on (x, a).

ftl_erm_plan is the exhaustive hindsight planner: it scores every
deterministic policy by its mean return replayed along the observed traces.
It is only usable on tiny instances and serves as an oracle.
"""

# python modules
import itertools
import logging
from dataclasses import dataclass

import numpy as np

# our modules
from exo_mdp.errors import CapacityError, InvalidInputError
from exo_mdp.exo_core import (
    ExoKernel,
    ExoTrace,
    TabularExoMdp,
    TabularPolicy,
    ValueTable,
    check_index,
    hindsight_values,
    traces_to_array,
)
from exo_mdp.kernels import EmpiricalKernel, OptimismConfig, bonus_radius, kernel_rows, optimistic_rows

logger = logging.getLogger(__name__)

DEFAULT_POLICY_CAP = 2**20


@dataclass(frozen=True, eq=False)
class PlannerOutput:
    """Greedy policy with its Q[h][x][xi][a] and V tables."""

    policy: TabularPolicy
    q: np.ndarray
    v: ValueTable


def continuation_values(mdp: TabularExoMdp, v_next: np.ndarray) -> np.ndarray:
    """cont[x][a][xi'] = V_{h+1}(f[x][a][xi'], xi')."""
    xi_next = np.arange(mdp.num_xi)
    return v_next[mdp.endo_map, xi_next[None, None, :]]


def _greedy(q_h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # np.argmax returns the lowest index on ties
    actions = np.argmax(q_h, axis=-1)
    return actions, np.take_along_axis(q_h, actions[..., None], axis=-1)[..., 0]


def _backward_induction(mdp: TabularExoMdp, expected_continuation) -> PlannerOutput:
    horizon, num_x, num_xi, num_a = mdp.horizon, mdp.num_x, mdp.num_xi, mdp.num_a
    q = np.zeros((horizon, num_x, num_xi, num_a))
    v = np.zeros((horizon + 1, num_x, num_xi))
    actions = np.zeros((horizon, num_x, num_xi), dtype=np.int64)
    # reward[x][a][xi] -> [x][xi][a]
    reward = np.transpose(mdp.reward, (0, 2, 1))
    for h in reversed(range(horizon)):
        if h == horizon - 1:
            q[h] = reward
        else:
            cont = continuation_values(mdp, v[h + 1])
            q[h] = reward + expected_continuation(h, cont)
        actions[h], v[h] = _greedy(q[h])
    return PlannerOutput(policy=TabularPolicy(actions), q=q, v=ValueTable(v))


def pto_plan(mdp: TabularExoMdp, kernel: ExoKernel | EmpiricalKernel) -> PlannerOutput:
    """Exact backward induction on the plug-in kernel."""
    rows = kernel_rows(kernel, mdp.horizon, mdp.num_xi)

    def expected(h: int, cont: np.ndarray) -> np.ndarray:
        # sum_xi' P[h][xi][xi'] cont[x][a][xi'] -> [x][xi][a]
        return np.einsum("kj,xaj->xka", rows[h], cont)

    return _backward_induction(mdp, expected)


def pto_opt_plan(mdp: TabularExoMdp, kernel: EmpiricalKernel, cfg: OptimismConfig) -> PlannerOutput:
    """Backward induction with the optimistic row in every (h, x, a, xi) backup."""
    rows = kernel_rows(kernel, mdp.horizon, mdp.num_xi)
    if cfg.c == 0:
        return pto_plan(mdp, kernel)
    num_x, num_xi, num_a = mdp.num_x, mdp.num_xi, mdp.num_a
    bonus = bonus_radius(cfg, kernel.row_counts)

    def expected(h: int, cont: np.ndarray) -> np.ndarray:
        # one optimistic problem per (x, xi, a): row P[h][xi], values cont[x][a]
        batch_rows = np.broadcast_to(rows[h][None, :, None, :], (num_x, num_xi, num_a, num_xi))
        batch_values = np.broadcast_to(cont[:, None, :, :], (num_x, num_xi, num_a, num_xi))
        batch_bonus = np.broadcast_to(bonus[h][None, :, None], (num_x, num_xi, num_a))
        optimistic = optimistic_rows(
            batch_rows.reshape(-1, num_xi),
            batch_values.reshape(-1, num_xi),
            batch_bonus.reshape(-1),
        ).reshape(num_x, num_xi, num_a, num_xi)
        return np.einsum("xkaj,xaj->xka", optimistic, cont)

    return _backward_induction(mdp, expected)


def enumerate_policies(mdp: TabularExoMdp, policy_cap: int = DEFAULT_POLICY_CAP):
    """Yield every deterministic policy action array in lexicographic order."""
    required = mdp.num_policies
    if required > policy_cap:
        raise CapacityError(
            f"policy space has {mdp.num_a}^{mdp.horizon * mdp.num_x * mdp.num_xi} policies, "
            f"policy_cap must be at least {required} (got {policy_cap})",
            required_cap=required,
        )
    shape = (mdp.horizon, mdp.num_x, mdp.num_xi)
    for flat in itertools.product(range(mdp.num_a), repeat=int(np.prod(shape))):
        yield np.array(flat, dtype=np.int64).reshape(shape)


def ftl_erm_plan(
    mdp: TabularExoMdp,
    traces: list[ExoTrace],
    x1: int,
    policy_cap: int = DEFAULT_POLICY_CAP,
) -> TabularPolicy:
    """Policy with the best mean hindsight return over the traces.

    Ties keep the lexicographically smallest policy; with no traces every
    policy scores 0 and the all-zero policy is returned.
    """
    x1 = check_index("x1", x1, mdp.num_x)
    xi = traces_to_array(traces, mdp.horizon)
    if np.any(xi >= mdp.num_xi):
        raise InvalidInputError(f"trace entries must lie in [0, {mdp.num_xi})")
    best_action, best_score = None, -np.inf
    for action in enumerate_policies(mdp, policy_cap):
        score = float(hindsight_values(mdp, action, x1, xi).mean()) if len(xi) else 0.0
        if score > best_score:
            best_action, best_score = action, score
    logger.debug(f"ftl_erm_plan: best mean hindsight value {best_score:.6f} over {len(xi)} traces")
    return TabularPolicy(best_action)
