"""Least-squares value iteration on anchor sets.

Post-decision values are linear in features, V_h(x^a, xi) = phi(x^a)^T w_h(xi).
The weights are fitted backwards in h on a fixed set of anchors: the target
at anchor n is the expected (over the next exogenous state) greedy value of
the pre-decision state reached from that anchor, and the weights solve the
least-squares system Sigma w = Phi y with Sigma = Phi Phi^T.

The storage benchmark uses a 1-D hat basis on a uniform grid, for which
Phi = I and w is the target vector itself. Its greedy step is a 1-D
maximization of a continuous piecewise-linear function of the action, solved
exactly by evaluating every breakpoint.
"""

# python modules
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Protocol, Sequence

import numpy as np
from scipy import linalg

# our modules
from exo_mdp.errors import ConditioningError, InvalidInputError
from exo_mdp.exo_core import ExoKernel, TabularExoMdp, check_probability_rows
from exo_mdp.kernels import EmpiricalKernel, OptimismConfig, bonus_radius, kernel_rows, optimistic_rows

logger = logging.getLogger(__name__)

DEFAULT_STORAGE_BONUS_C = 0.5
ACTION_TOLERANCE = 1e-12
BREAKPOINT_MERGE_TOLERANCE = 1e-12
# relative to the largest eigenvalue of Sigma
CONDITIONING_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class AnchorGrid:
    """Strictly increasing anchors rho_1 < ... < rho_N."""

    anchors: np.ndarray

    def __post_init__(self) -> None:
        anchors = np.array(self.anchors, dtype=float).reshape(-1)
        if anchors.size < 2:
            raise InvalidInputError(f"an anchor grid needs N >= 2 anchors, got {anchors.size}")
        if np.any(np.diff(anchors) <= 0):
            raise InvalidInputError("anchors must be strictly increasing")
        object.__setattr__(self, "anchors", anchors)

    @classmethod
    def uniform(cls, capacity: float, num_anchors: int) -> "AnchorGrid":
        """rho_n = (n - 1) C / (N - 1)."""
        return cls(np.linspace(0.0, capacity, num_anchors))

    @property
    def size(self) -> int:
        return self.anchors.size


@dataclass(frozen=True, eq=False)
class HatBasis:
    """Piecewise-linear nodal basis on an anchor grid, phi(rho_n) = e_n."""

    grid: AnchorGrid

    @property
    def size(self) -> int:
        return self.grid.size

    def _locate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        anchors = self.grid.anchors
        x = np.clip(x, anchors[0], anchors[-1])
        j = np.clip(np.searchsorted(anchors, x, side="right") - 1, 0, anchors.size - 2)
        t = (x - anchors[j]) / (anchors[j + 1] - anchors[j])
        return j, t

    def interpolate(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """phi(x)^T w for a batch, x of shape (B,) and w of shape (N,) or (B, N)."""
        x = np.asarray(x, dtype=float)
        j, t = self._locate(x)
        w = np.broadcast_to(w, x.shape + (self.size,))
        left = np.take_along_axis(w, j[..., None], axis=-1)[..., 0]
        right = np.take_along_axis(w, (j + 1)[..., None], axis=-1)[..., 0]
        return (1.0 - t) * left + t * right


def hat_features(basis: HatBasis, x: float) -> np.ndarray:
    """Hat coordinates of x (clipped to the grid), at most two nonzero."""
    j, t = basis._locate(np.asarray(x, dtype=float))
    phi = np.zeros(basis.size)
    phi[int(j)] = 1.0 - float(t)
    phi[int(j) + 1] += float(t)
    return phi


@dataclass(frozen=True, eq=False)
class StorageSpec:
    """Storage control with a Markov price.

    The action a charges (a > 0) or discharges (a < 0). reward_sign selects
    the convention of the price term: +1 gives r = zeta a - cost, -1 gives
    r = -zeta a - cost. With clip_trades the price and transaction terms are
    charged on the energy actually exchanged when the storage bound binds.
    """

    capacity: float
    a_max: float
    prices: np.ndarray
    price_kernel: ExoKernel
    horizon: int
    eta_plus: float = 1.0
    eta_minus: float = 1.0
    leakage: float = 1.0
    trans_cost: float = 0.1
    holding: float = 0.01
    reward_sign: int = 1
    clip_trades: bool = True

    def __post_init__(self) -> None:
        prices = np.array(self.prices, dtype=float).reshape(-1)
        object.__setattr__(self, "prices", prices)
        if self.capacity <= 0 or self.a_max <= 0:
            raise InvalidInputError(f"capacity={self.capacity} and a_max={self.a_max} must be positive")
        if self.eta_plus <= 0 or self.eta_minus <= 0:
            raise InvalidInputError("efficiencies eta_plus and eta_minus must be positive")
        if not 0.0 < self.leakage <= 1.0:
            raise InvalidInputError(f"leakage={self.leakage} must lie in (0, 1]")
        if self.trans_cost < 0 or self.holding < 0:
            raise InvalidInputError("trans_cost and holding must be nonnegative")
        if self.reward_sign not in (1, -1):
            raise InvalidInputError(f"reward_sign={self.reward_sign} must be +1 or -1")
        if self.price_kernel.num_xi != prices.size or self.price_kernel.stages != self.horizon:
            raise InvalidInputError(
                f"price kernel shape {self.price_kernel.rows.shape} does not match "
                f"{prices.size} prices and horizon {self.horizon}"
            )

    @property
    def num_prices(self) -> int:
        return self.prices.size


@dataclass(frozen=True, eq=False)
class WeightTable:
    """w[h][xi] in R^N for stages 1..H; the stage-H slice is the terminal one."""

    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.w, dtype=float)
        if w.ndim != 3:
            raise InvalidInputError(f"weights must have shape (H, Y, N), got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise InvalidInputError("weights must be finite")
        object.__setattr__(self, "w", w)

    @property
    def horizon(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class PiecewiseLinear1D:
    """Continuous function on [lo, hi], linear between consecutive breakpoints."""

    lo: float
    hi: float
    breakpoints: Sequence[float]
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.func(np.asarray(points, dtype=float))


class BreakpointMax(NamedTuple):
    argmax: float
    value: float


class GreedyAction(NamedTuple):
    action: float
    q: float


def breakpoint_maximize(obj: PiecewiseLinear1D) -> BreakpointMax:
    """Maximize by evaluating every breakpoint; lowest point on ties."""
    if len(obj.breakpoints) == 0:
        raise InvalidInputError("breakpoint set is empty")
    points = np.unique(np.concatenate([np.asarray(obj.breakpoints, dtype=float), [obj.lo, obj.hi]]))
    points = points[(points >= obj.lo) & (points <= obj.hi)]
    values = obj(points)
    best = int(np.argmax(values))
    return BreakpointMax(argmax=float(points[best]), value=float(values[best]))


""" Storage dynamics """


def storage_post_decisions(spec: StorageSpec, x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Batched storage_post_decision without the action bound check."""
    charge = np.maximum(a, 0.0)
    discharge = np.maximum(-a, 0.0)
    return np.clip(x + spec.eta_plus * charge - discharge / spec.eta_minus, 0.0, spec.capacity)


def storage_post_decision(spec: StorageSpec, x: float, a: float) -> float:
    """x^a = clip(x + eta+ a+ - a- / eta-, 0, C)."""
    if abs(a) > spec.a_max + ACTION_TOLERANCE:
        raise InvalidInputError(f"action a={a} exceeds a_max={spec.a_max}")
    return float(storage_post_decisions(spec, np.asarray(x, dtype=float), np.asarray(a, dtype=float)))


def storage_pre_decision(spec: StorageSpec, x_post: float, xi: int) -> float:
    """x_{h+1} = leakage * x^a; the price does not enter the storage update."""
    return spec.leakage * x_post


def storage_reward(spec: StorageSpec, x: np.ndarray, a: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """sign * zeta_xi * a - trans_cost |a| - holding x (a is the exchanged energy with clip_trades)."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if spec.clip_trades:
        change = storage_post_decisions(spec, x, a) - x
        a = np.where(a >= 0.0, change / spec.eta_plus, change * spec.eta_minus)
    price = spec.prices[np.asarray(xi)]
    return spec.reward_sign * price * a - spec.trans_cost * np.abs(a) - spec.holding * x


def _raw_action_breakpoints(spec: StorageSpec, basis: HatBasis, x: np.ndarray) -> np.ndarray:
    """Candidate kinks per state, shape (B, 2N + 5), NaN where a branch does not apply."""
    anchors = basis.grid.anchors[None, :]
    x = np.asarray(x, dtype=float)[:, None]
    charge = (anchors - x) / spec.eta_plus
    charge = np.where(charge >= 0.0, charge, np.nan)
    discharge = spec.eta_minus * (anchors - x)
    discharge = np.where(discharge <= 0.0, discharge, np.nan)
    batch = x.shape[0]
    fixed = np.column_stack(
        [
            np.full(batch, -spec.a_max),
            np.zeros(batch),
            np.full(batch, spec.a_max),
            (spec.capacity - x[:, 0]) / spec.eta_plus,
            -spec.eta_minus * x[:, 0],
        ]
    )
    return np.concatenate([fixed, charge, discharge], axis=1)


def storage_action_breakpoints(spec: StorageSpec, basis: HatBasis, x: float) -> np.ndarray:
    """Sorted actions in [-a_max, a_max] where reward plus continuation can change slope."""
    raw = _raw_action_breakpoints(spec, basis, np.array([x], dtype=float))[0]
    raw = raw[np.isfinite(raw)]
    raw = raw[(raw >= -spec.a_max - ACTION_TOLERANCE) & (raw <= spec.a_max + ACTION_TOLERANCE)]
    raw = np.sort(np.clip(raw, -spec.a_max, spec.a_max))
    keep = np.concatenate([[True], np.diff(raw) > BREAKPOINT_MERGE_TOLERANCE])
    return raw[keep]


def storage_q(
    spec: StorageSpec,
    basis: HatBasis,
    w_next: np.ndarray,
    x: np.ndarray,
    xi: np.ndarray,
    a: np.ndarray,
) -> np.ndarray:
    """r(x, a, xi) + phi(f^a(x, a))^T w_next, broadcast over a batch of states and actions."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    xi = np.asarray(xi)
    post = storage_post_decisions(spec, x, a)
    return storage_reward(spec, x, a, xi) + basis.interpolate(post, w_next)


def lsvi_greedy_action(
    spec: StorageSpec,
    basis: HatBasis,
    w_next: np.ndarray,
    x: float,
    xi: int,
) -> GreedyAction:
    """Exact greedy action at one state by breakpoint enumeration."""
    w_next = np.asarray(w_next, dtype=float)

    def objective(actions: np.ndarray) -> np.ndarray:
        return storage_q(spec, basis, w_next, np.full(actions.shape, x), np.full(actions.shape, xi), actions)

    obj = PiecewiseLinear1D(
        lo=-spec.a_max,
        hi=spec.a_max,
        breakpoints=storage_action_breakpoints(spec, basis, x),
        func=objective,
    )
    best = breakpoint_maximize(obj)
    return GreedyAction(action=best.argmax, q=best.value)


def greedy_actions(
    spec: StorageSpec,
    basis: HatBasis,
    w_next: np.ndarray,
    x: np.ndarray,
    xi: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized lsvi_greedy_action over a batch; w_next has shape (B, N)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi)
    candidates = _raw_action_breakpoints(spec, basis, x)
    candidates = np.where(np.isfinite(candidates), candidates, 0.0)
    candidates = np.sort(np.clip(candidates, -spec.a_max, spec.a_max), axis=1)
    q = storage_q(
        spec,
        basis,
        np.asarray(w_next, dtype=float)[:, None, :],
        x[:, None],
        xi[:, None],
        candidates,
    )
    best = np.argmax(q, axis=1)
    rows = np.arange(x.shape[0])
    return candidates[rows, best], q[rows, best]


""" Backward passes """


def _expected_targets(
    rows_h: np.ndarray,
    next_values: np.ndarray,
    bonus_h: np.ndarray | None,
) -> np.ndarray:
    """y[xi][n] = sum_xi' P(xi' | xi) G[n][xi'], optimistic per (xi, n) when bonus_h is given."""
    if bonus_h is None:
        return rows_h @ next_values.T
    num_xi, num_anchors = rows_h.shape[0], next_values.shape[0]
    batch_rows = np.broadcast_to(rows_h[:, None, :], (num_xi, num_anchors, num_xi)).reshape(-1, num_xi)
    batch_values = np.broadcast_to(next_values[None, :, :], (num_xi, num_anchors, num_xi)).reshape(-1, num_xi)
    batch_bonus = np.broadcast_to(bonus_h[:, None], (num_xi, num_anchors)).reshape(-1)
    optimistic = optimistic_rows(batch_rows, batch_values, batch_bonus)
    return np.sum(optimistic * batch_values, axis=1).reshape(num_xi, num_anchors)


def _bonus_table(kernel: ExoKernel | EmpiricalKernel, optimism: OptimismConfig | None) -> np.ndarray | None:
    if optimism is None or optimism.c == 0:
        return None
    if not isinstance(kernel, EmpiricalKernel):
        raise InvalidInputError("optimism needs an EmpiricalKernel with row counts")
    return bonus_radius(optimism, kernel.row_counts)


def _factor_design(phi: np.ndarray) -> tuple[Any, float]:
    """Cholesky factor of Sigma = Phi Phi^T, or ConditioningError with lambda_min."""
    sigma = phi @ phi.T
    eigenvalues = linalg.eigvalsh(sigma)
    lambda_min, lambda_max = float(eigenvalues[0]), float(eigenvalues[-1])
    if lambda_min <= CONDITIONING_TOLERANCE * max(lambda_max, 1.0):
        raise ConditioningError(
            f"anchor design is rank deficient, lambda_min(Sigma)={lambda_min:.3e}",
            lambda_min=lambda_min,
        )
    return linalg.cho_factor(sigma), lambda_min


def lsvi_backward_pass(
    spec: StorageSpec,
    basis: HatBasis,
    kernel: ExoKernel | EmpiricalKernel,
    optimism: OptimismConfig | None = None,
) -> WeightTable:
    """Storage LSVI (pure exploitation, or optimistic when optimism is given)."""
    rows = kernel_rows(kernel, spec.horizon, spec.num_prices)
    bonus = _bonus_table(kernel, optimism)
    anchors = basis.grid.anchors
    num_anchors, num_xi = anchors.size, spec.num_prices
    phi = np.stack([hat_features(basis, rho) for rho in anchors], axis=1)
    factor, _ = _factor_design(phi)

    w = np.zeros((spec.horizon, num_xi, num_anchors))
    # pre-decision states g(rho_n, xi') for every (n, xi')
    pre = np.repeat(storage_pre_decision(spec, anchors, 0)[:, None], num_xi, axis=1)
    xi_next = np.broadcast_to(np.arange(num_xi)[None, :], (num_anchors, num_xi))
    for h in reversed(range(spec.horizon - 1)):
        w_next = w[h + 1][xi_next.reshape(-1)]
        _, best_q = greedy_actions(spec, basis, w_next, pre.reshape(-1), xi_next.reshape(-1))
        next_values = best_q.reshape(num_anchors, num_xi)
        targets = _expected_targets(rows[h], next_values, None if bonus is None else bonus[h])
        w[h] = linalg.cho_solve(factor, phi @ targets.T).T
    logger.debug(f"lsvi_backward_pass: H={spec.horizon}, N={num_anchors}, optimistic={bonus is not None}")
    return WeightTable(w)


class LsviModel(Protocol):
    """Environment hooks needed by the generic anchored LSVI pass."""

    horizon: int
    num_xi: int

    def next_state(self, anchor: Any, xi_next: int) -> Any: ...

    def max_q(self, state: Any, xi: int, w: np.ndarray) -> float: ...


def general_lsvi_backward_pass(
    anchors: Sequence[Any],
    features: Callable[[Any], np.ndarray],
    model: LsviModel,
    kernel: ExoKernel | EmpiricalKernel,
    optimism: OptimismConfig | None = None,
    terminal_weights: np.ndarray | None = None,
) -> WeightTable:
    """Anchored LSVI with an explicit least-squares solve.

    Sigma = Phi Phi^T must be nonsingular (Phi of full row rank).
    terminal_weights seeds the stage-H slice (zero by default).
    """
    rows = kernel_rows(kernel, model.horizon, model.num_xi)
    bonus = _bonus_table(kernel, optimism)
    phi = np.stack([np.asarray(features(anchor), dtype=float) for anchor in anchors], axis=1)
    factor, lambda_min = _factor_design(phi)
    dim, num_anchors = phi.shape
    num_xi = model.num_xi

    w = np.zeros((model.horizon, num_xi, dim))
    if terminal_weights is not None:
        w[-1] = np.broadcast_to(terminal_weights, (num_xi, dim))
    for h in reversed(range(model.horizon - 1)):
        next_values = np.empty((num_anchors, num_xi))
        for n, anchor in enumerate(anchors):
            for xi_next in range(num_xi):
                state = model.next_state(anchor, xi_next)
                next_values[n, xi_next] = model.max_q(state, xi_next, w[h + 1][xi_next])
        targets = _expected_targets(rows[h], next_values, None if bonus is None else bonus[h])
        w[h] = linalg.cho_solve(factor, phi @ targets.T).T
    logger.debug(f"general_lsvi_backward_pass: d={dim}, anchors={num_anchors}, lambda_min={lambda_min:.3e}")
    return WeightTable(w)


class TabularLsviModel:
    """Tabular Exo-MDP seen through one-hot features on post-decision pairs (x, a)."""

    def __init__(self, mdp: TabularExoMdp) -> None:
        self.mdp = mdp
        self.horizon = mdp.horizon
        self.num_xi = mdp.num_xi
        self.anchors = [(x, a) for x in range(mdp.num_x) for a in range(mdp.num_a)]

    def features(self, anchor: tuple[int, int]) -> np.ndarray:
        x, a = anchor
        phi = np.zeros(self.mdp.num_x * self.mdp.num_a)
        phi[x * self.mdp.num_a + a] = 1.0
        return phi

    def next_state(self, anchor: tuple[int, int], xi_next: int) -> int:
        x, a = anchor
        return int(self.mdp.endo_map[x, a, xi_next])

    def _q(self, x: int, xi: int, w: np.ndarray) -> np.ndarray:
        num_a = self.mdp.num_a
        return self.mdp.reward[x, :, xi] + w[x * num_a:(x + 1) * num_a]

    def max_q(self, state: int, xi: int, w: np.ndarray) -> float:
        return float(np.max(self._q(state, xi, w)))

    def values(self, weights: WeightTable) -> np.ndarray:
        """V[h][x][xi] = max_a r + phi(x, a)^T w_h(xi), terminal slice appended."""
        mdp = self.mdp
        v = np.zeros((mdp.horizon + 1, mdp.num_x, mdp.num_xi))
        for h in range(mdp.horizon):
            for x in range(mdp.num_x):
                for xi in range(mdp.num_xi):
                    v[h, x, xi] = self.max_q(x, xi, weights.w[h][xi])
        return v


class StorageLsviModel:
    """Storage benchmark seen through the generic LSVI hooks."""

    def __init__(self, spec: StorageSpec, basis: HatBasis) -> None:
        self.spec = spec
        self.basis = basis
        self.horizon = spec.horizon
        self.num_xi = spec.num_prices
        self.anchors = list(basis.grid.anchors)

    def features(self, anchor: float) -> np.ndarray:
        return hat_features(self.basis, anchor)

    def next_state(self, anchor: float, xi_next: int) -> float:
        return storage_pre_decision(self.spec, anchor, xi_next)

    def max_q(self, state: float, xi: int, w: np.ndarray) -> float:
        return lsvi_greedy_action(self.spec, self.basis, w, state, xi).q


""" Transport diagnostics """


@dataclass(frozen=True, eq=False)
class TransportDiagnostic:
    matrix: np.ndarray
    sigma_max: float
    row_sums: np.ndarray
    column_sums: np.ndarray


def greedy_anchor_actions(
    spec: StorageSpec,
    basis: HatBasis,
    weights: WeightTable,
    stage: int,
    xi_next: int,
) -> np.ndarray:
    """Greedy action at stage `stage` (0-based) from every pre-decision state g(rho_n, xi_next)."""
    anchors = basis.grid.anchors
    pre = storage_pre_decision(spec, anchors, xi_next)
    w_next = np.broadcast_to(weights.w[stage][xi_next], (anchors.size, basis.size))
    actions, _ = greedy_actions(spec, basis, w_next, pre, np.full(anchors.size, xi_next))
    return actions


def transport_diagnostic(
    spec: StorageSpec,
    basis: HatBasis,
    policy_actions: np.ndarray,
    xi_next: int,
) -> TransportDiagnostic:
    """Interpolation-weight transport of every anchor under one post-decision step.

    Row n is phi(f^a(g(rho_n, xi_next), a_n)). The largest singular value is
    reported, not enforced; a warning is logged when it exceeds 1.
    """
    anchors = basis.grid.anchors
    policy_actions = np.asarray(policy_actions, dtype=float)
    if policy_actions.shape != anchors.shape:
        raise InvalidInputError(f"need one action per anchor, got {policy_actions.shape}")
    matrix = np.stack(
        [
            hat_features(basis, storage_post_decision(spec, storage_pre_decision(spec, rho, xi_next), a))
            for rho, a in zip(anchors, policy_actions)
        ]
    )
    check_probability_rows("transport matrix", matrix)
    sigma_max = float(np.linalg.norm(matrix, 2))
    if sigma_max > 1.0 + 1e-9:
        logger.warning(f"transport sigma_max={sigma_max:.6f} exceeds 1 for xi_next={xi_next}")
    return TransportDiagnostic(
        matrix=matrix,
        sigma_max=sigma_max,
        row_sums=matrix.sum(axis=1),
        column_sums=matrix.sum(axis=0),
    )
