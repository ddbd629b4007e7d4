"""
Online TD updates for the table, matrix and tensor value models

Every update touches only the parameters indexed by the observed (s_t, a_t):
one table entry, one row of L plus one column of R, or one row per tensor
factor. Factor updates run in order (L then R; mode 0..D-1) and each one sees
the factors already updated in this step.
"""

import logging
from typing import Optional

import numpy as np

from .config import LearnerConfig
from .models import MatrixFactors, QTable, TensorFactors
from ..envs.discretization import MultiIndex
from ..utils.config import Config
from ..utils.errors import DivergenceError

logger = logging.getLogger(__name__)


def td_target(reward: float, next_best_value: float, discount: float, terminal: bool) -> float:
    """r + gamma * max_a Q(s', a), or r on terminal transitions"""
    if terminal:
        return float(reward)
    return float(reward + discount * next_best_value)


def q_learning_update(q: QTable, state: MultiIndex, action: MultiIndex, target: float, alpha: float,
                      divergence_threshold: float = Config.DIVERGENCE_THRESHOLD) -> QTable:
    """Q[s, a] += alpha * (target - Q[s, a]); no other entry changes"""
    s, a = q.state_flat(state), q.action_flat(action)
    q.values[s, a] += alpha * (target - q.values[s, a])
    if not np.isfinite(q.values[s, a]) or abs(q.values[s, a]) > divergence_threshold:
        raise DivergenceError(f"Q-table entry ({s}, {a}) diverged (value {q.values[s, a]:.3e}); "
                              f"consider a smaller step size", factor="qtable")
    return q


def factor_row_step(row: np.ndarray, partial: np.ndarray, target: float, alpha: float,
                    frobenius_weight: float = 0.0, rescale_gradient: bool = False) -> np.ndarray:
    """One stochastic step on a factor row.

    With estimate = row . partial the update direction is
    (target - estimate) * partial - eta * row, i.e. minus half the gradient of
    the frozen-target squared TD error plus the Frobenius penalty. When
    rescaling, the direction is divided by max(1, ||direction||).
    """
    delta = target - float(row @ partial)
    direction = delta * partial - frobenius_weight * row
    if rescale_gradient:
        direction = direction / max(1.0, float(np.linalg.norm(direction)))
    return row + alpha * direction


def _check_row(row: np.ndarray, name: str, threshold: float):
    if not np.all(np.isfinite(row)) or np.max(np.abs(row)) > threshold:
        raise DivergenceError(f"Factor {name} diverged (max |entry| = {np.max(np.abs(row)):.3e}); "
                              f"consider a smaller step size", factor=name)


def mlr_update(f: MatrixFactors, state: MultiIndex, action: MultiIndex, reward: float,
               next_state: Optional[MultiIndex], terminal: bool, cfg: LearnerConfig,
               alpha: Optional[float] = None) -> MatrixFactors:
    """Matrix low-rank TD step: update row L[s_t], then column R[:, a_t]"""
    alpha = cfg.alpha if alpha is None else alpha
    s, a = f.state_flat(state), f.action_flat(action)
    s_next = None if terminal else f.state_flat(next_state)

    def target() -> float:
        next_best = 0.0 if terminal else float(np.max(f.left[s_next] @ f.right))
        return td_target(reward, next_best, cfg.discount, terminal)

    current = target()

    # left row against L^{t-1} R^{t-1}
    f.left[s] = factor_row_step(f.left[s], f.right[:, a], current,
                                alpha, cfg.frobenius_weight, cfg.rescale_gradient)
    _check_row(f.left[s], "left", cfg.divergence_threshold)

    # right column against L^t R^{t-1}; only L[s'] enters the target
    if not cfg.stale_target and s_next == s:
        current = target()
    f.right[:, a] = factor_row_step(f.right[:, a], f.left[s], current,
                                    alpha, cfg.frobenius_weight, cfg.rescale_gradient)
    _check_row(f.right[:, a], "right", cfg.divergence_threshold)
    return f


def mixed_partials(rows: np.ndarray) -> np.ndarray:
    """suffix[m] = elementwise product of rows[m:], with a trailing row of ones"""
    suffix = np.ones((rows.shape[0] + 1, rows.shape[1]))
    suffix[:-1] = np.cumprod(rows[::-1], axis=0)[::-1]
    return suffix


def tlr_update(f: TensorFactors, state: MultiIndex, action: MultiIndex, reward: float,
               next_state: Optional[MultiIndex], terminal: bool, cfg: LearnerConfig,
               alpha: Optional[float] = None) -> TensorFactors:
    """Tensor low-rank TD step: update the active row of every factor, mode by mode"""
    alpha = cfg.alpha if alpha is None else alpha
    index = f.grouped_index(state, action)
    next_groups = None if terminal else f.grouped_state(next_state)

    def target() -> float:
        next_best = 0.0 if terminal else float(np.max(f.grouped_action_values(f.factors, next_groups)))
        return td_target(reward, next_best, cfg.discount, terminal)

    rows = np.stack([factor[i] for factor, i in zip(f.factors, index)])
    suffix = mixed_partials(rows)
    prefix = np.ones(f.rank)
    current = target()

    for mode, i in enumerate(index):
        # factors < mode are already at time t, the rest still at t - 1
        new_row = factor_row_step(rows[mode], prefix * suffix[mode + 1], current,
                                  alpha, cfg.frobenius_weight, cfg.rescale_gradient)
        f.factors[mode][i] = new_row
        _check_row(new_row, f"mode {mode}", cfg.divergence_threshold)
        prefix = prefix * new_row

        # Q(s', .) moves with every action row but only with state rows s' shares
        if cfg.stale_target or terminal or mode == len(index) - 1:
            continue
        if mode >= f.num_state_groups or next_groups[mode] == i:
            current = target()
    return f
