"""
Learner: a value model plus its configuration and update counter
"""

import logging
from typing import Optional

import numpy as np

from .config import LearnerConfig
from .counting import count_parameters
from .models import MatrixFactors, QTable, TensorFactors, ValueModel, best_action, epsilon_greedy
from .updates import mlr_update, q_learning_update, td_target, tlr_update
from ..envs.discretization import DimensionPartition, DiscretizationGrid, MultiIndex

logger = logging.getLogger(__name__)


def build_model(cfg: LearnerConfig, grid: DiscretizationGrid,
                partition: Optional[DimensionPartition] = None, seed: int = 0) -> ValueModel:
    """Fresh model for a grid; factor entries are uniform in (0, init_scale]"""
    init_seed = [cfg.init_seed, seed]
    if cfg.kind == 'qtable':
        return QTable.zeros(grid.state_buckets, grid.action_buckets)
    if cfg.kind == 'mlr':
        return MatrixFactors.random(grid.state_buckets, grid.action_buckets, cfg.rank,
                                    seed=init_seed, scale=cfg.init_scale)
    partition = partition or DimensionPartition.trivial(grid.dims, len(grid.state_buckets))
    return TensorFactors.random(partition, cfg.rank, seed=init_seed, scale=cfg.init_scale)


class Learner:
    """Single-owner learner; `observe` applies one TD update with alpha_t"""

    def __init__(self, model: ValueModel, cfg: LearnerConfig):
        self.model = model
        self.cfg = cfg
        self.updates = 0

    @classmethod
    def create(cls, cfg: LearnerConfig, grid: DiscretizationGrid,
               partition: Optional[DimensionPartition] = None, seed: int = 0) -> 'Learner':
        learner = cls(build_model(cfg, grid, partition, seed), cfg)
        logger.debug(f"Created {cfg.kind} learner with {learner.num_parameters} parameters")
        return learner

    @property
    def num_parameters(self) -> int:
        model = self.model
        if isinstance(model, TensorFactors):
            return count_parameters('tlr', model.state_dims, model.action_dims, model.rank,
                                    grouped_dims=model.factor_set.dims)
        rank = model.rank if isinstance(model, MatrixFactors) else 1
        return count_parameters(model.kind, model.state_dims, model.action_dims, rank)

    def act(self, state: MultiIndex, epsilon: float, rng: np.random.Generator) -> MultiIndex:
        return epsilon_greedy(self.model, state, epsilon, rng)

    def greedy(self, state: MultiIndex) -> MultiIndex:
        return best_action(self.model, state)[0]

    def observe(self, state: MultiIndex, action: MultiIndex, reward: float,
                next_state: MultiIndex, terminal: bool):
        self.updates += 1
        alpha = self.cfg.step_size(self.updates)

        if isinstance(self.model, QTable):
            next_best = 0.0 if terminal else self.model.max_value(next_state)
            target = td_target(reward, next_best, self.cfg.discount, terminal)
            q_learning_update(self.model, state, action, target, alpha, self.cfg.divergence_threshold)
        elif isinstance(self.model, MatrixFactors):
            mlr_update(self.model, state, action, reward, next_state, terminal, self.cfg, alpha)
        else:
            tlr_update(self.model, state, action, reward, next_state, terminal, self.cfg, alpha)
