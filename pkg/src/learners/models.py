"""
Value models over a discretized state-action space

All models are addressed with a state multi-index (one entry per state grid
dimension) and an action multi-index. The table and the matrix factors
flatten these with C-order ravel; the tensor factors regroup them through a
DimensionPartition.
"""

from abc import ABC, abstractmethod
from typing import Sequence, Tuple

import numpy as np

from ..envs.discretization import DimensionPartition, MultiIndex
from ..linalg.parafac import FactorSet, reconstruct
from ..utils.errors import ShapeError


class ValueModel(ABC):
    """Common interface of QTable, MatrixFactors and TensorFactors"""

    kind = "base"

    def __init__(self, state_dims: Sequence[int], action_dims: Sequence[int]):
        self.state_dims = tuple(int(c) for c in state_dims)
        self.action_dims = tuple(int(c) for c in action_dims)

    @property
    def num_states(self) -> int:
        return int(np.prod(self.state_dims))

    @property
    def num_actions(self) -> int:
        return int(np.prod(self.action_dims))

    def state_flat(self, state: MultiIndex) -> int:
        return int(np.ravel_multi_index(tuple(state), self.state_dims))

    def action_flat(self, action: MultiIndex) -> int:
        return int(np.ravel_multi_index(tuple(action), self.action_dims))

    @abstractmethod
    def action_values(self, state: MultiIndex) -> np.ndarray:
        """Values of every action at `state`, shaped like action_dims"""

    @abstractmethod
    def value(self, state: MultiIndex, action: MultiIndex) -> float:
        pass

    @abstractmethod
    def to_matrix(self) -> np.ndarray:
        """C_S x C_A Q-matrix (states and actions flattened in C order)"""

    @property
    @abstractmethod
    def num_parameters(self) -> int:
        pass

    @abstractmethod
    def parameters(self) -> Tuple[np.ndarray, ...]:
        """Stored arrays (views), used for divergence checks and locality tests"""

    def max_value(self, state: MultiIndex) -> float:
        return float(np.max(self.action_values(state)))


class QTable(ValueModel):
    """Dense C_S x C_A table"""

    kind = "qtable"

    def __init__(self, values: np.ndarray, state_dims: Sequence[int], action_dims: Sequence[int]):
        super().__init__(state_dims, action_dims)
        self.values = np.array(values, dtype=float)
        if self.values.shape != (self.num_states, self.num_actions):
            raise ShapeError(f"Q-table must be {(self.num_states, self.num_actions)}, got {self.values.shape}")

    @classmethod
    def zeros(cls, state_dims, action_dims) -> 'QTable':
        return cls(np.zeros((int(np.prod(state_dims)), int(np.prod(action_dims)))), state_dims, action_dims)

    def action_values(self, state):
        return self.values[self.state_flat(state)].reshape(self.action_dims)

    def value(self, state, action):
        return float(self.values[self.state_flat(state), self.action_flat(action)])

    def to_matrix(self):
        return self.values.copy()

    @property
    def num_parameters(self):
        return self.values.size

    def parameters(self):
        return (self.values,)


class MatrixFactors(ValueModel):
    """Q = left @ right with left (C_S x K) and right (K x C_A)"""

    kind = "mlr"

    def __init__(self, left: np.ndarray, right: np.ndarray, state_dims, action_dims):
        super().__init__(state_dims, action_dims)
        self.left = np.array(left, dtype=float)
        self.right = np.array(right, dtype=float)
        if self.left.shape[0] != self.num_states or self.right.shape[1] != self.num_actions \
                or self.left.shape[1] != self.right.shape[0]:
            raise ShapeError(f"Incompatible factors {self.left.shape} and {self.right.shape}")

    @classmethod
    def random(cls, state_dims, action_dims, rank: int, seed: int = 0, scale: float = 1.0) -> 'MatrixFactors':
        num_states, num_actions = int(np.prod(state_dims)), int(np.prod(action_dims))
        left, right_t = FactorSet.random((num_states, num_actions), rank, seed=seed, scale=scale).factors
        return cls(left, right_t.T, state_dims, action_dims)

    @property
    def rank(self) -> int:
        return self.left.shape[1]

    def action_values(self, state):
        return (self.left[self.state_flat(state)] @ self.right).reshape(self.action_dims)

    def value(self, state, action):
        return float(self.left[self.state_flat(state)] @ self.right[:, self.action_flat(action)])

    def to_matrix(self):
        return self.left @ self.right

    @property
    def num_parameters(self):
        return self.left.size + self.right.size

    def parameters(self):
        return (self.left, self.right)


class TensorFactors(ValueModel):
    """PARAFAC model over the grouped state-action dimensions"""

    kind = "tlr"

    def __init__(self, factor_set: FactorSet, partition: DimensionPartition, state_dims, action_dims):
        super().__init__(state_dims, action_dims)
        self.factor_set = factor_set
        self.partition = partition
        if partition.dims != self.state_dims + self.action_dims:
            raise ShapeError(f"Partition dims {partition.dims} do not match grid {self.state_dims + self.action_dims}")
        if factor_set.dims != partition.grouped_sizes:
            raise ShapeError(f"Factor dims {factor_set.dims} do not match grouped sizes {partition.grouped_sizes}")

    @classmethod
    def random(cls, partition: DimensionPartition, rank: int, seed: int = 0, scale: float = 1.0) -> 'TensorFactors':
        state_dims = partition.dims[:partition.num_state_dims]
        action_dims = partition.dims[partition.num_state_dims:]
        factor_set = FactorSet.random(partition.grouped_sizes, rank, seed=seed, scale=scale)
        return cls(factor_set, partition, state_dims, action_dims)

    @classmethod
    def from_matrix(cls, factors: MatrixFactors) -> 'TensorFactors':
        """Same model stored as a 2-way PARAFAC (left, right^T) under the matrix partition"""
        partition = DimensionPartition.matrix(factors.state_dims + factors.action_dims, len(factors.state_dims))
        return cls(FactorSet([factors.left.copy(), factors.right.T.copy()]), partition,
                   factors.state_dims, factors.action_dims)

    @property
    def factors(self):
        return self.factor_set.factors

    @property
    def rank(self) -> int:
        return self.factor_set.rank

    @property
    def num_state_groups(self) -> int:
        return self.partition.num_state_groups

    def grouped_state(self, state: MultiIndex) -> MultiIndex:
        """Grouped indices of the state groups only"""
        full = tuple(state) + (0,) * len(self.action_dims)
        return self.partition.apply(full)[:self.num_state_groups]

    def grouped_index(self, state: MultiIndex, action: MultiIndex) -> MultiIndex:
        return self.partition.apply(tuple(state) + tuple(action))

    def action_values(self, state):
        return self.action_values_with(self.factors, state)

    def action_values_with(self, factors, state) -> np.ndarray:
        """Action values at `state` computed from an explicit list of factors"""
        grouped_values = self.grouped_action_values(factors, self.grouped_state(state))
        return self.partition.ungroup(grouped_values, slice(self.num_state_groups, None))

    def grouped_action_values(self, factors, grouped_state: MultiIndex) -> np.ndarray:
        """Action values indexed by the action groups; same entries as action_values, other layout"""
        weights = np.ones(self.rank)
        for g, i in enumerate(grouped_state):
            weights = weights * factors[g][i]

        action_factors = factors[self.num_state_groups:]
        if len(action_factors) == 1:
            return action_factors[0] @ weights
        letters = [chr(ord('a') + g) for g in range(len(action_factors))]
        operation = 'z,' + ','.join(f"{c}z" for c in letters) + '->' + ''.join(letters)
        return np.einsum(operation, weights, *action_factors, optimize=True)

    def value(self, state, action):
        index = self.grouped_index(state, action)
        rows = [f[i] for f, i in zip(self.factors, index)]
        return float(np.sum(np.prod(rows, axis=0)))

    def to_tensor(self) -> np.ndarray:
        """Full tensor over the original (ungrouped) D dimensions"""
        return self.partition.ungroup(reconstruct(self.factor_set))

    def to_matrix(self):
        return self.to_tensor().reshape(self.num_states, self.num_actions)

    @property
    def num_parameters(self):
        return self.factor_set.num_parameters

    def parameters(self):
        return tuple(self.factors)


def best_action(model: ValueModel, state: MultiIndex) -> Tuple[MultiIndex, float]:
    """Exhaustive argmax over the action grid; ties go to the lexicographically smallest index"""
    values = model.action_values(state)
    flat = int(np.argmax(values))
    action = tuple(int(i) for i in np.unravel_index(flat, model.action_dims))
    return action, float(values.reshape(-1)[flat])


def epsilon_greedy(model: ValueModel, state: MultiIndex, epsilon: float, rng: np.random.Generator) -> MultiIndex:
    """Uniform random action with probability epsilon, otherwise the greedy one"""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return tuple(int(rng.integers(c)) for c in model.action_dims)
    return best_action(model, state)[0]
