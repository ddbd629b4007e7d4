"""
Parameter and update-count arithmetic for the three value models
"""

from typing import Sequence

import numpy as np

from ..utils.errors import ConfigError


def _check(dims: Sequence[int], rank: int = 1):
    if not dims or any(c < 1 for c in dims):
        raise ConfigError(f"Dimension sizes must be positive, got {list(dims)}")
    if rank < 1:
        raise ConfigError(f"Rank must be at least 1, got {rank}")


def count_parameters(kind: str, state_dims: Sequence[int], action_dims: Sequence[int], rank: int = 1,
                     grouped_dims: Sequence[int] = None) -> int:
    """Stored values of a model.

    qtable: prod C_d; mlr: (C_S + C_A) K; tlr: (sum of tensor dims) K, where the
    tensor dims are the grouped sizes when a partition is in use.
    """
    _check(list(state_dims) + list(action_dims), rank)
    num_states, num_actions = int(np.prod(state_dims)), int(np.prod(action_dims))

    if kind == 'qtable':
        return num_states * num_actions
    if kind == 'mlr':
        return (num_states + num_actions) * rank
    if kind == 'tlr':
        dims = list(grouped_dims) if grouped_dims is not None else list(state_dims) + list(action_dims)
        return sum(dims) * rank
    raise ConfigError(f"Unknown model kind {kind!r}")


def updated_entries(kind: str, state_dims: Sequence[int], action_dims: Sequence[int],
                    grouped_dims: Sequence[int] = None) -> int:
    """Q entries whose value one update can change (overlaps ignored for tensors)"""
    _check(list(state_dims) + list(action_dims))
    num_states, num_actions = int(np.prod(state_dims)), int(np.prod(action_dims))

    if kind == 'qtable':
        return 1
    if kind == 'mlr':
        return num_states + num_actions - 1
    if kind == 'tlr':
        dims = list(grouped_dims) if grouped_dims is not None else list(state_dims) + list(action_dims)
        total = int(np.prod(dims))
        return sum(total // c for c in dims)
    raise ConfigError(f"Unknown model kind {kind!r}")


def parameter_ratio(num_dims: int, size: int, matrix_rank: int, tensor_rank: int) -> float:
    """Tensor/matrix parameter ratio (D K' / 2K) C^(1 - D/2) for D_S = D_A = D/2 and C_d = C"""
    if num_dims < 2 or size < 1 or matrix_rank < 1 or tensor_rank < 1:
        raise ConfigError("parameter_ratio needs D >= 2 and positive C, K, K'")
    return num_dims * tensor_rank / (2.0 * matrix_rank) * float(size) ** (1 - num_dims / 2.0)


def updated_entries_ratio(num_dims: int, size: int) -> float:
    """Tensor/matrix ratio of Q entries touched per update: (D/2) C^(D/2 - 1)"""
    if num_dims < 2 or size < 1:
        raise ConfigError("updated_entries_ratio needs D >= 2 and C >= 1")
    return num_dims / 2.0 * float(size) ** (num_dims / 2.0 - 1)
