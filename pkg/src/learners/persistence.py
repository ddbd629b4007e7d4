"""
Model files: one JSON header line followed by the linalg factor text

The header carries the learner configuration, the model layout (state and
action dims, partition groups) and any caller metadata such as the grid and
environment settings, so a saved model can be re-evaluated on its own.
"""

import json
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .config import LearnerConfig
from .models import MatrixFactors, QTable, TensorFactors, ValueModel
from ..envs.discretization import DimensionPartition
from ..linalg import serialization
from ..linalg.parafac import FactorSet
from ..utils.errors import InvalidModelError


def dumps_model(model: ValueModel, cfg: LearnerConfig, metadata: Optional[Dict[str, Any]] = None) -> str:
    header = {
        'kind': model.kind,
        'state_dims': list(model.state_dims),
        'action_dims': list(model.action_dims),
        'learner': cfg.to_dict(),
        'metadata': metadata or {},
    }
    if isinstance(model, QTable):
        body = serialization.dumps_tensor(model.values)
    elif isinstance(model, MatrixFactors):
        body = serialization.dumps_factors(FactorSet([model.left, model.right.T]))
    else:
        header['partition'] = [list(g) for g in model.partition.groups]
        body = serialization.dumps_factors(model.factor_set)
    return json.dumps(header, sort_keys=True) + "\n" + body


def loads_model(text: str) -> Tuple[ValueModel, LearnerConfig, Dict[str, Any]]:
    first, _, body = text.partition("\n")
    try:
        header = json.loads(first)
    except json.JSONDecodeError as e:
        raise InvalidModelError(f"Model header is not valid JSON: {e}") from e

    cfg = LearnerConfig.from_dict(header['learner'])
    state_dims, action_dims = tuple(header['state_dims']), tuple(header['action_dims'])
    payload = serialization.loads(body)

    if header['kind'] == 'qtable':
        model = QTable(np.asarray(payload), state_dims, action_dims)
    elif header['kind'] == 'mlr':
        left, right_t = payload.factors
        model = MatrixFactors(left, right_t.T, state_dims, action_dims)
    elif header['kind'] == 'tlr':
        partition = DimensionPartition(tuple(tuple(g) for g in header['partition']),
                                       state_dims + action_dims, len(state_dims))
        model = TensorFactors(payload, partition, state_dims, action_dims)
    else:
        raise InvalidModelError(f"Unknown model kind {header['kind']!r}")

    return model, cfg, header.get('metadata', {})


def save_model(path: str, model: ValueModel, cfg: LearnerConfig, metadata: Optional[Dict[str, Any]] = None):
    with open(path, 'w') as fh:
        fh.write(dumps_model(model, cfg, metadata))


def load_model(path: str) -> Tuple[ValueModel, LearnerConfig, Dict[str, Any]]:
    with open(path) as fh:
        return loads_model(fh.read())
