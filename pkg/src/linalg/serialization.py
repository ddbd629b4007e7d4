"""
Text format for factor sets and dense tensors

Factor set::

    dims=8,8,8 rank=3
    <C_0 rows of factor 0, comma separated>

    <C_1 rows of factor 1>
    ...

Dense tensor (rows are the last-axis fibres in C order)::

    dims=4,5 rank=dense
    <prod(dims[:-1]) rows of dims[-1] values>

Values are written with repr(), which round-trips doubles exactly.
"""

from typing import List, Tuple, Union

import numpy as np

from .parafac import FactorSet
from ..utils.errors import ShapeError

DENSE = "dense"


def _format_rows(matrix: np.ndarray) -> List[str]:
    return [",".join(repr(float(x)) for x in row) for row in matrix]


def _parse_header(line: str) -> Tuple[Tuple[int, ...], str]:
    fields = dict(part.split("=", 1) for part in line.split())
    if 'dims' not in fields or 'rank' not in fields:
        raise ShapeError(f"Malformed header: {line!r}")
    dims = tuple(int(c) for c in fields['dims'].split(","))
    return dims, fields['rank']


def dumps_factors(f: FactorSet) -> str:
    lines = [f"dims={','.join(str(c) for c in f.dims)} rank={f.rank}"]
    for d, factor in enumerate(f.factors):
        if d:
            lines.append("")
        lines.extend(_format_rows(factor))
    return "\n".join(lines) + "\n"


def dumps_tensor(t: np.ndarray) -> str:
    t = np.asarray(t, dtype=float)
    lines = [f"dims={','.join(str(c) for c in t.shape)} rank={DENSE}"]
    lines.extend(_format_rows(t.reshape(-1, t.shape[-1])))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Union[FactorSet, np.ndarray]:
    """Parse either format; returns a FactorSet or a dense ndarray"""
    lines = text.splitlines()
    if not lines:
        raise ShapeError("Empty factor text")

    dims, rank = _parse_header(lines[0])
    rows = [[float(x) for x in line.split(",")] for line in lines[1:] if line.strip()]

    if rank == DENSE:
        data = np.array(rows, dtype=float)
        if data.size != int(np.prod(dims)):
            raise ShapeError(f"Expected {int(np.prod(dims))} values for dims {dims}, found {data.size}")
        return data.reshape(dims)

    k = int(rank)
    if len(rows) != sum(dims) or any(len(row) != k for row in rows):
        raise ShapeError(f"Factor block sizes do not match header dims={dims} rank={k}")

    factors, start = [], 0
    for c in dims:
        factors.append(np.array(rows[start:start + c], dtype=float))
        start += c
    return FactorSet(factors)


def save(path: str, obj: Union[FactorSet, np.ndarray]):
    text = dumps_factors(obj) if isinstance(obj, FactorSet) else dumps_tensor(obj)
    with open(path, 'w') as fh:
        fh.write(text)


def load(path: str) -> Union[FactorSet, np.ndarray]:
    with open(path) as fh:
        return loads(fh.read())
