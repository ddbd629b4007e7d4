"""
Discretization grids and dimension partitions

A grid buckets every state and action dimension uniformly. The full index
space has D = D_S + D_A dimensions, state dimensions first. A partition
groups those dimensions into super-dimensions; a group's flat index is the
mixed-radix combination of its members' indices, first member most
significant.
"""

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .classic_control import ContinuousSpec
from ..utils.errors import ConfigError, ShapeError

Bounds = Tuple[float, float]
MultiIndex = Tuple[int, ...]


@dataclass(frozen=True)
class DiscretizationGrid:
    """Uniform buckets per state and action dimension"""

    state_bounds: Tuple[Bounds, ...]
    state_buckets: Tuple[int, ...]
    action_bounds: Tuple[Bounds, ...]
    action_buckets: Tuple[int, ...]

    def __post_init__(self):
        for which in ('state', 'action'):
            bounds, buckets = self._side(which)
            if len(bounds) != len(buckets) or not buckets:
                raise ConfigError(f"{which} grid needs one bucket count per dimension")
            for (low, high), count in zip(bounds, buckets):
                if not low < high:
                    raise ConfigError(f"Grid bounds must satisfy low < high, got ({low}, {high})")
                if count < 2:
                    raise ConfigError(f"Every dimension needs at least 2 buckets, got {count}")

    @classmethod
    def from_spec(cls, spec: ContinuousSpec, state_buckets: Sequence[int],
                  action_buckets: Sequence[int]) -> 'DiscretizationGrid':
        if len(state_buckets) != len(spec.state_dims) or len(action_buckets) != len(spec.action_dims):
            raise ConfigError(
                f"{spec.name} needs {len(spec.state_dims)} state and {len(spec.action_dims)} action resolutions")
        return cls(
            state_bounds=tuple((d.low, d.high) for d in spec.state_dims),
            state_buckets=tuple(int(c) for c in state_buckets),
            action_bounds=tuple((d.low, d.high) for d in spec.action_dims),
            action_buckets=tuple(int(c) for c in action_buckets),
        )

    def _side(self, which: str):
        if which == 'state':
            return self.state_bounds, self.state_buckets
        if which == 'action':
            return self.action_bounds, self.action_buckets
        raise ValueError(f"which must be 'state' or 'action', got {which!r}")

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.state_buckets + self.action_buckets

    @property
    def num_states(self) -> int:
        return int(np.prod(self.state_buckets))

    @property
    def num_actions(self) -> int:
        return int(np.prod(self.action_buckets))

    def centers(self, which: str, dim: int) -> np.ndarray:
        bounds, buckets = self._side(which)
        low, high = bounds[dim]
        return low + (np.arange(buckets[dim]) + 0.5) * (high - low) / buckets[dim]

    def discretize(self, v, which: str) -> MultiIndex:
        """floor((v - low) / (high - low) * C) after clipping v to [low, high]; v = high maps to C - 1"""
        bounds, buckets = self._side(which)
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != len(buckets):
            raise ShapeError(f"Expected a {which} vector of length {len(buckets)}, got {v.size}")

        index = []
        for x, (low, high), count in zip(v, bounds, buckets):
            x = min(max(x, low), high)
            bucket = int(np.floor((x - low) / (high - low) * count))
            index.append(min(max(bucket, 0), count - 1))
        return tuple(index)

    def action_from_index(self, index: Sequence[int]) -> np.ndarray:
        """Bucket centres low + (i + 0.5) * (high - low) / C"""
        if len(index) != len(self.action_buckets):
            raise ShapeError(f"Expected {len(self.action_buckets)} action indices, got {len(index)}")

        action = []
        for i, (low, high), count in zip(index, self.action_bounds, self.action_buckets):
            if not 0 <= i < count:
                raise IndexError(f"Action index {i} out of range [0, {count})")
            action.append(low + (i + 0.5) * (high - low) / count)
        return np.array(action)

    def action_indices(self) -> List[MultiIndex]:
        """All action multi-indices in lexicographic order"""
        return list(itertools.product(*(range(c) for c in self.action_buckets)))


PartitionSpec = Union[None, str, Sequence[Sequence[int]]]


@dataclass(frozen=True)
class DimensionPartition:
    """Ordered, disjoint, type-pure groups covering all D grid dimensions.

    State groups come before action groups so the grouped tensor keeps the
    state/action split.
    """

    groups: Tuple[Tuple[int, ...], ...]
    dims: Tuple[int, ...]
    num_state_dims: int

    def __post_init__(self):
        object.__setattr__(self, 'groups', tuple(tuple(int(i) for i in g) for g in self.groups))
        object.__setattr__(self, 'dims', tuple(int(c) for c in self.dims))

        members = [i for g in self.groups for i in g]
        if any(len(g) == 0 for g in self.groups):
            raise ConfigError("Partition groups must be non-empty")
        if sorted(members) != list(range(len(self.dims))):
            raise ConfigError(f"Partition {self.groups} must cover dimensions 0..{len(self.dims) - 1} exactly once")

        kinds = []
        for g in self.groups:
            is_state = {i < self.num_state_dims for i in g}
            if len(is_state) != 1:
                raise ConfigError(f"Group {g} mixes state and action dimensions")
            kinds.append(is_state.pop())
        if kinds != sorted(kinds, reverse=True):
            raise ConfigError("State groups must precede action groups")

    @classmethod
    def trivial(cls, dims: Sequence[int], num_state_dims: int) -> 'DimensionPartition':
        return cls(tuple((i,) for i in range(len(dims))), dims, num_state_dims)

    @classmethod
    def matrix(cls, dims: Sequence[int], num_state_dims: int) -> 'DimensionPartition':
        """One state group and one action group: the Q-matrix layout"""
        return cls((tuple(range(num_state_dims)), tuple(range(num_state_dims, len(dims)))), dims, num_state_dims)

    @classmethod
    def halves(cls, dims: Sequence[int], num_state_dims: int) -> 'DimensionPartition':
        """State and action dimensions each split into two contiguous halves"""
        groups = []
        for start, stop in ((0, num_state_dims), (num_state_dims, len(dims))):
            members = list(range(start, stop))
            cut = (len(members) + 1) // 2
            groups.extend(g for g in (members[:cut], members[cut:]) if g)
        return cls(tuple(tuple(g) for g in groups), dims, num_state_dims)

    @classmethod
    def pairs(cls, dims: Sequence[int], num_state_dims: int) -> 'DimensionPartition':
        """Consecutive pairs within the state and within the action dimensions"""
        groups = []
        for start, stop in ((0, num_state_dims), (num_state_dims, len(dims))):
            members = list(range(start, stop))
            groups.extend(tuple(members[i:i + 2]) for i in range(0, len(members), 2))
        return cls(tuple(groups), dims, num_state_dims)

    @classmethod
    def from_spec(cls, spec: PartitionSpec, dims: Sequence[int], num_state_dims: int) -> 'DimensionPartition':
        if spec is None or spec == 'trivial':
            return cls.trivial(dims, num_state_dims)
        if isinstance(spec, str):
            builders = {'matrix': cls.matrix, 'halves': cls.halves, 'pairs': cls.pairs}
            if spec not in builders:
                raise ConfigError(f"Unknown partition {spec!r}; use trivial, matrix, halves, pairs or a group list")
            return builders[spec](dims, num_state_dims)
        return cls(tuple(tuple(g) for g in spec), dims, num_state_dims)

    @property
    def grouped_sizes(self) -> Tuple[int, ...]:
        return tuple(int(np.prod([self.dims[i] for i in g])) for g in self.groups)

    @property
    def num_state_groups(self) -> int:
        return sum(1 for g in self.groups if g[0] < self.num_state_dims)

    def apply(self, multi_index: Sequence[int]) -> MultiIndex:
        """Multi-index over D dims -> multi-index over the groups"""
        if len(multi_index) != len(self.dims):
            raise ShapeError(f"Expected {len(self.dims)} indices, got {len(multi_index)}")
        return tuple(
            int(np.ravel_multi_index([multi_index[i] for i in g], [self.dims[i] for i in g]))
            for g in self.groups
        )

    def invert(self, grouped: Sequence[int]) -> MultiIndex:
        """Exact inverse of `apply`"""
        if len(grouped) != len(self.groups):
            raise ShapeError(f"Expected {len(self.groups)} grouped indices, got {len(grouped)}")
        index = [0] * len(self.dims)
        for value, g in zip(grouped, self.groups):
            for i, member in zip(g, np.unravel_index(int(value), [self.dims[i] for i in g])):
                index[i] = int(member)
        return tuple(index)

    def ungroup(self, array: np.ndarray, group_slice: Optional[slice] = None) -> np.ndarray:
        """Re-express an array indexed by (a contiguous run of) groups over the original dimensions"""
        group_slice = group_slice or slice(None)
        groups = self.groups[group_slice]
        members = [i for g in groups for i in g]
        expanded = np.asarray(array).reshape([self.dims[i] for i in members])
        return np.transpose(expanded, np.argsort(members))
