"""
Aggregate metrics across runs
"""

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import pandas as pd

from ..utils.errors import ZeroNormError


def median(values: Sequence[float]) -> float:
    """Median; for even sizes the mean of the two central order statistics"""
    if len(values) == 0:
        return float('nan')
    return float(np.median(np.asarray(values, dtype=float)))


def quartiles(values: Sequence[float]):
    """(q25, q50, q75) with linear interpolation between order statistics"""
    if len(values) == 0:
        return float('nan'), float('nan'), float('nan')
    q25, q75 = np.percentile(np.asarray(values, dtype=float), [25, 75])
    return float(q25), median(values), float(q75)


def ncre(reference_return: float, approx_return: float) -> float:
    """Normalized cumulative reward error (r - r_hat) / r; positive when the approximation is worse"""
    if reference_return == 0:
        raise ZeroNormError("NCRE is undefined for a zero reference return")
    return (reference_return - approx_return) / reference_return


def episodes_to_fraction(episodes: Sequence[int], values: Sequence[float], fraction: float = 0.8) -> int:
    """First episode whose value reaches `fraction` of the final value.

    For negative finals the threshold is final - (1 - fraction) * |final|, which
    reduces to fraction * final when the final value is positive.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0 or not math.isfinite(values[-1]):
        return -1
    final = values[-1]
    threshold = final - (1.0 - fraction) * abs(final)
    return int(episodes[int(np.argmax(values >= threshold))])


@dataclass
class MetricSeries:
    """Per-episode median and quartiles across the non-diverged runs"""

    episodes: List[int]
    q25: List[float]
    median: List[float]
    q75: List[float]
    runs: List[int]

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, value: str, episode: str = 'episode') -> 'MetricSeries':
        """Aggregate a long-format frame (one row per run and episode)"""
        episodes, q25s, medians, q75s, counts = [], [], [], [], []
        for ep, group in frame.groupby(episode, sort=True):
            q25, q50, q75 = quartiles(group[value].to_numpy())
            episodes.append(int(ep))
            q25s.append(q25)
            medians.append(q50)
            q75s.append(q75)
            counts.append(len(group))
        return cls(episodes, q25s, medians, q75s, counts)

    def to_frame(self, prefix: str) -> pd.DataFrame:
        return pd.DataFrame({
            'episode': self.episodes,
            f'{prefix}_q25': self.q25,
            f'{prefix}_median': self.median,
            f'{prefix}_q75': self.q75,
            'runs': self.runs,
        })

    @property
    def final(self) -> float:
        return self.median[-1] if self.median else float('nan')
