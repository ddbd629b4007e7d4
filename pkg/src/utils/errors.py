"""
Exception types for LowRankQ
"""

from typing import Optional


class LowRankQError(Exception):
    """Base class for every error raised by the package"""


class ConfigError(LowRankQError, ValueError):
    """Invalid or unknown configuration value"""


class InvalidModelError(LowRankQError, ValueError):
    """A model, MDP or policy violates its structural invariants"""


class ShapeError(LowRankQError, ValueError):
    """Array dimensions do not match"""


class RankError(LowRankQError, ValueError):
    """Requested rank is out of range"""


class ZeroNormError(LowRankQError, ValueError):
    """Normalisation by a zero reference"""


class LayoutError(LowRankQError, ValueError):
    """Malformed gridworld layout"""


class SingularSystemError(LowRankQError):
    """A linear solve failed"""


class NonConvergenceError(LowRankQError):
    """An iterative scheme hit its iteration budget before meeting tolerance"""


class IterationCapError(LowRankQError):
    """Policy iteration exceeded its cap"""


class SvdConvergenceError(LowRankQError):
    """The SVD driver did not converge"""


class DynamicsError(LowRankQError):
    """Environment dynamics produced a non-finite state"""


class DivergenceError(LowRankQError):
    """A learner produced non-finite or exploding parameters"""

    def __init__(self, message: str, factor: Optional[str] = None):
        super().__init__(message)
        self.factor = factor
