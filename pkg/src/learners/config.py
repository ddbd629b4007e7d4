"""
Learner hyperparameters and schedules
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict

from ..utils.config import Config
from ..utils.errors import ConfigError

KINDS = ('qtable', 'mlr', 'tlr')


@dataclass(frozen=True)
class LearnerConfig:
    """Schedules and hyperparameters shared by all TD learners.

    step size:   alpha_t = alpha / t ** alpha_power   (alpha_power = 0 is constant)
    exploration: eps_e = max(epsilon_min, epsilon_start * epsilon_decay ** e)
    """

    kind: str = 'tlr'
    discount: float = 0.99
    alpha: float = 0.1
    alpha_power: float = 0.0
    epsilon_start: float = Config.EPSILON_START
    epsilon_decay: float = Config.EPSILON_DECAY
    epsilon_min: float = Config.EPSILON_MIN
    rank: int = 2
    frobenius_weight: float = 0.0
    rescale_gradient: bool = False
    init_scale: float = 1.0
    init_seed: int = 0
    stale_target: bool = False
    divergence_threshold: float = Config.DIVERGENCE_THRESHOLD

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"Unknown learner kind {self.kind!r}; choose from {KINDS}")
        if not 0.0 <= self.discount < 1.0:
            raise ConfigError(f"discount must lie in [0, 1), got {self.discount}")
        if self.alpha <= 0 or self.alpha_power < 0:
            raise ConfigError("Step size must be positive with a non-negative decay power")
        if not 0.0 <= self.epsilon_min <= 1.0 or not 0.0 <= self.epsilon_start <= 1.0:
            raise ConfigError("Exploration rates must lie in [0, 1]")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ConfigError("epsilon_decay must lie in (0, 1]")
        if self.rank < 1:
            raise ConfigError("rank must be at least 1")
        if self.frobenius_weight < 0:
            raise ConfigError("frobenius_weight must be non-negative")
        if self.init_scale <= 0:
            raise ConfigError("init_scale must be positive")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'LearnerConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown learner keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def step_size(self, t: int) -> float:
        """alpha_t for update number t (1-based)"""
        return self.alpha / max(t, 1) ** self.alpha_power

    def exploration(self, episode: int) -> float:
        """epsilon for training episode `episode` (0-based)"""
        return max(self.epsilon_min, self.epsilon_start * self.epsilon_decay ** episode)
