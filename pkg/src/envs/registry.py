"""
Environment lookup by name
"""

from typing import Any, Dict, Optional

from .classic_control import Acrobot, CartPole, ClassicControlEnv, Goddard, MountainCar, Pendulum
from .tabular import TabularEnv
from ..utils.errors import ConfigError

ENVIRONMENTS = {
    cls.name: cls
    for cls in (Pendulum, CartPole, MountainCar, Goddard, Acrobot, TabularEnv)
}


def make_env(name: str, overrides: Optional[Dict[str, Any]] = None) -> ClassicControlEnv:
    if name not in ENVIRONMENTS:
        raise ConfigError(f"Unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}")
    return ENVIRONMENTS[name](**(overrides or {}))
