"""
Classic control environments with continuous states and actions

Every environment is a single-owner state machine: `reset(seed)` draws an
initial state, `step(state, action)` advances the given state deterministically
and counts steps towards `max_steps`. Rewards share one shape:

    reward = task reward - action_penalty * ||action||^2 (+ success bonus)

All physics constants and reward weights are overridable by keyword and are
listed in each class's DEFAULTS.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from ..utils.errors import ConfigError, DynamicsError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dimension:
    name: str
    low: float
    high: float


@dataclass(frozen=True)
class ContinuousSpec:
    """Named, bounded state and action dimensions plus physics constants"""

    name: str
    state_dims: Tuple[Dimension, ...]
    action_dims: Tuple[Dimension, ...]
    dt: float
    max_steps: int
    constants: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for d in self.state_dims + self.action_dims:
            if not d.low < d.high:
                raise ConfigError(f"{self.name}: dimension {d.name} needs low < high")
        if self.dt <= 0:
            raise ConfigError(f"{self.name}: dt must be positive")
        if self.max_steps < 1:
            raise ConfigError(f"{self.name}: max_steps must be at least 1")
        if len(self.state_dims) + len(self.action_dims) < 2:
            raise ConfigError(f"{self.name}: needs at least two dimensions in total")

    @property
    def state_low(self) -> np.ndarray:
        return np.array([d.low for d in self.state_dims])

    @property
    def state_high(self) -> np.ndarray:
        return np.array([d.high for d in self.state_dims])

    @property
    def action_low(self) -> np.ndarray:
        return np.array([d.low for d in self.action_dims])

    @property
    def action_high(self) -> np.ndarray:
        return np.array([d.high for d in self.action_dims])


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    terminal: bool
    truncated: bool = False
    clipped: bool = False

    @property
    def done(self) -> bool:
        return self.terminal or self.truncated


def wrap_angle(x: float) -> float:
    """Map an angle to [-pi, pi)"""
    return ((x + math.pi) % (2 * math.pi)) - math.pi


class ClassicControlEnv(ABC):
    """Base class for the continuous environments"""

    name = "base"
    DEFAULTS: Dict[str, Any] = {}

    def __init__(self, **overrides):
        unknown = set(overrides) - set(self.DEFAULTS)
        if unknown:
            raise ConfigError(f"Unknown {self.name} parameters: {sorted(unknown)}")

        self.constants = {**self.DEFAULTS, **overrides}
        self.spec = self._build_spec()
        self.steps = 0
        self.rng = np.random.default_rng(0)

    @abstractmethod
    def _build_spec(self) -> ContinuousSpec:
        pass

    @abstractmethod
    def _initial_state(self) -> np.ndarray:
        pass

    @abstractmethod
    def _dynamics(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _reward(self, state: np.ndarray, action: np.ndarray, next_state: np.ndarray, terminal: bool) -> float:
        pass

    def _is_terminal(self, state: np.ndarray) -> bool:
        return False

    def _penalty(self, action: np.ndarray) -> float:
        return self.constants['action_penalty'] * float(np.dot(action, action))

    def reset(self, seed: int = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.steps = 0
        return self._initial_state()

    def step(self, state, action) -> Transition:
        state = np.asarray(state, dtype=float)
        raw = np.asarray(action, dtype=float).reshape(-1)
        action = np.clip(raw, self.spec.action_low, self.spec.action_high)

        next_state = self._dynamics(state, action)
        if not np.all(np.isfinite(next_state)):
            raise DynamicsError(f"{self.name} dynamics produced {next_state} from {state} with action {action}")

        terminal = self._is_terminal(next_state)
        reward = self._reward(state, action, next_state, terminal)
        if not math.isfinite(reward):
            raise DynamicsError(f"{self.name} produced a non-finite reward")

        self.steps += 1
        return Transition(
            state=state,
            action=action,
            reward=reward,
            next_state=next_state,
            terminal=terminal,
            truncated=not terminal and self.steps >= self.spec.max_steps,
            clipped=bool(np.any(action != raw)),
        )


class Pendulum(ClassicControlEnv):
    """Torque-limited rigid pendulum; theta = 0 is upright, semi-implicit Euler"""

    name = "pendulum"
    DEFAULTS = {
        'gravity': 10.0,
        'mass': 1.0,
        'length': 1.0,
        'max_speed': 8.0,
        'max_torque': 2.0,
        'dt': 0.05,
        'max_steps': 200,
        'action_penalty': 0.001,
        'cost_scale': 0.01,
        'upright_threshold': 0.3,
        'upright_bonus': 1.0,
    }

    def _build_spec(self) -> ContinuousSpec:
        c = self.constants
        return ContinuousSpec(
            name=self.name,
            state_dims=(Dimension('theta', -math.pi, math.pi),
                        Dimension('theta_dot', -c['max_speed'], c['max_speed'])),
            action_dims=(Dimension('torque', -c['max_torque'], c['max_torque']),),
            dt=c['dt'],
            max_steps=c['max_steps'],
            constants=dict(c),
        )

    def _initial_state(self) -> np.ndarray:
        return np.array([self.rng.uniform(-math.pi, math.pi), self.rng.uniform(-1.0, 1.0)])

    def _dynamics(self, state, action):
        c = self.constants
        theta, theta_dot = state
        torque = action[0]
        acceleration = (3 * c['gravity'] / (2 * c['length']) * math.sin(theta)
                        + 3.0 / (c['mass'] * c['length'] ** 2) * torque)
        theta_dot = min(max(theta_dot + acceleration * c['dt'], -c['max_speed']), c['max_speed'])
        theta = wrap_angle(theta + theta_dot * c['dt'])
        return np.array([theta, theta_dot])

    def _reward(self, state, action, next_state, terminal):
        c = self.constants
        theta, theta_dot = next_state
        reward = -c['cost_scale'] * (theta ** 2 + 0.1 * theta_dot ** 2)
        if abs(theta) < c['upright_threshold']:
            reward += c['upright_bonus']
        return reward - self._penalty(action)


class CartPole(ClassicControlEnv):
    """Cart-pole with a continuous horizontal force, explicit Euler"""

    name = "cartpole"
    DEFAULTS = {
        'gravity': 9.8,
        'cart_mass': 1.0,
        'pole_mass': 0.1,
        'pole_half_length': 0.5,
        'max_force': 10.0,
        'dt': 0.02,
        'max_steps': 500,
        'x_threshold': 2.4,
        'theta_threshold': 12 * 2 * math.pi / 360,
        'max_velocity': 3.0,
        'max_angular_velocity': 3.5,
        'alive_reward': 1.0,
        'action_penalty': 0.001,
    }

    def _build_spec(self) -> ContinuousSpec:
        c = self.constants
        return ContinuousSpec(
            name=self.name,
            state_dims=(Dimension('x', -c['x_threshold'], c['x_threshold']),
                        Dimension('x_dot', -c['max_velocity'], c['max_velocity']),
                        Dimension('theta', -c['theta_threshold'], c['theta_threshold']),
                        Dimension('theta_dot', -c['max_angular_velocity'], c['max_angular_velocity'])),
            action_dims=(Dimension('force', -c['max_force'], c['max_force']),),
            dt=c['dt'],
            max_steps=c['max_steps'],
            constants=dict(c),
        )

    def _initial_state(self) -> np.ndarray:
        return self.rng.uniform(-0.05, 0.05, size=4)

    def _dynamics(self, state, action):
        c = self.constants
        x, x_dot, theta, theta_dot = state
        force = action[0]
        total_mass = c['cart_mass'] + c['pole_mass']
        pole_moment = c['pole_mass'] * c['pole_half_length']

        cos_t, sin_t = math.cos(theta), math.sin(theta)
        temp = (force + pole_moment * theta_dot ** 2 * sin_t) / total_mass
        theta_acc = (c['gravity'] * sin_t - cos_t * temp) / (
            c['pole_half_length'] * (4.0 / 3.0 - c['pole_mass'] * cos_t ** 2 / total_mass))
        x_acc = temp - pole_moment * theta_acc * cos_t / total_mass

        dt = c['dt']
        return np.array([x + dt * x_dot, x_dot + dt * x_acc, theta + dt * theta_dot, theta_dot + dt * theta_acc])

    def _is_terminal(self, state) -> bool:
        c = self.constants
        return abs(state[0]) > c['x_threshold'] or abs(state[2]) > c['theta_threshold']

    def _reward(self, state, action, next_state, terminal):
        reward = 0.0 if terminal else self.constants['alive_reward']
        return reward - self._penalty(action)


class MountainCar(ClassicControlEnv):
    """Under-powered car in a valley with continuous throttle"""

    name = "mountain_car"
    DEFAULTS = {
        'min_position': -1.2,
        'max_position': 0.6,
        'max_speed': 0.07,
        'goal_position': 0.45,
        'power': 0.0015,
        'gravity': 0.0025,
        'dt': 1.0,
        'max_steps': 500,
        'action_penalty': 0.1,
        'goal_bonus': 100.0,
    }

    def _build_spec(self) -> ContinuousSpec:
        c = self.constants
        return ContinuousSpec(
            name=self.name,
            state_dims=(Dimension('position', c['min_position'], c['max_position']),
                        Dimension('velocity', -c['max_speed'], c['max_speed'])),
            action_dims=(Dimension('throttle', -1.0, 1.0),),
            dt=c['dt'],
            max_steps=c['max_steps'],
            constants=dict(c),
        )

    def _initial_state(self) -> np.ndarray:
        return np.array([self.rng.uniform(-0.6, -0.4), 0.0])

    def _dynamics(self, state, action):
        c = self.constants
        position, velocity = state
        velocity += (action[0] * c['power'] - c['gravity'] * math.cos(3 * position)) * c['dt']
        velocity = min(max(velocity, -c['max_speed']), c['max_speed'])
        position += velocity * c['dt']
        position = min(max(position, c['min_position']), c['max_position'])
        if position == c['min_position'] and velocity < 0:
            velocity = 0.0
        return np.array([position, velocity])

    def _is_terminal(self, state) -> bool:
        return state[0] >= self.constants['goal_position']

    def _reward(self, state, action, next_state, terminal):
        bonus = self.constants['goal_bonus'] if terminal else 0.0
        return bonus - self._penalty(action)


class Goddard(ClassicControlEnv):
    """Vertical rocket ascent in normalised units (g0 = h0 = m0 = 1).

    State is (altitude, velocity, remaining fuel); the action is thrust. Drag is
    quadratic in velocity and decays exponentially with altitude; gravity falls
    off with the inverse square of altitude. The episode ends at apogee once
    the fuel is spent, or when the rocket drops back to the launch altitude.
    """

    name = "goddard"
    DEFAULTS = {
        'drag_velocity': 620.0,
        'drag_height': 500.0,
        'max_thrust': 3.5,
        'fuel_mass': 0.4,
        'exhaust_velocity': 0.5,
        'dt': 0.001,
        'max_steps': 400,
        'max_altitude': 1.015,
        'max_velocity': 0.15,
        'min_velocity': -0.02,
        'altitude_reward_scale': 1e4,
        'action_penalty': 0.001,
    }

    def _build_spec(self) -> ContinuousSpec:
        c = self.constants
        return ContinuousSpec(
            name=self.name,
            state_dims=(Dimension('altitude', 1.0, c['max_altitude']),
                        Dimension('velocity', c['min_velocity'], c['max_velocity']),
                        Dimension('fuel', 0.0, c['fuel_mass'])),
            action_dims=(Dimension('thrust', 0.0, c['max_thrust']),),
            dt=c['dt'],
            max_steps=c['max_steps'],
            constants=dict(c),
        )

    def _initial_state(self) -> np.ndarray:
        return np.array([1.0, 0.0, self.constants['fuel_mass']])

    def _dynamics(self, state, action):
        c = self.constants
        altitude, velocity, fuel = state
        thrust = action[0] if fuel > 0 else 0.0
        mass = 1.0 - c['fuel_mass'] + fuel

        drag_coefficient = 0.5 * c['drag_velocity']
        drag = drag_coefficient * velocity ** 2 * math.exp(-c['drag_height'] * (altitude - 1.0))
        drag = math.copysign(drag, velocity)
        gravity = 1.0 / altitude ** 2

        dt = c['dt']
        velocity += ((thrust - drag) / mass - gravity) * dt
        altitude += velocity * dt
        burn = thrust / c['exhaust_velocity'] * dt
        fuel = max(fuel - burn, 0.0)
        return np.array([altitude, velocity, fuel])

    def _is_terminal(self, state) -> bool:
        altitude, velocity, fuel = state
        return altitude < 1.0 or (fuel <= 0.0 and velocity < 0.0)

    def _reward(self, state, action, next_state, terminal):
        gain = self.constants['altitude_reward_scale'] * max(next_state[0] - state[0], 0.0)
        return gain - self._penalty(action)


class Acrobot(ClassicControlEnv):
    """Two-link under-actuated arm with continuous torque on the elbow, RK4"""

    name = "acrobot"
    DEFAULTS = {
        'link_length_1': 1.0,
        'link_mass_1': 1.0,
        'link_mass_2': 1.0,
        'link_com_1': 0.5,
        'link_com_2': 0.5,
        'link_moi': 1.0,
        'gravity': 9.8,
        'max_velocity_1': 4 * math.pi,
        'max_velocity_2': 9 * math.pi,
        'max_torque': 1.0,
        'dt': 0.2,
        'max_steps': 500,
        'step_cost': 0.1,
        'action_penalty': 0.001,
        'goal_bonus': 100.0,
    }

    def _build_spec(self) -> ContinuousSpec:
        c = self.constants
        return ContinuousSpec(
            name=self.name,
            state_dims=(Dimension('theta_1', -math.pi, math.pi),
                        Dimension('theta_2', -math.pi, math.pi),
                        Dimension('theta_dot_1', -c['max_velocity_1'], c['max_velocity_1']),
                        Dimension('theta_dot_2', -c['max_velocity_2'], c['max_velocity_2'])),
            action_dims=(Dimension('torque', -c['max_torque'], c['max_torque']),),
            dt=c['dt'],
            max_steps=c['max_steps'],
            constants=dict(c),
        )

    def _initial_state(self) -> np.ndarray:
        return self.rng.uniform(-0.1, 0.1, size=4)

    def _derivatives(self, s: np.ndarray, torque: float) -> np.ndarray:
        c = self.constants
        m1, m2 = c['link_mass_1'], c['link_mass_2']
        l1, lc1, lc2 = c['link_length_1'], c['link_com_1'], c['link_com_2']
        inertia, g = c['link_moi'], c['gravity']
        theta1, theta2, dtheta1, dtheta2 = s

        d1 = m1 * lc1 ** 2 + m2 * (l1 ** 2 + lc2 ** 2 + 2 * l1 * lc2 * math.cos(theta2)) + 2 * inertia
        d2 = m2 * (lc2 ** 2 + l1 * lc2 * math.cos(theta2)) + inertia
        phi2 = m2 * lc2 * g * math.cos(theta1 + theta2 - math.pi / 2.0)
        phi1 = (-m2 * l1 * lc2 * dtheta2 ** 2 * math.sin(theta2)
                - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * math.sin(theta2)
                + (m1 * lc1 + m2 * l1) * g * math.cos(theta1 - math.pi / 2) + phi2)
        ddtheta2 = ((torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 ** 2 * math.sin(theta2) - phi2)
                    / (m2 * lc2 ** 2 + inertia - d2 ** 2 / d1))
        ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
        return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2])

    def _dynamics(self, state, action):
        c = self.constants
        torque, dt = action[0], c['dt']
        k1 = self._derivatives(state, torque)
        k2 = self._derivatives(state + dt / 2 * k1, torque)
        k3 = self._derivatives(state + dt / 2 * k2, torque)
        k4 = self._derivatives(state + dt * k3, torque)
        s = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return np.array([
            wrap_angle(s[0]),
            wrap_angle(s[1]),
            min(max(s[2], -c['max_velocity_1']), c['max_velocity_1']),
            min(max(s[3], -c['max_velocity_2']), c['max_velocity_2']),
        ])

    def _is_terminal(self, state) -> bool:
        return -math.cos(state[0]) - math.cos(state[1] + state[0]) > 1.0

    def _reward(self, state, action, next_state, terminal):
        reward = self.constants['goal_bonus'] if terminal else -self.constants['step_cost']
        return reward - self._penalty(action)
