"""
Sampled environment over a finite MDP

Cells are exposed as a one-dimensional continuous state on [0, C_S), cell i
sitting at the bucket centre i + 0.5, and actions on [0, C_A), so a grid with
C_S and C_A buckets maps cell i to bucket i and the harness can train on
gridworlds exactly like on the continuous tasks.
"""

import math
from typing import Any, Dict

import numpy as np

from .classic_control import ClassicControlEnv, ContinuousSpec, Dimension
from ..mdp.builders import build_gridworld, load_layout, parse_layout
from ..mdp.tabular_mdp import TabularMdp


class TabularEnv(ClassicControlEnv):
    """Gridworld MDP sampled one transition at a time"""

    name = "gridworld"
    DEFAULTS = {
        'layout': "SG",
        'layout_file': None,
        'slip': 0.0,
        'goal_reward': 1.0,
        'step_reward': 0.0,
        'discount': 0.9,
        'max_steps': 100,
        'action_penalty': 0.0,
    }

    def __init__(self, **overrides):
        defaults = {**self.DEFAULTS, **overrides}
        if defaults['layout_file']:
            self.layout = load_layout(defaults['layout_file'])
        else:
            self.layout = parse_layout(defaults['layout'])
        self.mdp: TabularMdp = build_gridworld(
            self.layout,
            slip=defaults['slip'],
            discount=defaults['discount'],
            goal_reward=defaults['goal_reward'],
            step_reward=defaults['step_reward'],
        )
        self.terminal_states = set(self.layout.terminal_states)
        super().__init__(**overrides)

    def _build_spec(self) -> ContinuousSpec:
        return ContinuousSpec(
            name=self.name,
            state_dims=(Dimension('cell', 0.0, float(self.mdp.num_states)),),
            action_dims=(Dimension('move', 0.0, float(self.mdp.num_actions)),),
            dt=1.0,
            max_steps=self.constants['max_steps'],
            constants=dict(self.constants),
        )

    @property
    def default_resolution(self) -> Dict[str, Any]:
        return {'state': [self.mdp.num_states], 'action': [self.mdp.num_actions]}

    def _initial_state(self) -> np.ndarray:
        return np.array([self.layout.start_state + 0.5])

    def _flat(self, state, action) -> int:
        a = min(int(math.floor(action[0])), self.mdp.num_actions - 1)
        return self.mdp.flat_index(int(state[0]), a)

    def _dynamics(self, state, action):
        row = self.mdp.transition[self._flat(state, action)]
        return np.array([self.rng.choice(self.mdp.num_states, p=row) + 0.5])

    def _is_terminal(self, state) -> bool:
        return int(state[0]) in self.terminal_states

    def _reward(self, state, action, next_state, terminal):
        # pays for the realized cell; the MDP's reward vector holds its expectation
        if int(state[0]) in self.terminal_states:
            return -self._penalty(action)
        entered = self.layout.cell(int(next_state[0]))
        paid = self.constants['goal_reward'] if entered == 'G' else self.constants['step_reward']
        return float(paid) - self._penalty(action)
