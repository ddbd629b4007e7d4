"""
Builders for small verification MDPs

Gridworld layout files are plain text, one row per line:

    S  start cell (exactly one)
    G  goal cell (exactly one, terminal, entering it pays `goal_reward`)
    H  hole (terminal, zero reward)
    F  free cell

Cells are numbered row-major. Actions are 0=left, 1=down, 2=right, 3=up.
Moves into the border leave the agent in place. With slip > 0 each of the
two perpendicular moves happens with probability `slip` and the intended one
with 1 - 2 * slip; slip = 1/3 gives the classic slippery lake.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .tabular_mdp import TabularMdp
from ..utils.errors import LayoutError

logger = logging.getLogger(__name__)

FROZEN_LAKE_4X4 = "SFFF\nFHFH\nFFFH\nHFFG"

LEFT, DOWN, RIGHT, UP = range(4)
MOVES = {LEFT: (0, -1), DOWN: (1, 0), RIGHT: (0, 1), UP: (-1, 0)}
PERPENDICULAR = {LEFT: (UP, DOWN), RIGHT: (DOWN, UP), DOWN: (LEFT, RIGHT), UP: (RIGHT, LEFT)}
CELL_TYPES = set("SGHF")


@dataclass(frozen=True)
class GridLayout:
    """Parsed gridworld layout"""

    rows: Tuple[str, ...]

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), len(self.rows[0])

    @property
    def num_states(self) -> int:
        return self.shape[0] * self.shape[1]

    def cell(self, state: int) -> str:
        return self.rows[state // self.shape[1]][state % self.shape[1]]

    def cells_of(self, kind: str) -> List[int]:
        return [s for s in range(self.num_states) if self.cell(s) == kind]

    @property
    def start_state(self) -> int:
        return self.cells_of('S')[0]

    @property
    def terminal_states(self) -> List[int]:
        return [s for s in range(self.num_states) if self.cell(s) in 'GH']


def parse_layout(text: str) -> GridLayout:
    """Parse and validate a layout description"""
    rows = tuple(line.strip() for line in text.strip().splitlines() if line.strip())
    if not rows:
        raise LayoutError("Empty gridworld layout")
    if len({len(row) for row in rows}) != 1:
        raise LayoutError("All layout rows must have the same width")

    symbols = set("".join(rows))
    if not symbols <= CELL_TYPES:
        raise LayoutError(f"Unknown layout characters: {sorted(symbols - CELL_TYPES)}")

    layout = GridLayout(rows)
    if len(layout.cells_of('S')) != 1:
        raise LayoutError("Layout needs exactly one start cell")
    if len(layout.cells_of('G')) != 1:
        raise LayoutError("Layout needs exactly one goal cell")
    return layout


def load_layout(path: str) -> GridLayout:
    with open(path) as fh:
        return parse_layout(fh.read())


def _neighbour(layout: GridLayout, state: int, action: int) -> int:
    height, width = layout.shape
    row, col = divmod(state, width)
    d_row, d_col = MOVES[action]
    row = min(max(row + d_row, 0), height - 1)
    col = min(max(col + d_col, 0), width - 1)
    return row * width + col


def build_gridworld(layout, slip: float = 0.0, discount: float = 0.9,
                    goal_reward: float = 1.0, step_reward: float = 0.0) -> TabularMdp:
    """Four-action gridworld MDP from a layout (text or GridLayout)"""
    if isinstance(layout, str):
        layout = parse_layout(layout)
    if not 0.0 <= slip <= 0.5:
        raise LayoutError(f"slip must lie in [0, 0.5], got {slip}")

    num_states, num_actions = layout.num_states, len(MOVES)
    transition = np.zeros((num_states * num_actions, num_states))
    reward = np.zeros(num_states * num_actions)
    goal = layout.cells_of('G')[0]
    terminal = set(layout.terminal_states)

    for s in range(num_states):
        for a in range(num_actions):
            row = s * num_actions + a
            if s in terminal:
                transition[row, s] = 1.0
                continue

            outcomes = [(a, 1.0 - 2.0 * slip)] + [(p, slip) for p in PERPENDICULAR[a]]
            for move, prob in outcomes:
                if prob == 0.0:
                    continue
                nxt = _neighbour(layout, s, move)
                transition[row, nxt] += prob
                reward[row] += prob * (goal_reward if nxt == goal else step_reward)

    logger.debug(f"Built {layout.shape[0]}x{layout.shape[1]} gridworld with slip={slip}")
    return TabularMdp(num_states, num_actions, transition, reward, discount)


def build_chain_mdp(num_states: int, num_actions: int = 2, discount: float = 0.9,
                    success: float = 0.9, seed: int = 0) -> TabularMdp:
    """Synthetic chain: action 0 retreats to the head, the others advance with
    probability `success`; the tail pays 1 per step and the head a small random
    reward per action."""
    if num_states < 2 or num_actions < 2:
        raise LayoutError("A chain needs at least two states and two actions")

    rng = np.random.default_rng(seed)
    transition = np.zeros((num_states * num_actions, num_states))
    reward = np.zeros(num_states * num_actions)
    for s in range(num_states):
        for a in range(num_actions):
            row = s * num_actions + a
            if a == 0:
                transition[row, 0] = 1.0
            else:
                transition[row, min(s + 1, num_states - 1)] += success
                transition[row, s] += 1.0 - success
            if s == num_states - 1:
                reward[row] = 1.0
            elif s == 0:
                reward[row] = 0.1 * rng.random()
    return TabularMdp(num_states, num_actions, transition, reward, discount)


def build_random_mdp(num_states: int, num_actions: int, discount: float, seed: int = 0) -> TabularMdp:
    """Dense random MDP with Dirichlet transition rows and N(0, 1) rewards"""
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(num_states), size=num_states * num_actions)
    # Dirichlet rows can be off by a few ulps
    transition /= transition.sum(axis=1, keepdims=True)
    reward = rng.standard_normal(num_states * num_actions)
    return TabularMdp(num_states, num_actions, transition, reward, discount)
