"""Finite-horizon grid world with two goals in opposite corners.

Moves are deterministic and clamp at the border. Entering a goal pays its
reward once; goal cells are absorbing and pay nothing afterwards. Episodes
always last the full horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exact import ExplicitDynamics
from ..mdp import StateActionSpace, flatten, unflatten

UP, DOWN, LEFT, RIGHT = range(4)
MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}


def _default_goals():
    return [((0, 0), 50.0), ((4, 4), 100.0)]


@dataclass
class GridWorldConfig:
    """``start`` is ``"non-goal"`` (uniform over cells without a goal) or ``"all"``."""

    width: int = 5
    height: int = 5
    horizon: int = 5
    goals: list = field(default_factory=_default_goals)
    start: str = "non-goal"

    def __post_init__(self):
        self.goals = [((int(c[0]), int(c[1])), float(r)) for c, r in self.goals]
        cells = [c for c, _ in self.goals]
        if len(set(cells)) != len(cells):
            raise ValueError("goals must sit on distinct cells")
        for (row, col), r in self.goals:
            if not (0 <= row < self.height and 0 <= col < self.width):
                raise ValueError(f"goal {(row, col)} is off the grid")
            if not np.isfinite(r):
                raise ValueError("goal rewards must be finite")
        if self.start not in ("non-goal", "all"):
            raise ValueError(f"unknown start mode {self.start!r}")
        if self.horizon < 1 or self.width < 1 or self.height < 1:
            raise ValueError("grid sizes and horizon must be positive")


class GridWorld:
    def __init__(self, config: GridWorldConfig | None = None):
        self.config = config or GridWorldConfig()
        c = self.config
        self.space = StateActionSpace((c.height, c.width), (4,), c.horizon)
        self.goal_reward = {cell: r for cell, r in c.goals}
        cells = [(r, q) for r in range(c.height) for q in range(c.width)]
        if c.start == "non-goal":
            cells = [x for x in cells if x not in self.goal_reward]
        self.start_cells = cells
        self.state = None
        self.t = 0

    def move(self, cell, action: int) -> tuple[tuple[int, int], float]:
        """Deterministic one-step dynamics ignoring time."""
        if cell in self.goal_reward:
            return cell, 0.0
        dr, dc = MOVES[int(action)]
        row = min(max(cell[0] + dr, 0), self.config.height - 1)
        col = min(max(cell[1] + dc, 0), self.config.width - 1)
        nxt = (row, col)
        return nxt, self.goal_reward.get(nxt, 0.0)

    def step_from(self, cell, action, t: int):
        """``(next cell, reward, terminal)`` for taking ``action`` at time ``t``."""
        if not 1 <= t <= self.config.horizon:
            raise IndexError(f"time step {t} outside 1..{self.config.horizon}")
        nxt, r = self.move(tuple(cell), action[0] if isinstance(action, tuple) else action)
        return nxt, r, t == self.config.horizon

    def reset(self, rng: np.random.Generator):
        self.state = self.start_cells[int(rng.integers(len(self.start_cells)))]
        self.t = 0
        return self.state

    def step(self, action):
        self.t += 1
        nxt, r, _ = self.step_from(self.state, action, self.t)
        self.state = nxt
        return nxt, r

    def explicit_dynamics(self) -> ExplicitDynamics:
        dims = self.space.state_dims
        S, A = self.space.n_states, self.space.n_actions
        P = np.zeros((S, A, S))
        R = np.zeros((S, A))
        for s in range(S):
            cell = unflatten(dims, s)
            for a in range(A):
                nxt, r = self.move(cell, a)
                P[s, a, flatten(dims, nxt)] = 1.0
                R[s, a] = r
        init = np.zeros(S)
        for cell in self.start_cells:
            init[flatten(dims, cell)] = 1.0 / len(self.start_cells)
        return ExplicitDynamics(P, R, init)
