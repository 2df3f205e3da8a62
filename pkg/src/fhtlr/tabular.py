"""Dense-table baselines: finite-horizon Q-learning and stationary Q-learning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import StateActionSpace, Transition, time_index

CONSTANT = "constant"
INVERSE_VISIT = "inverse-visit-count"
STEP_DECAY = "step-decay"


@dataclass(frozen=True)
class StepSizeSchedule:
    """Step size per update.

    ``constant`` uses ``alpha0`` always; ``inverse-visit-count`` uses
    ``alpha0 / (1 + visits)`` where ``visits`` counts earlier updates of the
    same cell; ``step-decay`` uses ``alpha0`` for the first ``decay_at``
    updates of the agent and ``alpha0 * decay_factor`` afterwards.
    """

    kind: str = CONSTANT
    alpha0: float = 0.1
    decay_at: int = 0
    decay_factor: float = 1.0

    def __post_init__(self):
        if self.kind not in (CONSTANT, INVERSE_VISIT, STEP_DECAY):
            raise ValueError(f"unknown step-size kind {self.kind!r}")
        if self.alpha0 < 0 or self.decay_factor < 0 or self.decay_at < 0:
            raise ValueError("step-size parameters must be non-negative")

    def __call__(self, visits: int, n: int = 0) -> float:
        if self.kind == CONSTANT:
            return self.alpha0
        if self.kind == INVERSE_VISIT:
            return self.alpha0 / (1 + visits)
        return self.alpha0 * (self.decay_factor if n >= self.decay_at else 1.0)


class _TableAgent:
    def __init__(self, space: StateActionSpace, alpha: StepSizeSchedule, shape: tuple[int, ...]):
        self.space = space
        self.alpha = alpha
        self.values = np.zeros(shape)
        self.visits = np.zeros(shape, dtype=np.int64)
        self.n_updates = 0

    @property
    def n_params(self) -> int:
        return int(self.values.size)

    def _step(self, cell: tuple[int, ...], target: float) -> None:
        a = self.alpha(int(self.visits[cell]), self.n_updates)
        self.visits[cell] += 1
        self.n_updates += 1
        if a != 0.0:
            self.values[cell] += a * (target - self.values[cell])

    def _argmax(self, row: np.ndarray) -> tuple[int, ...]:
        return self.space.action_at(int(np.argmax(row)))


class FHQAgent(_TableAgent):
    """Finite-horizon Q-learning: one Q table per time step, shape (T, S, A)."""

    def __init__(self, space: StateActionSpace, alpha: StepSizeSchedule):
        super().__init__(space, alpha, (space.horizon, space.n_states, space.n_actions))

    def target(self, tr: Transition) -> float:
        if tr.terminal:
            return tr.r
        t_next = time_index(tr.t + 1, self.space.horizon)
        return tr.r + float(self.values[t_next, self.space.state_index(tr.s_next)].max())

    def update(self, tr: Transition) -> None:
        cell = (time_index(tr.t, self.space.horizon),
                self.space.state_index(tr.s), self.space.action_index(tr.a))
        self._step(cell, self.target(tr))

    def greedy_action(self, t: int, s) -> tuple[int, ...]:
        return self._argmax(self.values[time_index(t, self.space.horizon), self.space.state_index(s)])

    def q_table(self) -> np.ndarray:
        """Values as a (T, S, A) array."""
        return self.values


class QAgent(_TableAgent):
    """Stationary undiscounted Q-learning run on the finite-horizon task.

    Time is invisible to the agent; the episode end only truncates the
    bootstrap (target is the bare reward at t = T).
    """

    def __init__(self, space: StateActionSpace, alpha: StepSizeSchedule):
        super().__init__(space, alpha, (space.n_states, space.n_actions))

    def target(self, tr: Transition) -> float:
        if tr.terminal:
            return tr.r
        return tr.r + float(self.values[self.space.state_index(tr.s_next)].max())

    def update(self, tr: Transition) -> None:
        cell = (self.space.state_index(tr.s), self.space.action_index(tr.a))
        self._step(cell, self.target(tr))

    def greedy_action(self, t: int, s) -> tuple[int, ...]:
        time_index(t, self.space.horizon)
        return self._argmax(self.values[self.space.state_index(s)])

    def q_table(self) -> np.ndarray:
        """Values broadcast to (T, S, A) for comparison with time-indexed tables."""
        return np.broadcast_to(self.values, (self.space.horizon,) + self.values.shape)
