"""Simulators backed by an explicit (P, R) model, plus small fixture MDPs."""

from __future__ import annotations

import numpy as np

from ..exact import ExplicitDynamics
from ..mdp import StateActionSpace


class ExplicitMdp:
    """Samples a flat-indexed MDP; states and actions are 1-tuples.

    Rewards are the expected rewards ``R[s, a]`` (deterministic given s, a).
    """

    def __init__(self, dyn: ExplicitDynamics, horizon: int):
        self.dyn = dyn
        self.space = StateActionSpace((dyn.n_states,), (dyn.n_actions,), horizon)
        self._cdf = np.cumsum(dyn.P, axis=2)
        self._init_cdf = np.cumsum(dyn.init_dist)
        self.rng = None
        self.state = None
        self.t = 0

    def reset(self, rng: np.random.Generator):
        self.rng = rng
        self.t = 0
        self.state = (self._sample(self._init_cdf),)
        return self.state

    def _sample(self, cdf: np.ndarray) -> int:
        i = int(np.searchsorted(cdf, self.rng.random(), side="right"))
        return min(i, len(cdf) - 1)

    def step(self, action):
        self.t += 1
        if self.t > self.space.horizon:
            raise RuntimeError("episode already finished")
        s, a = self.state[0], action[0]
        r = float(self.dyn.R[s, a])
        self.state = (self._sample(self._cdf[s, a]),)
        return self.state, r

    def explicit_dynamics(self) -> ExplicitDynamics:
        return self.dyn


def tiny_dynamics() -> ExplicitDynamics:
    """Two states, two actions (0 = stay, 1 = flip), reward ``s + a``."""
    P = np.zeros((2, 2, 2))
    for s in range(2):
        P[s, 0, s] = 1.0
        P[s, 1, 1 - s] = 1.0
    R = np.array([[0.0, 1.0], [1.0, 2.0]])
    return ExplicitDynamics(P, R)


def random_dynamics(rng: np.random.Generator, n_states: int, n_actions: int,
                    deterministic: bool = False) -> ExplicitDynamics:
    """Random MDP with rewards in [0, 1) and Dirichlet (or one-hot) transitions."""
    if deterministic:
        P = np.zeros((n_states, n_actions, n_states))
        nxt = rng.integers(n_states, size=(n_states, n_actions))
        for s in range(n_states):
            P[s, np.arange(n_actions), nxt[s]] = 1.0
    else:
        P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
        # renormalize in float64 so rows sum to 1 within 1e-12
        P /= P.sum(axis=2, keepdims=True)
    R = rng.random((n_states, n_actions))
    init = rng.dirichlet(np.ones(n_states))
    init /= init.sum()
    return ExplicitDynamics(P, R, init)
