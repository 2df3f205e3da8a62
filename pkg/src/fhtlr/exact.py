"""Backward induction and exact policy evaluation for explicit finite-horizon MDPs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class OracleUnavailable(RuntimeError):
    """The environment does not expose explicit dynamics."""


@dataclass(frozen=True)
class ExplicitDynamics:
    """Dense model of a (flat-indexed) MDP.

    Attributes:
        P: transition probabilities, shape (S, A, S); ``P[s, a, s2]`` is
            Pr(s_{t+1} = s2 | s_t = s, a_t = a).
        R: expected rewards, shape (S, A).
        init_dist: initial-state distribution, shape (S,). Uniform if omitted.
    """

    P: np.ndarray
    R: np.ndarray
    init_dist: np.ndarray | None = None

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.float64)
        R = np.asarray(self.R, dtype=np.float64)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError(f"P must have shape (S, A, S), got {P.shape}")
        if R.shape != P.shape[:2]:
            raise ValueError(f"R shape {R.shape} does not match P shape {P.shape}")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=2) - 1.0) > 1e-12):
            bad = np.argwhere((np.abs(P.sum(axis=2) - 1.0) > 1e-12) | np.any(P < 0, axis=2))
            raise ValueError(f"P rows are not probability distributions, e.g. (s, a) = {tuple(bad[0])}")
        if not np.all(np.isfinite(R)):
            raise ValueError("R has non-finite entries")
        init = np.full(P.shape[0], 1.0 / P.shape[0]) if self.init_dist is None else self.init_dist
        init = validate_distribution(init, P.shape[0])
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "init_dist", init)

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]


def validate_distribution(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (n,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"not a probability distribution over {n} states")
    return p


@dataclass(frozen=True)
class OptimalSolution:
    """Arrays are indexed by ``t - 1`` along the leading axis."""

    q_star: np.ndarray  # (T, S, A)
    pi_star: np.ndarray  # (T, S)
    v_start: float


def backward_induction(dyn: ExplicitDynamics, horizon: int) -> OptimalSolution:
    """Solve the finite-horizon Bellman optimality recursion.

    The last layer equals ``R``; earlier layers add the expected maximum of
    the layer after. Greedy ties resolve to the lowest action index.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    S, A = dyn.R.shape
    q = np.empty((horizon, S, A))
    q[-1] = dyn.R
    for t in range(horizon - 2, -1, -1):
        q[t] = dyn.R + dyn.P @ q[t + 1].max(axis=1)
    pi = q.argmax(axis=2)  # argmax returns the first maximum
    v_start = float(dyn.init_dist @ q[0].max(axis=1))
    return OptimalSolution(q_star=q, pi_star=pi, v_start=v_start)


def _check_policy(dyn: ExplicitDynamics, policy) -> np.ndarray:
    policy = np.asarray(policy)
    if policy.ndim != 2 or policy.shape[1] != dyn.n_states:
        raise ValueError(f"policy must have shape (T, {dyn.n_states}), got {policy.shape}")
    if np.any(policy < 0) or np.any(policy >= dyn.n_actions):
        raise ValueError("policy contains out-of-range actions")
    return policy.astype(np.int64)


def policy_q_values(dyn: ExplicitDynamics, policy) -> np.ndarray:
    """Q^pi for a deterministic non-stationary ``policy`` of shape (T, S)."""
    policy = _check_policy(dyn, policy)
    horizon, S = policy.shape
    q = np.empty((horizon, S, dyn.n_actions))
    q[-1] = dyn.R
    states = np.arange(S)
    for t in range(horizon - 2, -1, -1):
        v_next = q[t + 1][states, policy[t + 1]]
        q[t] = dyn.R + dyn.P @ v_next
    return q


def policy_value(dyn: ExplicitDynamics, policy, init_dist=None) -> float:
    """Expected return of ``policy`` from ``init_dist`` (defaults to the model's)."""
    init = dyn.init_dist if init_dist is None else validate_distribution(init_dist, dyn.n_states)
    policy = _check_policy(dyn, policy)
    q = policy_q_values(dyn, policy)
    v1 = q[0][np.arange(dyn.n_states), policy[0]]
    return float(init @ v1)
