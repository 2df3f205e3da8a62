import itertools

import numpy as np
import pytest

from fhtlr.envs import random_dynamics, tiny_dynamics
from fhtlr.exact import (ExplicitDynamics, backward_induction, policy_q_values,
                         policy_value)


def enumerate_policies(n_states, n_actions, horizon):
    for flat in itertools.product(range(n_actions), repeat=n_states * horizon):
        yield np.array(flat).reshape(horizon, n_states)


def trajectory_value(dyn, policy, init):
    """Expected return by summing over every state trajectory explicitly."""
    horizon, S = policy.shape
    total = 0.0
    for path in itertools.product(range(S), repeat=horizon):
        prob = init[path[0]]
        ret = 0.0
        for t, s in enumerate(path):
            a = policy[t, s]
            ret += dyn.R[s, a]
            if t + 1 < horizon:
                prob *= dyn.P[s, a, path[t + 1]]
        total += prob * ret
    return total


def test_tiny_mdp_hand_values():
    sol = backward_induction(tiny_dynamics(), 2)
    q1 = sol.q_star[0]
    assert q1[0, 1] == 3 and q1[0, 0] == 1 and q1[1, 0] == 3 and q1[1, 1] == 3
    assert sol.pi_star[0, 0] == 1
    # ties at (t=1, s=1) break to the lowest action
    assert sol.pi_star[0, 1] == 0


def test_last_layer_is_reward():
    rng = np.random.default_rng(0)
    for _ in range(5):
        dyn = random_dynamics(rng, 4, 3)
        sol = backward_induction(dyn, 4)
        assert np.array_equal(sol.q_star[-1], dyn.R)


def test_policy_is_argmax_of_q():
    dyn = random_dynamics(np.random.default_rng(1), 5, 3)
    sol = backward_induction(dyn, 3)
    assert np.array_equal(sol.pi_star, sol.q_star.argmax(axis=2))


def test_rejects_non_stochastic_rows():
    P = np.zeros((2, 1, 2))
    P[0, 0, 0] = 1.0
    P[1, 0, 0] = 0.9
    with pytest.raises(ValueError, match="probability"):
        ExplicitDynamics(P, np.zeros((2, 1)))


def test_policy_value_checks_init_dist():
    with pytest.raises(ValueError):
        policy_value(tiny_dynamics(), np.zeros((2, 2), int), [0.5, 0.6])


def test_policy_value_of_optimal_policy_is_v_start():
    dyn = random_dynamics(np.random.default_rng(2), 6, 3)
    sol = backward_induction(dyn, 4)
    assert policy_value(dyn, sol.pi_star) == pytest.approx(sol.v_start, abs=1e-12)


def test_policy_value_single_step():
    dyn = random_dynamics(np.random.default_rng(3), 4, 2)
    pol = np.array([[1, 0, 1, 1]])
    expected = sum(dyn.init_dist[s] * dyn.R[s, pol[0, s]] for s in range(4))
    assert policy_value(dyn, pol) == pytest.approx(expected, abs=1e-12)


def test_policy_value_matches_trajectory_enumeration():
    dyn = tiny_dynamics()
    stay = np.zeros((2, 2), dtype=int)
    assert policy_value(dyn, stay) == pytest.approx(trajectory_value(dyn, stay, dyn.init_dist), abs=1e-12)
    rng = np.random.default_rng(4)
    for _ in range(10):
        d = random_dynamics(rng, 3, 2)
        pol = rng.integers(2, size=(3, 3))
        assert policy_value(d, pol) == pytest.approx(trajectory_value(d, pol, d.init_dist), abs=1e-12)


@pytest.mark.parametrize("S,A,T", [(1, 1, 1), (2, 2, 2), (3, 2, 3), (3, 1, 3), (2, 2, 3)])
def test_v_start_equals_enumeration_max(S, A, T):
    rng = np.random.default_rng(S * 100 + A * 10 + T)
    for deterministic in (False, True):
        dyn = random_dynamics(rng, S, A, deterministic=deterministic)
        best = max(policy_value(dyn, p) for p in enumerate_policies(S, A, T))
        assert backward_induction(dyn, T).v_start == pytest.approx(best, abs=1e-9)


def test_elementwise_dominance_over_random_policies():
    rng = np.random.default_rng(5)
    for _ in range(100):
        S, A, T = rng.integers(1, 7), rng.integers(1, 7), rng.integers(1, 5)
        dyn = random_dynamics(rng, S, A)
        q_star = backward_induction(dyn, T).q_star
        q_pi = policy_q_values(dyn, rng.integers(A, size=(T, S)))
        assert np.all(q_star >= q_pi - 1e-9)
