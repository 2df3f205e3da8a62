"""Finite-horizon MDP contract: index spaces, transitions, episodes, exploration.

Time is 1..T everywhere outside this package's array storage. Arrays indexed
by time use ``t - 1``; that conversion lives in :func:`time_index`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

# Purpose codes for the per-episode RNG streams.
STREAM_ENV = 0
STREAM_EXPLORE = 1


class ContractError(RuntimeError):
    """An agent or environment broke the episode contract."""


def time_index(t: int, horizon: int) -> int:
    """Map an external time step ``t`` in 1..T to a 0-based array index."""
    if not 1 <= t <= horizon:
        raise IndexError(f"time step {t} outside 1..{horizon}")
    return t - 1


_INT64_MAX = int(np.iinfo(np.int64).max)


def _cardinality(dims: Sequence[int]) -> int:
    total = 1
    for n in dims:
        total *= int(n)
    # Python ints never overflow; the check guards what numpy can address.
    if total > _INT64_MAX:
        raise OverflowError(f"joint cardinality of {list(dims)} exceeds int64")
    return total


def flatten(dims: Sequence[int], idx: Sequence[int]) -> int:
    """Mixed-radix flat index of ``idx``; the first dimension varies slowest."""
    if len(idx) != len(dims):
        raise IndexError(f"index has {len(idx)} coordinates, space has {len(dims)}")
    flat = 0
    for d, (i, n) in enumerate(zip(idx, dims)):
        if not 0 <= i < n:
            raise IndexError(f"coordinate {i} out of range for dimension {d} of size {n}")
        flat = flat * n + int(i)
    return flat


def unflatten(dims: Sequence[int], flat: int) -> tuple[int, ...]:
    """Inverse of :func:`flatten`."""
    size = _cardinality(dims)
    if not 0 <= flat < size:
        raise IndexError(f"flat index {flat} out of range for size {size}")
    coords = []
    for n in reversed(dims):
        flat, i = divmod(flat, n)
        coords.append(i)
    return tuple(reversed(coords))


@dataclass(frozen=True)
class StateActionSpace:
    """Cardinalities of each state and action dimension plus the horizon."""

    state_dims: tuple[int, ...]
    action_dims: tuple[int, ...]
    horizon: int
    n_states: int = field(init=False, repr=False, compare=False)
    n_actions: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "state_dims", tuple(int(n) for n in self.state_dims))
        object.__setattr__(self, "action_dims", tuple(int(n) for n in self.action_dims))
        if not self.state_dims or not self.action_dims:
            raise ValueError("state and action spaces need at least one dimension")
        if any(n < 1 for n in self.state_dims + self.action_dims):
            raise ValueError("all cardinalities must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        _cardinality(self.state_dims + self.action_dims)
        object.__setattr__(self, "n_states", _cardinality(self.state_dims))
        object.__setattr__(self, "n_actions", _cardinality(self.action_dims))

    @property
    def joint_dims(self) -> tuple[int, ...]:
        """Dimensions of the joint state-action space (D of them)."""
        return self.state_dims + self.action_dims

    @property
    def tensor_dims(self) -> tuple[int, ...]:
        """Dimensions of the Q-tensor: joint state-action dims followed by time."""
        return self.joint_dims + (self.horizon,)

    @property
    def n_joint(self) -> int:
        return _cardinality(self.joint_dims)

    def state_index(self, s: Sequence[int]) -> int:
        return flatten(self.state_dims, s)

    def action_index(self, a: Sequence[int]) -> int:
        return flatten(self.action_dims, a)

    def state_at(self, flat: int) -> tuple[int, ...]:
        return unflatten(self.state_dims, flat)

    def action_at(self, flat: int) -> tuple[int, ...]:
        return unflatten(self.action_dims, flat)


@dataclass(frozen=True)
class Transition:
    t: int
    s: tuple[int, ...]
    a: tuple[int, ...]
    s_next: tuple[int, ...]
    r: float
    terminal: bool


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear per-episode decay from ``eps_start`` to ``eps_end``."""

    eps_start: float = 1.0
    eps_end: float = 0.05
    decay_episodes: int = 1000

    def __post_init__(self):
        for p in (self.eps_start, self.eps_end):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"epsilon {p} is not a probability")
        if self.eps_end > self.eps_start:
            raise ValueError("eps_end must not exceed eps_start")
        if self.decay_episodes < 1:
            raise ValueError("decay_episodes must be positive")

    def __call__(self, episode: int) -> float:
        frac = min(max(episode, 0) / self.decay_episodes, 1.0)
        eps = self.eps_start + frac * (self.eps_end - self.eps_start)
        return min(max(eps, self.eps_end), self.eps_start)


class FiniteHorizonMdp(Protocol):
    """Episodic simulator. ``step`` is called exactly T times after ``reset``."""

    space: StateActionSpace

    def reset(self, rng: np.random.Generator) -> tuple[int, ...]: ...

    def step(self, action: tuple[int, ...]) -> tuple[tuple[int, ...], float]: ...


class Agent(Protocol):
    def greedy_action(self, t: int, s: tuple[int, ...]) -> tuple[int, ...]: ...


def stream_rng(seed, *keys: int) -> np.random.Generator:
    """PCG64 generator for one (seed, keys...) stream.

    ``seed`` may be an int or a tuple of ints. Distinct key tuples give
    statistically independent streams.
    """
    entropy = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    entropy = [int(x) for x in entropy] + [int(k) for k in keys]
    # SeedSequence ignores trailing zeros, so the length goes in first
    return np.random.default_rng([len(entropy)] + entropy)


def run_episode(env: FiniteHorizonMdp, agent: Agent, epsilon: float, rng_seed,
                learner=None) -> tuple[list[Transition], float]:
    """Roll out one episode of exactly T steps under epsilon-greedy sampling.

    The environment and the exploration coin flips draw from separate streams
    derived from ``rng_seed``, so changing epsilon never perturbs the
    environment's randomness. If ``learner`` is given, its ``update`` is
    called on each transition as soon as it is observed.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon {epsilon} is not a probability")
    space = env.space
    env_rng = stream_rng(rng_seed, STREAM_ENV)
    explore_rng = stream_rng(rng_seed, STREAM_EXPLORE)
    n_actions = space.n_actions

    s = env.reset(env_rng)
    transitions = []
    total = 0.0
    for t in range(1, space.horizon + 1):
        if epsilon > 0.0 and explore_rng.random() < epsilon:
            a = space.action_at(int(explore_rng.integers(n_actions)))
        else:
            a = tuple(agent.greedy_action(t, s))
            if len(a) != len(space.action_dims) or any(
                    not 0 <= x < n for x, n in zip(a, space.action_dims)):
                raise ContractError(f"agent returned out-of-range action {a} at t={t}")
        s_next, r = env.step(a)
        tr = Transition(t=t, s=s, a=a, s_next=s_next, r=float(r), terminal=(t == space.horizon))
        transitions.append(tr)
        total += tr.r
        if learner is not None:
            learner.update(tr)
        s = s_next
    return transitions, total


def greedy_return(env: FiniteHorizonMdp, agent: Agent, rng_seed) -> float:
    """Return of one purely greedy episode."""
    return run_episode(env, agent, 0.0, rng_seed)[1]

