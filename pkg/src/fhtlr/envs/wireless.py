"""Time-limited opportunistic multiple access over C orthogonal channels.

State: ``(fading_0..fading_{C-1}, busy_0..busy_{C-1}, battery, queue)`` with
every coordinate a level index. Action: one power-level index per channel.

Per step, channel c carries ``floor(log2(1 + g_c * p_c / noise))`` packets
(never more than remain queued). On a busy channel each packet is lost with
probability ``loss_if_busy``; lost packets stay queued. The battery pays the
integer energy cost of the chosen power levels and may harvest one unit; the
queue may receive one arrival. Fading levels and occupancy follow independent
Markov chains. The reward is zero except at t = T, where it is
``w_battery * battery + w_queue * queue`` evaluated after the last step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..exact import OracleUnavailable
from ..mdp import StateActionSpace


@dataclass
class WirelessConfig:
    channels: int = 2
    horizon: int = 5
    fading_levels: list = field(default_factory=lambda: [1.0, 3.0])
    fading_stay: float = 0.7
    p_stay_free: float = 0.7
    p_stay_busy: float = 0.6
    battery_levels: int = 4
    harvest_prob: float = 0.3
    queue_capacity: int = 5
    arrival_prob: float = 0.4
    power_levels: list = field(default_factory=lambda: [0.0, 1.0, 3.0])
    energy_costs: list = field(default_factory=lambda: [0, 1, 2])
    loss_if_busy: float = 0.5
    terminal_weights: list = field(default_factory=lambda: [1.0, -2.0])
    noise_power: float = 1.0

    def __post_init__(self):
        self.fading_levels = [float(g) for g in self.fading_levels]
        self.power_levels = [float(p) for p in self.power_levels]
        self.energy_costs = [int(e) for e in self.energy_costs]
        self.terminal_weights = [float(w) for w in self.terminal_weights]
        if self.channels < 1 or self.horizon < 1:
            raise ValueError("channels and horizon must be positive")
        if not self.fading_levels or any(g <= 0 for g in self.fading_levels):
            raise ValueError("fading levels must be positive gains")
        if len(self.power_levels) != len(self.energy_costs):
            raise ValueError("each power level needs an energy cost")
        if any(p < 0 for p in self.power_levels) or any(e < 0 for e in self.energy_costs):
            raise ValueError("powers and energy costs must be non-negative")
        if sorted(self.energy_costs) != self.energy_costs:
            raise ValueError("energy costs must be non-decreasing in the power level")
        if self.battery_levels < 1 or self.queue_capacity < 0:
            raise ValueError("battery needs >= 1 level and the queue a capacity >= 0")
        for name in ("fading_stay", "p_stay_free", "p_stay_busy", "harvest_prob",
                     "arrival_prob", "loss_if_busy"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if len(self.terminal_weights) != 2:
            raise ValueError("terminal_weights is (w_battery, w_queue)")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")

    def free_stationary(self) -> float:
        """Long-run probability that a channel is free."""
        leave_free, leave_busy = 1 - self.p_stay_free, 1 - self.p_stay_busy
        if leave_free + leave_busy == 0:
            return 1.0
        return leave_busy / (leave_free + leave_busy)


def packets_for(gain: float, power: float, noise: float) -> int:
    """Whole packets a channel carries: ``floor(log2(1 + gain * power / noise))``."""
    # the epsilon keeps exact powers of two (e.g. log2(4)) from flooring down
    return int(math.floor(math.log2(1.0 + gain * power / noise) + 1e-9))


class Wireless:
    def __init__(self, config: WirelessConfig | None = None):
        self.config = c = config or WirelessConfig()
        C = c.channels
        state_dims = ((len(c.fading_levels),) * C + (2,) * C
                      + (c.battery_levels, c.queue_capacity + 1))
        self.space = StateActionSpace(state_dims, (len(c.power_levels),) * C, c.horizon)
        self._packets = [[packets_for(g, p, c.noise_power) for p in c.power_levels]
                         for g in c.fading_levels]
        self.rng = None
        self.state = None
        self.t = 0

    def feasible_action(self, action, battery: int) -> tuple[int, ...]:
        """Lower the priciest channel's level (last channel on ties) until affordable."""
        levels = list(action)
        costs = self.config.energy_costs
        while sum(costs[x] for x in levels) > battery:
            worst = max(range(len(levels)), key=lambda c: (costs[levels[c]], c))
            levels[worst] -= 1
        return tuple(levels)

    def initial_state(self, rng: np.random.Generator) -> tuple[int, ...]:
        c = self.config
        p_free = c.free_stationary()
        fading = [int(rng.integers(len(c.fading_levels))) for _ in range(c.channels)]
        busy = [int(rng.random() >= p_free) for _ in range(c.channels)]
        battery = int(rng.integers(c.battery_levels))
        queue = int(rng.integers(c.queue_capacity + 1))
        return tuple(fading + busy + [battery, queue])

    def transition(self, state, action, t: int, rng: np.random.Generator):
        """Sample ``(next state, reward, terminal)`` for ``action`` at time ``t``."""
        c = self.config
        if not 1 <= t <= c.horizon:
            raise IndexError(f"time step {t} outside 1..{c.horizon}")
        C = c.channels
        fading = list(state[:C])
        busy = list(state[C:2 * C])
        battery, queue = state[2 * C], state[2 * C + 1]

        levels = self.feasible_action(action, battery)
        remaining = queue
        delivered = 0
        for ch in range(C):
            sent = min(self._packets[fading[ch]][levels[ch]], remaining)
            remaining -= sent
            if busy[ch] and sent:
                ok = int(rng.binomial(sent, 1.0 - c.loss_if_busy))
            else:
                ok = sent
            delivered += ok
        energy = sum(c.energy_costs[x] for x in levels)

        arrival = int(rng.random() < c.arrival_prob)
        harvest = int(rng.random() < c.harvest_prob)
        queue = min(queue - delivered + arrival, c.queue_capacity)
        battery = min(battery - energy + harvest, c.battery_levels - 1)

        n_fade = len(c.fading_levels)
        for ch in range(C):
            if n_fade > 1 and rng.random() >= c.fading_stay:
                other = int(rng.integers(n_fade - 1))
                fading[ch] = other if other < fading[ch] else other + 1
            stay = c.p_stay_busy if busy[ch] else c.p_stay_free
            if rng.random() >= stay:
                busy[ch] = 1 - busy[ch]

        nxt = tuple(fading + busy + [battery, queue])
        terminal = t == c.horizon
        reward = self.terminal_reward(battery, queue) if terminal else 0.0
        return nxt, reward, terminal

    def terminal_reward(self, battery: int, queue: int) -> float:
        w_battery, w_queue = self.config.terminal_weights
        return w_battery * battery + w_queue * queue

    def reset(self, rng: np.random.Generator):
        self.rng = rng
        self.t = 0
        self.state = self.initial_state(rng)
        return self.state

    def step(self, action):
        self.t += 1
        nxt, r, _ = self.transition(self.state, action, self.t, self.rng)
        self.state = nxt
        return nxt, r

    def explicit_dynamics(self):
        raise OracleUnavailable("oracle unavailable for this environment: wireless exposes no explicit dynamics")
