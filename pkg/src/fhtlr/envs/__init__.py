"""Benchmark environments and a by-name factory."""

from .explicit import ExplicitMdp, random_dynamics, tiny_dynamics
from .gridworld import GridWorld, GridWorldConfig
from .wireless import Wireless, WirelessConfig


def make_env(env_id: str, params: dict | None = None):
    """Build an environment from its id and keyword parameters."""
    params = dict(params or {})
    if env_id == "gridworld":
        return GridWorld(GridWorldConfig(**params))
    if env_id == "wireless":
        return Wireless(WirelessConfig(**params))
    if env_id == "tiny":
        horizon = params.pop("horizon", 2)
        if params:
            raise TypeError(f"unexpected tiny-MDP parameters: {sorted(params)}")
        return ExplicitMdp(tiny_dynamics(), horizon)
    raise ValueError(f"unknown environment {env_id!r}")


__all__ = ["ExplicitMdp", "GridWorld", "GridWorldConfig", "Wireless", "WirelessConfig",
           "make_env", "random_dynamics", "tiny_dynamics"]
