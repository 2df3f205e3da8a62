"""Config-driven training, evaluation, comparison and oracle dumps.

A run trains one agent per seed with epsilon-greedy sampling and, at episode
0, every ``eval_every`` episodes and at the end, averages the greedy return
over ``eval_episodes`` fresh episodes. Evaluation episodes draw from an RNG
phase disjoint from training, and the same evaluation episodes are reused at
every checkpoint of a seed.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import csvio
from .agent import GAUSS_SEIDEL, JACOBI, DivergenceError, FHTLRAgent
from .envs import make_env
from .exact import backward_induction
from .mdp import EpsilonSchedule, run_episode, stream_rng
from .tabular import FHQAgent, QAgent, StepSizeSchedule

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
AGENT_IDS = ("q", "fhq", "fhtlr")
OUT_ENV_VAR = "FHTLR_OUT"

PHASE_TRAIN = 0
PHASE_EVAL = 1
PHASE_INIT = 2


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class EnvironmentSpec:
    id: str
    params: dict = field(default_factory=dict)


@dataclass
class AgentSpec:
    id: str
    alpha: StepSizeSchedule = field(default_factory=StepSizeSchedule)
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    rank: int = 8
    init_scale: float = 0.1
    init_offset: float = 0.0
    update_mode: str = JACOBI
    divergence_bound: float = 1e6


@dataclass
class ExperimentConfig:
    environment: EnvironmentSpec
    agent: AgentSpec
    episodes: int
    eval_every: int
    eval_episodes: int
    seeds: list[int]
    name: str = "experiment"
    schema: int = SCHEMA_VERSION

    def validate(self) -> "ExperimentConfig":
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema {self.schema}; expected {SCHEMA_VERSION}")
        if self.agent.id not in AGENT_IDS:
            raise ConfigError(f"unknown agent {self.agent.id!r}; choose from {AGENT_IDS}")
        if self.agent.update_mode not in (JACOBI, GAUSS_SEIDEL):
            raise ConfigError(f"unknown update_mode {self.agent.update_mode!r}")
        if self.agent.rank < 0:
            raise ConfigError("rank must be non-negative")
        if self.episodes < 0 or self.eval_every < 1 or self.eval_episodes < 1:
            raise ConfigError("need episodes >= 0, eval_every >= 1, eval_episodes >= 1")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be a non-empty list of distinct integers")
        try:
            make_env(self.environment.id, self.environment.params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"environment: {exc}") from exc
        return self


@dataclass(frozen=True)
class RunRecord:
    seed: int
    episode: int
    mean_return: float
    params: int
    elapsed_ms: float

    def row(self):
        return dataclasses.astuple(self)


def _build(cls, data, where: str):
    """Instantiate dataclass ``cls`` from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict, name: str | None = None) -> ExperimentConfig:
    data = dict(data)
    if "schema" not in data:
        raise ConfigError("missing 'schema' field")
    env = _build(EnvironmentSpec, data.pop("environment", None), "environment")
    agent_data = dict(data.pop("agent", None) or {})
    alpha = _build(StepSizeSchedule, agent_data.pop("alpha", {}), "agent.alpha")
    epsilon = _build(EpsilonSchedule, agent_data.pop("epsilon", {}), "agent.epsilon")
    agent = _build(AgentSpec, {**agent_data, "alpha": alpha, "epsilon": epsilon}, "agent")
    if name is not None:
        data.setdefault("name", name)
    config = _build(ExperimentConfig, {**data, "environment": env, "agent": agent}, "config")
    config.seeds = [int(s) for s in config.seeds]
    return config.validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, name=path.stem)


def make_agent(config: ExperimentConfig, env, seed: int):
    spec = config.agent
    if spec.id == "q":
        return QAgent(env.space, spec.alpha)
    if spec.id == "fhq":
        return FHQAgent(env.space, spec.alpha)
    return FHTLRAgent(env.space, spec.rank, spec.alpha, spec.update_mode, spec.init_scale,
                      spec.divergence_bound, rng=stream_rng((seed, PHASE_INIT, 0)),
                      init_offset=spec.init_offset)


def param_count(config: ExperimentConfig) -> int:
    env = make_env(config.environment.id, config.environment.params)
    return make_agent(config, env, config.seeds[0]).n_params


def evaluate(env, agent, seed: int, n_episodes: int) -> float:
    """Mean greedy return over the seed's fixed evaluation episodes."""
    total = 0.0
    for j in range(n_episodes):
        total += run_episode(env, agent, 0.0, (seed, PHASE_EVAL, j))[1]
    return total / n_episodes


def eval_points(episodes: int, eval_every: int) -> list[int]:
    points = list(range(0, episodes + 1, eval_every))
    if points[-1] != episodes:
        points.append(episodes)
    return points


@dataclass
class SeedResult:
    seed: int
    records: list[RunRecord]
    failed: bool = False
    error: str = ""


def train_seed(config: ExperimentConfig, seed: int, timing: bool = False) -> SeedResult:
    env = make_env(config.environment.id, config.environment.params)
    agent = make_agent(config, env, seed)
    params = agent.n_params
    points = set(eval_points(config.episodes, config.eval_every))
    records = []
    start = time.perf_counter()

    def record(episode):
        ret = evaluate(env, agent, seed, config.eval_episodes)
        elapsed = (time.perf_counter() - start) * 1000.0 if timing else 0.0
        records.append(RunRecord(seed, episode, ret, params, elapsed))

    try:
        record(0)
        for ep in range(config.episodes):
            eps = config.agent.epsilon(ep)
            run_episode(env, agent, eps, (seed, PHASE_TRAIN, ep), learner=agent)
            if ep + 1 in points:
                record(ep + 1)
    except DivergenceError as exc:
        log.warning("seed %d diverged: %s", seed, exc)
        return SeedResult(seed, records, failed=True, error=str(exc))
    return SeedResult(seed, records)


def _train_seed_args(args):
    return train_seed(*args)


def aggregate(results: list[SeedResult]) -> list[tuple]:
    """Per-episode mean/std over seeds that completed; failed seeds are counted."""
    ok = [r for r in results if not r.failed]
    n_failed = len(results) - len(ok)
    by_episode: dict[int, list[RunRecord]] = {}
    for r in ok:
        for rec in r.records:
            by_episode.setdefault(rec.episode, []).append(rec)
    rows = []
    for episode in sorted(by_episode):
        recs = by_episode[episode]
        returns = np.array([rec.mean_return for rec in recs])
        std = float(returns.std(ddof=1)) if len(returns) > 1 else 0.0
        rows.append((episode, float(returns.mean()), std, recs[0].params, len(recs), n_failed))
    return rows


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV_VAR, "runs"))


def run_experiment(config: ExperimentConfig, out_dir=None, timing: bool = False,
                   jobs: int = 1) -> list[SeedResult]:
    """Train every seed, writing ``seed_<s>.csv`` files and ``aggregate.csv``."""
    out = Path(out_dir) if out_dir is not None else default_out_dir()
    run_dir = out / config.name
    tasks = [(config, seed, timing) for seed in config.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_train_seed_args, tasks))
    else:
        results = [train_seed(*t) for t in tasks]
    for r in results:
        csvio.write_rows(run_dir / f"seed_{r.seed}.csv", csvio.RUN_HEADER, (rec.row() for rec in r.records))
    csvio.write_rows(run_dir / "aggregate.csv", csvio.AGGREGATE_HEADER, aggregate(results))
    return results


@dataclass(frozen=True)
class ComparisonRow:
    environment: str
    agent: str
    mean_return: float
    std_return: float
    params: int
    n_seeds: int
    n_failed: int


def summarize(config: ExperimentConfig, results: list[SeedResult]) -> ComparisonRow:
    finals = np.array([r.records[-1].mean_return for r in results if not r.failed])
    n_failed = sum(r.failed for r in results)
    mean = float(finals.mean()) if len(finals) else math.nan
    std = float(finals.std(ddof=1)) if len(finals) > 1 else 0.0
    return ComparisonRow(config.environment.id, config.agent.id, mean, std,
                         param_count(config), len(finals), n_failed)


def compare(configs: list[ExperimentConfig], out_dir=None, timing: bool = False,
            jobs: int = 1) -> list[ComparisonRow]:
    """Run each config and tabulate final returns and parameter counts."""
    out = Path(out_dir) if out_dir is not None else default_out_dir()
    rows = [summarize(c, run_experiment(c, out, timing, jobs)) for c in configs]
    rows.sort(key=lambda r: (r.environment, AGENT_IDS.index(r.agent)))
    csvio.write_rows(out / "comparison.csv", csvio.COMPARE_HEADER,
                     (dataclasses.astuple(r) for r in rows))
    return rows


def format_table(rows: list[ComparisonRow]) -> str:
    lines = [f"{'environment':<12} {'agent':<6} {'return':>10} {'std':>8} {'params':>10}"]
    for r in rows:
        lines.append(f"{r.environment:<12} {r.agent:<6} {r.mean_return:>10.2f} "
                     f"{r.std_return:>8.2f} {r.params:>10,d}")
    return "\n".join(lines)


def solve(env_id: str, params: dict | None = None, out_dir=None):
    """Backward induction on an environment with explicit dynamics.

    Writes ``q_star.csv`` (axes t, state, action) and ``pi_star.csv`` (axes
    t, state; value is the flat action index). Raises
    :class:`~fhtlr.exact.OracleUnavailable` for simulators without a model.
    """
    env = make_env(env_id, params)
    dyn = env.explicit_dynamics()
    sol = backward_induction(dyn, env.space.horizon)
    if out_dir is not None:
        out = Path(out_dir)
        csvio.write_tensor_csv(out / "q_star.csv", sol.q_star, ("t", "state", "action"), one_based=("t",))
        csvio.write_tensor_csv(out / "pi_star.csv", sol.pi_star, ("t", "state"), one_based=("t",))
    return sol
