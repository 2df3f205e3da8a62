"""Acceptance suite: one PASS/FAIL line per criterion.

The lines are printed in pytest's terminal summary (see ``conftest.py``) and
when this file is run directly with ``python tests/test_acceptance.py``.
The grid-world and wireless comparisons train the shipped configs with all
ten seeds, so this module takes several minutes.
"""

import itertools
import time
from pathlib import Path

import numpy as np
import pytest

from fhtlr import cli
from fhtlr.agent import FHTLRAgent
from fhtlr.envs import ExplicitMdp, GridWorld, make_env, random_dynamics, tiny_dynamics
from fhtlr.exact import backward_induction, policy_q_values, policy_value
from fhtlr.experiment import compare, load_config, param_count
from fhtlr.mdp import StateActionSpace, Transition, run_episode
from fhtlr.parafac import (ParafacModel, eval_entry, khatri_rao, matricize, random_model,
                           reconstruct, unmatricize)
from fhtlr.tabular import FHQAgent, StepSizeSchedule

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS: list[str] = []

GRID_TOL = 3.0
Q_GAP = 5.0
GRID_BUDGET_S = 5 * 60
WIRELESS_BUDGET_S = 15 * 60
ORACLE_TOL = 1e-9
FHQ_TINY_TOL = 1e-2
ROUNDTRIP_TOL = 1e-12
GRAD_REL_TOL = 1e-6
PARAM_RATIO = 0.01


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS.append(line)
    print(line)


def config(name):
    return load_config(CONFIGS / f"{name}.yaml")


@pytest.fixture(scope="module")
def grid_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("grid")
    configs = [config(n) for n in ("gridworld_q", "gridworld_fhq", "gridworld_fhtlr")]
    start = time.perf_counter()
    rows = compare(configs, out)
    return out, {r.agent: r for r in rows}, time.perf_counter() - start


def test_criterion_1_parameter_counts():
    counts = {name: param_count(config(f"gridworld_{name}")) for name in ("q", "fhq", "fhtlr")}
    table_ok = counts == {"q": 100, "fhq": 500, "fhtlr": 152}
    rng = np.random.default_rng(0)
    formula_ok = True
    for _ in range(100):
        state_dims = tuple(int(n) for n in rng.integers(1, 7, size=rng.integers(1, 4)))
        action_dims = tuple(int(n) for n in rng.integers(1, 5, size=rng.integers(1, 3)))
        horizon, rank = int(rng.integers(1, 8)), int(rng.integers(0, 12))
        agent = FHTLRAgent(StateActionSpace(state_dims, action_dims, horizon), rank, rng=rng)
        stored = sum(f.size for f in agent.model.factors)
        formula = (horizon + sum(state_dims) + sum(action_dims)) * rank
        formula_ok &= agent.n_params == stored == formula
    ok = table_ok and formula_ok
    report(1, ok, f"grid-world params {counts}; formula vs stored reals on 100 shapes: {formula_ok}")
    assert ok


def test_criterion_2_gridworld_returns(grid_run):
    _, rows, elapsed = grid_run
    v_start = backward_induction(GridWorld().explicit_dynamics(), 5).v_start
    q, fhq, fhtlr = rows["q"].mean_return, rows["fhq"].mean_return, rows["fhtlr"].mean_return
    ok = (abs(fhq - v_start) <= GRID_TOL and abs(fhtlr - v_start) <= GRID_TOL
          and q <= v_start - Q_GAP and all(r.n_failed == 0 and r.n_seeds == 10 for r in rows.values())
          and elapsed <= GRID_BUDGET_S)
    report(2, ok, f"oracle {v_start:.4f}; fhq {fhq:.2f}, fhtlr {fhtlr:.2f} (need within {GRID_TOL}); "
                  f"q {q:.2f} (need <= {v_start - Q_GAP:.2f}); 10 seeds in {elapsed:.0f}s "
                  f"(budget {GRID_BUDGET_S}s)")
    assert ok


def enumerate_policies(S, A, T):
    for flat in itertools.product(range(A), repeat=S * T):
        yield np.array(flat).reshape(T, S)


def test_criterion_3_oracle_correctness():
    rng = np.random.default_rng(3)
    worst = 0.0
    n_mdps = 0
    for S, A, T in itertools.product((1, 2, 3), (1, 2), (1, 2, 3)):
        for deterministic in (False, True):
            dyn = random_dynamics(rng, S, A, deterministic=deterministic)
            best = max(policy_value(dyn, p) for p in enumerate_policies(S, A, T))
            worst = max(worst, abs(backward_induction(dyn, T).v_start - best))
            n_mdps += 1
    dominance = 0.0
    for _ in range(100):
        S, A, T = int(rng.integers(1, 4)), int(rng.integers(1, 3)), int(rng.integers(1, 4))
        dyn = random_dynamics(rng, S, A)
        gap = policy_q_values(dyn, rng.integers(A, size=(T, S))) - backward_induction(dyn, T).q_star
        dominance = max(dominance, float(gap.max()))
    ok = worst <= ORACLE_TOL and dominance <= ORACLE_TOL
    report(3, ok, f"{n_mdps} enumerable MDPs, max |v* - best enumerated| = {worst:.2e}; "
                  f"max (Q^pi - Q*) over 100 random policies = {dominance:.2e} (tol {ORACLE_TOL})")
    assert ok


def test_criterion_4_fhq_convergence():
    env = ExplicitMdp(tiny_dynamics(), 2)
    q_star = backward_induction(tiny_dynamics(), 2).q_star
    agent = FHQAgent(env.space, StepSizeSchedule("inverse-visit-count", 1.0))
    for ep in range(100_000):
        run_episode(env, agent, 1.0, (0, 0, ep), learner=agent)
    err = float(np.abs(agent.q_table() - q_star).max())
    ok = err <= FHQ_TINY_TOL
    report(4, ok, f"tiny MDP, 1e5 episodes, max-norm error {err:.2e} (tol {FHQ_TINY_TOL})")
    assert ok


def test_criterion_5_parafac_engine():
    rng = np.random.default_rng(5)
    eval_err = rt_err = 0.0
    for dims in [(2, 3, 4), (3, 2, 2, 5), (4, 4), (2, 2, 2, 2, 2)]:
        model = random_model(dims, 3, 1.0, rng)
        dense = reconstruct(model)
        for idx in itertools.product(*[range(n) for n in dims]):
            eval_err = max(eval_err, abs(eval_entry(model, idx) - dense[idx]) / max(1.0, abs(dense[idx])))
        for d in range(len(dims)):
            rt_err = max(rt_err, float(np.abs(unmatricize(matricize(model, d), dims, d) - dense).max()))
    kr_ok = np.array_equal(khatri_rao([np.array([[1, 2], [3, 4]]), np.array([[0, 1], [1, 0]])]),
                           [[0, 2], [1, 0], [0, 4], [3, 0]])
    mat_ok = np.array_equal(matricize(ParafacModel([[[1], [2]], [[1], [1]], [[3]]]), 2), [[3], [3], [6], [6]])

    grad_err = 0.0
    space = StateActionSpace((3, 2), (2, 2), 3)
    for seed in range(5):
        alpha = 1e-3
        model = random_model(space.tensor_dims, 3, 1.0, np.random.default_rng(seed))
        agent = FHTLRAgent(space, 3, StepSizeSchedule("constant", alpha), model=model)
        tr = Transition(1, (2, 1), (0, 1), (0, 0), 0.7, False)
        q_hat = agent.compute_target(tr).q_hat
        idx = agent._index(tr.t, tr.s, tr.a)
        before = agent.model.copy()
        agent.update(tr)

        def loss(m):
            return 0.5 * (q_hat - eval_entry(m, idx)) ** 2

        for d, i in enumerate(idx):
            fd = np.empty(3)
            for k in range(3):
                plus, minus = before.copy(), before.copy()
                plus.factors[d][i, k] += 1e-6
                minus.factors[d][i, k] -= 1e-6
                fd[k] = (loss(plus) - loss(minus)) / 2e-6
            step = agent.model.factors[d][i] - before.factors[d][i]
            grad_err = max(grad_err, float(np.linalg.norm(step + alpha * fd) / np.linalg.norm(alpha * fd)))
    ok = (eval_err <= ROUNDTRIP_TOL and rt_err <= ROUNDTRIP_TOL and kr_ok and mat_ok
          and grad_err <= GRAD_REL_TOL)
    report(5, ok, f"eval vs reconstruct {eval_err:.1e}, mat/unmat round-trip {rt_err:.1e} "
                  f"(tol {ROUNDTRIP_TOL}); hand examples {kr_ok and mat_ok}; "
                  f"update vs finite-difference gradient rel. error {grad_err:.1e} (tol {GRAD_REL_TOL})")
    assert ok


def test_criterion_6_wireless(tmp_path):
    fhq_cfg, fhtlr_cfg = config("wireless_fhq"), config("wireless_fhtlr")
    budget_match = (fhq_cfg.episodes == fhtlr_cfg.episodes and fhq_cfg.seeds == fhtlr_cfg.seeds
                    and fhq_cfg.environment == fhtlr_cfg.environment)
    space = make_env(fhtlr_cfg.environment.id, fhtlr_cfg.environment.params).space
    dense = space.horizon * space.n_states * space.n_actions
    start = time.perf_counter()
    rows = {r.agent: r for r in compare([fhq_cfg, fhtlr_cfg], tmp_path)}
    elapsed = time.perf_counter() - start
    fhq, fhtlr = rows["fhq"], rows["fhtlr"]
    ratio = fhtlr.params / dense
    ok = (budget_match and fhtlr.n_failed == 0 and fhq.n_seeds == fhtlr.n_seeds == 10
          and fhtlr.mean_return >= fhq.mean_return and ratio <= PARAM_RATIO
          and elapsed <= WIRELESS_BUDGET_S)
    report(6, ok, f"fhtlr {fhtlr.mean_return:.3f} +/- {fhtlr.std_return:.3f} vs fhq "
                  f"{fhq.mean_return:.3f} +/- {fhq.std_return:.3f} over {fhtlr.n_seeds} seeds "
                  f"({fhtlr_cfg.episodes} episodes each, {fhtlr.n_failed} diverged); params "
                  f"{fhtlr.params} / {dense} = {ratio:.2%} (need <= {PARAM_RATIO:.0%}); "
                  f"{elapsed:.0f}s (budget {WIRELESS_BUDGET_S}s)")
    assert ok


def test_criterion_7_reproducibility(grid_run, tmp_path):
    first, _, _ = grid_run
    same = True
    for name in ("gridworld_fhq", "gridworld_fhtlr"):
        assert cli.main(["train", "--config", str(CONFIGS / f"{name}.yaml"), "--out", str(tmp_path)]) == 0
        for f in sorted((first / name).iterdir()):
            same &= f.read_bytes() == (tmp_path / name / f.name).read_bytes()
    report(7, same, "repeated train runs of the grid-world fhq and fhtlr configs (10 seeds) "
                    f"produce byte-identical CSVs: {same}")
    assert same


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
