"""FHTLR-learning: online stochastic block-coordinate updates of a PARAFAC Q-tensor.

Each sampled transition touches one row per factor: the row selected by the
transition's coordinate along that mode. Every row moves along the product of
the other modes' rows, scaled by the step size and the residual between the
target and the current entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import StateActionSpace, Transition, time_index
from .parafac import DENSE_LIMIT, ParafacModel, khatri_rao, random_model, reconstruct
from .tabular import StepSizeSchedule

JACOBI = "jacobi"
GAUSS_SEIDEL = "gauss-seidel"


class DivergenceError(FloatingPointError):
    """Training produced a non-finite or out-of-bound value."""


@dataclass(frozen=True)
class TargetEstimate:
    q_hat: float
    bootstrap: bool


def _others_product(rows: np.ndarray) -> np.ndarray:
    """Row d of the result is the elementwise product of all rows except d."""
    out = np.empty_like(rows)
    acc = np.ones(rows.shape[1])
    for d in range(len(rows)):
        out[d] = acc
        acc = acc * rows[d]
    acc = np.ones(rows.shape[1])
    for d in range(len(rows) - 1, -1, -1):
        out[d] *= acc
        acc = acc * rows[d]
    return out


class FHTLRAgent:
    """PARAFAC value model over (state dims, action dims, time).

    Args:
        space: state/action cardinalities and horizon.
        rank: number of rank-one components K.
        alpha: step-size schedule; visit counts are kept per (t, s, a) cell.
        update_mode: ``"jacobi"`` reads one pre-update snapshot for every mode,
            ``"gauss-seidel"`` lets later modes see earlier modes' new rows.
        init_scale: standard deviation of the Gaussian factor initialization.
        init_offset: mean of that Gaussian. A positive offset keeps the
            products of many modes from cancelling at the start.
        divergence_bound: abort if an evaluated entry exceeds this magnitude.
        rng: generator for the factor initialization.
    """

    def __init__(self, space: StateActionSpace, rank: int,
                 alpha: StepSizeSchedule | None = None, update_mode: str = JACOBI,
                 init_scale: float = 0.1, divergence_bound: float = 1e6,
                 rng: np.random.Generator | None = None, model: ParafacModel | None = None,
                 init_offset: float = 0.0):
        if update_mode not in (JACOBI, GAUSS_SEIDEL):
            raise ValueError(f"unknown update mode {update_mode!r}")
        self.space = space
        self.alpha = alpha if alpha is not None else StepSizeSchedule("constant", 0.005)
        self.update_mode = update_mode
        self.divergence_bound = divergence_bound
        if model is None:
            model = random_model(space.tensor_dims, rank, init_scale, rng, init_offset)
        elif model.dims != space.tensor_dims:
            raise ValueError(f"model dims {model.dims} do not match space {space.tensor_dims}")
        self.model = model
        self.n_state_modes = len(space.state_dims)
        self.visits: dict[int, int] = {}
        self.n_updates = 0

    @property
    def n_params(self) -> int:
        return sum(self.model.dims) * self.model.rank

    def _index(self, t: int, s, a) -> tuple[int, ...]:
        return tuple(s) + tuple(a) + (time_index(t, self.space.horizon),)

    def action_values(self, t: int, s) -> np.ndarray:
        """Model values at (s, ., t) for every joint action, in flat action order."""
        factors = self.model.factors
        ns = self.n_state_modes
        if len(s) != ns:
            raise IndexError(f"state has {len(s)} coordinates, expected {ns}")
        head = factors[-1][time_index(t, self.space.horizon)].copy()
        for f, i in zip(factors[:ns], s):
            head *= f[i]
        return khatri_rao(factors[ns:-1]) @ head

    def greedy_action(self, t: int, s) -> tuple[int, ...]:
        return self.space.action_at(int(np.argmax(self.action_values(t, s))))

    def q_value(self, t: int, s, a) -> float:
        idx = self._index(t, s, a)
        prod = np.ones(self.model.rank)
        for f, i in zip(self.model.factors, idx):
            prod *= f[i]
        return float(prod.sum())

    def compute_target(self, tr: Transition) -> TargetEstimate:
        if tr.terminal:
            return TargetEstimate(q_hat=float(tr.r), bootstrap=False)
        best = float(self.action_values(tr.t + 1, tr.s_next).max())
        return TargetEstimate(q_hat=tr.r + best, bootstrap=True)

    def _guard(self, value: float, what: str, tr: Transition) -> None:
        if not np.isfinite(value) or abs(value) > self.divergence_bound:
            raise DivergenceError(
                f"{what} = {value!r} at update #{self.n_updates} "
                f"(t={tr.t}, s={tr.s}, a={tr.a}, r={tr.r}); bound {self.divergence_bound:g}")

    def update(self, tr: Transition) -> None:
        target = self.compute_target(tr)
        self._guard(target.q_hat, "target", tr)
        idx = self._index(tr.t, tr.s, tr.a)

        cell = self.space.action_index(tr.a) + self.space.n_actions * (
            self.space.state_index(tr.s) + self.space.n_states * (tr.t - 1))
        visits = self.visits.get(cell, 0)
        step = self.alpha(visits, self.n_updates)
        self.visits[cell] = visits + 1

        factors = self.model.factors
        if self.update_mode == JACOBI:
            rows = np.array([f[i] for f, i in zip(factors, idx)])
            estimate = float(np.prod(rows, axis=0).sum())
            self._guard(estimate, "estimate", tr)
            new_rows = rows + step * (target.q_hat - estimate) * _others_product(rows)
            if not np.all(np.isfinite(new_rows)):
                raise DivergenceError(f"non-finite factor row at update #{self.n_updates}")
            for f, i, row in zip(factors, idx, new_rows):
                f[i] = row
        else:
            for d, (f, i) in enumerate(zip(factors, idx)):
                others = np.ones(self.model.rank)
                for j, (g, m) in enumerate(zip(factors, idx)):
                    if j != d:
                        others *= g[m]
                estimate = float(others @ f[i])
                self._guard(estimate, "estimate", tr)
                f[i] = f[i] + step * (target.q_hat - estimate) * others
                if not np.all(np.isfinite(f[i])):
                    raise DivergenceError(f"non-finite factor row at update #{self.n_updates}")
        self.n_updates += 1

    def q_table(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        """Dense (T, S, A) view of the model, for oracle comparisons."""
        dense = reconstruct(self.model, limit)
        S, A, T = self.space.n_states, self.space.n_actions, self.space.horizon
        return np.moveaxis(dense.reshape(S, A, T), -1, 0)
