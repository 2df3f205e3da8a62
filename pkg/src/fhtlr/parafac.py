"""Rank-K PARAFAC (CP) tensors stored as a list of factor matrices.

Modes are 0-based. For the Q-tensor the modes are the state dimensions, then
the action dimensions, then time (last).

Unfolding convention: ``matricize(model, d)`` has one row per index of the
remaining modes taken in ascending order, with the first listed mode varying
slowest (C order), and one column per index of mode ``d``. This is exactly
``khatri_rao([F_j for j != d]) @ F_d.T`` with :func:`khatri_rao` below.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DENSE_LIMIT = 10_000_000


class CapacityError(MemoryError):
    """A dense reconstruction would exceed the configured size limit."""


@dataclass
class ParafacModel:
    factors: list[np.ndarray]

    def __post_init__(self):
        self.factors = [np.array(f, dtype=np.float64, ndmin=2) for f in self.factors]
        if not self.factors:
            raise ValueError("a PARAFAC model needs at least one factor")
        ranks = {f.shape[1] for f in self.factors}
        if len(ranks) != 1:
            raise ValueError(f"factors disagree on rank: {sorted(ranks)}")

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def ndim(self) -> int:
        return len(self.factors)

    def copy(self) -> "ParafacModel":
        return ParafacModel([f.copy() for f in self.factors])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(f)) for f in self.factors)


def random_model(dims: Sequence[int], rank: int, scale: float = 0.1,
                 rng: np.random.Generator | None = None, mean: float = 0.0) -> ParafacModel:
    """Factors with i.i.d. N(mean, scale^2) entries."""
    rng = np.random.default_rng() if rng is None else rng
    return ParafacModel([rng.normal(mean, scale, size=(n, rank)) for n in dims])


def _check_index(model: ParafacModel, idx: Sequence[int]) -> None:
    if len(idx) != model.ndim:
        raise IndexError(f"index has {len(idx)} coordinates, model has {model.ndim} modes")
    for d, (i, n) in enumerate(zip(idx, model.dims)):
        if not 0 <= i < n:
            raise IndexError(f"coordinate {i} out of range for mode {d} of size {n}")


def eval_entry(model: ParafacModel, idx: Sequence[int]) -> float:
    """Entry ``sum_k prod_d F_d[idx_d, k]``."""
    _check_index(model, idx)
    prod = np.ones(model.rank)
    for f, i in zip(model.factors, idx):
        prod *= f[i]
    return float(prod.sum())


def khatri_rao(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Column-wise Kronecker product; the first matrix's row index varies slowest."""
    if not matrices:
        raise ValueError("khatri_rao needs at least one matrix")
    mats = [np.asarray(m, dtype=np.float64) for m in matrices]
    k = mats[0].shape[1]
    for m in mats:
        if m.ndim != 2 or m.shape[1] != k:
            raise ValueError(f"all matrices need {k} columns, got shape {m.shape}")
    out = mats[0]
    for m in mats[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, k)
    return out


def matricize(model: ParafacModel, d: int) -> np.ndarray:
    """Mode-``d`` unfolding, shape (prod of other dims, dims[d])."""
    if not 0 <= d < model.ndim:
        raise IndexError(f"mode {d} out of range for {model.ndim} modes")
    others = [f for j, f in enumerate(model.factors) if j != d]
    if not others:
        return model.factors[d].sum(axis=1)[None, :]
    return khatri_rao(others) @ model.factors[d].T


def unfold(tensor: np.ndarray, d: int) -> np.ndarray:
    """Mode-``d`` unfolding of a dense tensor under the module's convention."""
    tensor = np.asarray(tensor)
    return np.moveaxis(tensor, d, -1).reshape(-1, tensor.shape[d])


def unmatricize(matrix: np.ndarray, dims: Sequence[int], d: int) -> np.ndarray:
    """Inverse of the mode-``d`` unfolding: rebuild the dense tensor of shape ``dims``."""
    dims = tuple(dims)
    if not 0 <= d < len(dims):
        raise IndexError(f"mode {d} out of range for {len(dims)} modes")
    other = dims[:d] + dims[d + 1:]
    matrix = np.asarray(matrix)
    if matrix.shape != (math.prod(other), dims[d]):
        raise ValueError(f"matrix shape {matrix.shape} does not unfold {dims} along mode {d}")
    return np.moveaxis(matrix.reshape(other + (dims[d],)), -1, d)


def reconstruct(model: ParafacModel, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense tensor of all entries; refuses above ``limit`` entries."""
    size = math.prod(model.dims)
    if size > limit:
        raise CapacityError(f"dense tensor of shape {model.dims} has {size} entries (limit {limit})")
    out = model.factors[0]
    for f in model.factors[1:]:
        out = out[..., None, :] * f
    return out.sum(axis=-1)


def count_params(model: ParafacModel) -> int:
    """(sum of mode sizes) * K; for the Q-tensor that is (T + sum_d |D_d|) * K."""
    return sum(model.dims) * model.rank


def save_checkpoint(model: ParafacModel, directory, seed: int | None = None) -> Path:
    """Write one CSV per factor plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    header = [f"k{k}" for k in range(model.rank)]
    files = []
    for d, f in enumerate(model.factors):
        name = f"factor_{d}.csv"
        with open(directory / name, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([format(x, ".17g") for x in row] for row in f)
        files.append(name)
    manifest = {"dims": list(model.dims), "rank": model.rank, "seed": seed, "factors": files}
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return directory


def load_checkpoint(directory) -> tuple[ParafacModel, int | None]:
    directory = Path(directory)
    with open(directory / "manifest.json") as fh:
        manifest = json.load(fh)
    rank = manifest["rank"]
    factors = []
    for name, n in zip(manifest["factors"], manifest["dims"]):
        with open(directory / name, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != [f"k{k}" for k in range(rank)]:
            raise ValueError(f"{name}: unexpected header {rows[0]}")
        f = np.array([[float(x) for x in row] for row in rows[1:]], dtype=np.float64).reshape(-1, rank)
        if f.shape[0] != n:
            raise ValueError(f"{name}: expected {n} rows, found {f.shape[0]}")
        factors.append(f)
    return ParafacModel(factors), manifest.get("seed")
