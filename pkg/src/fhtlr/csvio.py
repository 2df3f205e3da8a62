"""CSV formats: per-seed run logs, aggregates, comparisons, and dense tensors."""

from __future__ import annotations

import csv
import itertools
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

RUN_HEADER = ["seed", "episode", "mean_return", "params", "elapsed_ms"]
AGGREGATE_HEADER = ["episode", "mean_return", "std_return", "params", "n_seeds", "n_failed"]
COMPARE_HEADER = ["environment", "agent", "mean_return", "std_return", "params", "n_seeds", "n_failed"]


def fmt(x) -> str:
    """Integers verbatim, floats with 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    return path


def read_rows(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_tensor_csv(path, tensor: np.ndarray, axes: Sequence[str],
                     one_based: Sequence[str] = ()) -> Path:
    """One row per entry in C order: the index along each axis, then ``value``.

    Axes named in ``one_based`` are written starting at 1 (used for time).
    """
    tensor = np.asarray(tensor)
    if len(axes) != tensor.ndim:
        raise ValueError(f"{len(axes)} axis names for a {tensor.ndim}-d tensor")
    offsets = [1 if name in one_based else 0 for name in axes]
    rows = (
        [i + o for i, o in zip(idx, offsets)] + [tensor[idx]]
        for idx in itertools.product(*[range(n) for n in tensor.shape])
    )
    return write_rows(path, list(axes) + ["value"], rows)


def read_tensor_csv(path, one_based: Sequence[str] = ()) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    axes = header[:-1]
    data = np.array(rows).reshape(-1, len(header))
    idx = data[:, :-1].astype(np.int64)
    for k, name in enumerate(axes):
        if name in one_based:
            idx[:, k] -= 1
    shape = tuple(idx.max(axis=0) + 1) if len(idx) else ()
    out = np.zeros(shape)
    out[tuple(idx.T)] = data[:, -1]
    return out
