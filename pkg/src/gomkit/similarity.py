"""Dynamic time warping and reference-repetition selection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, EmptyError


@dataclass(frozen=True)
class DtwResult:
    cost: float
    path: list


def _as_frames(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionError("DTW inputs must be 1-D series or T x D matrices")
    if a.shape[0] == 0:
        raise DimensionError("DTW inputs must be nonempty")
    return a


def local_costs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance between every frame of ``a`` and every frame of ``b``."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _backtrack(acc: np.ndarray) -> list:
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            # prefer the diagonal on ties
            cands = ((acc[i - 1, j - 1], i - 1, j - 1),
                     (acc[i - 1, j], i - 1, j),
                     (acc[i, j - 1], i, j - 1))
            _, i, j = min(cands, key=lambda c: c[0])
        path.append((i, j))
    path.reverse()
    return path


def dtw(a, b) -> DtwResult:
    """Unconstrained DTW with Euclidean local cost.

    Steps are (1,0), (0,1) and (1,1); the returned cost is the sum of local
    costs along the optimal path.
    """
    a, b = _as_frames(a), _as_frames(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"feature dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    acc = kernels.dtw_accumulate(np.ascontiguousarray(local_costs(a, b)))
    return DtwResult(float(acc[-1, -1]), _backtrack(acc))


def dtw_cost(a, b) -> float:
    a, b = _as_frames(a), _as_frames(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"feature dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return float(kernels.dtw_accumulate(np.ascontiguousarray(local_costs(a, b)))[-1, -1])


def pairwise_dtw(repetitions) -> np.ndarray:
    reps = [_as_frames(r) for r in repetitions]
    dims = {r.shape[1] for r in reps}
    if len(dims) > 1:
        raise DimensionError(f"repetitions have differing descriptor counts {sorted(dims)}")
    n = len(reps)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = dtw_cost(reps[i], reps[j])
    return out


def select_reference(repetitions) -> int:
    """Index of the repetition with the smallest total DTW cost to all others.

    Ties go to the lowest index.
    """
    reps = list(repetitions)
    if not reps:
        raise EmptyError("no repetitions to choose a reference from")
    totals = pairwise_dtw(reps).sum(axis=1)
    return int(np.argmin(totals))
