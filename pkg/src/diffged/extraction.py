"""Node mappings from real-valued matching matrices."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment


def _check(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] > m.shape[1]:
        raise ValueError(f"need a |V| x |V'| matrix with |V| <= |V'|, got shape {m.shape}")
    return m


def greedy_extract(m) -> tuple[int, ...]:
    """Repeatedly take the largest remaining entry and retire its row and column.

    Ties go to the smallest row, then the smallest column (row-major argmax).
    """
    w = _check(m).copy()
    rows = w.shape[0]
    f = [-1] * rows
    for _ in range(rows):
        flat = int(np.argmax(w))
        v, vp = divmod(flat, w.shape[1])
        f[v] = vp
        w[v, :] = -np.inf
        w[:, vp] = -np.inf
    return tuple(f)


def hungarian_extract(m) -> tuple[int, ...]:
    """Injective mapping of maximum total weight."""
    w = _check(m)
    rows, cols = linear_sum_assignment(w, maximize=True)
    f = [0] * w.shape[0]
    for r, c in zip(rows, cols):
        f[int(r)] = int(c)
    return tuple(f)


EXTRACTORS: dict[str, Callable] = {"greedy": greedy_extract, "hungarian": hungarian_extract}


def mapping_weight(m, f: Sequence[int]) -> float:
    m = np.asarray(m, dtype=np.float64)
    return float(m[np.arange(len(f)), list(f)].sum())


def parallel_extract(matrices: Sequence, method: str = "greedy", workers: int | None = None) -> list[tuple[int, ...]]:
    """One mapping per matrix, returned in input order."""
    if method not in EXTRACTORS:
        raise ValueError(f"unknown extraction method {method!r}; choose from {sorted(EXTRACTORS)}")
    fn = EXTRACTORS[method]
    if workers is None or workers <= 1 or len(matrices) <= 1:
        return [fn(m) for m in matrices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, matrices))
