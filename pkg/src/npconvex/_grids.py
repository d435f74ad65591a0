"""Uniform grids on the flat simplex, in lexicographic order.

Grid points are integer compositions of K divided by K; enumeration is
lexicographic in (lambda_1, lambda_2, ...), which is what the oracle
tie-break relies on.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .errors import DomainError


def grid_count(m: int, k: int) -> int:
    if m == 1:
        return 1
    if m == 2:
        return k + 1
    if m == 3:
        return (k + 1) * (k + 2) // 2
    if m == 4:
        return (k + 1) * (k + 2) * (k + 3) // 6
    raise DomainError(f"simplex grids supported for m <= 4, got {m}")


def grid_points(m: int, k: int) -> np.ndarray:
    """All grid points as a (P, m) array, lexicographically ordered."""
    if k < 1:
        raise DomainError(f"grid needs k >= 1, got {k}")
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        i = np.arange(k + 1)
        return np.column_stack([i, k - i]) / k
    if m == 3:
        rows = []
        for i in range(k + 1):
            j = np.arange(k - i + 1)
            block = np.column_stack([np.full(j.size, i), j, k - i - j])
            rows.append(block)
        return np.vstack(rows) / k
    if m == 4:
        rows = []
        for i in range(k + 1):
            for j in range(k - i + 1):
                t = np.arange(k - i - j + 1)
                block = np.column_stack(
                    [np.full(t.size, i), np.full(t.size, j), t, k - i - j - t])
                rows.append(block)
        return np.vstack(rows) / k
    raise DomainError(f"simplex grids supported for m <= 4, got {m}")


def iter_grid_chunks(m: int, k: int, chunk: int = 200_000) -> Iterator[np.ndarray]:
    """Yield grid points in lexicographic order without materializing the
    whole grid; memory stays near `chunk` rows (a yield may run over by
    one leading-coordinate block)."""
    if k < 1:
        raise DomainError(f"grid needs k >= 1, got {k}")
    if m in (1, 2):
        pts = grid_points(m, k)
        for lo in range(0, pts.shape[0], chunk):
            yield pts[lo: lo + chunk]
        return
    if m == 3:
        buf, size = [], 0
        for i in range(k + 1):
            j = np.arange(k - i + 1)
            buf.append(np.column_stack(
                [np.full(j.size, float(i)), j, k - i - j]))
            size += buf[-1].shape[0]
            if size >= chunk:
                yield np.vstack(buf) / k
                buf, size = [], 0
        if buf:
            yield np.vstack(buf) / k
        return
    if m == 4:
        buf, size = [], 0
        for i in range(k + 1):
            for j in range(k - i + 1):
                t = np.arange(k - i - j + 1)
                buf.append(np.column_stack(
                    [np.full(t.size, float(i)), np.full(t.size, float(j)),
                     t, k - i - j - t]))
                size += buf[-1].shape[0]
                if size >= chunk:
                    yield np.vstack(buf) / k
                    buf, size = [], 0
        if buf:
            yield np.vstack(buf) / k
        return
    raise DomainError(f"simplex grids supported for m <= 4, got {m}")
