"""Multilevel random sampling schemes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherence import level_bounds

__all__ = ["MultilevelScheme", "draw_scheme", "uniform_scheme"]


@dataclass(frozen=True)
class MultilevelScheme:
    """``(N, m)`` scheme: ``m_k`` indices drawn uniformly from band ``(N_{k-1}, N_k]``.

    ``omega`` holds sorted 1-based indices.
    """

    levels: tuple[int, ...]
    counts: tuple[int, ...]
    omega: np.ndarray
    seed: int | None

    @property
    def widths(self) -> np.ndarray:
        return np.diff(np.concatenate([[0], self.levels]))

    @property
    def K(self) -> float:
        """``max_k (N_k - N_{k-1}) / m_k`` (undersampling ratio)."""
        m = np.asarray(self.counts, dtype=float)
        w = self.widths
        ratios = np.where(m > 0, w / np.maximum(m, 1), np.inf)
        return float(np.max(ratios))

    def __len__(self) -> int:
        return self.omega.size


def draw_scheme(levels, counts, seed: int | None = None) -> MultilevelScheme:
    levels = tuple(int(v) for v in levels)
    counts = tuple(int(v) for v in counts)
    if len(levels) != len(counts):
        raise ValueError("levels and counts must have equal length")
    bands = level_bounds(levels)
    rng = np.random.default_rng(seed)
    parts = []
    for (a, b), m in zip(bands, counts):
        if m < 0 or m > b - a:
            raise ValueError(f"count {m} does not fit in level ({a}, {b}]")
        if m == b - a:
            parts.append(np.arange(a + 1, b + 1))
        else:
            parts.append(np.sort(rng.choice(b - a, size=m, replace=False)) + a + 1)
    omega = np.concatenate(parts).astype(np.int64)
    omega.setflags(write=False)
    return MultilevelScheme(levels, counts, omega, seed)


def uniform_scheme(N: int, m: int, seed: int | None = None) -> MultilevelScheme:
    """One-level scheme: ``m`` indices uniformly from ``1..N``."""
    return draw_scheme([N], [m], seed)
