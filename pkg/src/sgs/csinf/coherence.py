"""Coherence, asymptotic incoherence and local coherences of cross-Gramians."""

from __future__ import annotations

import numpy as np

from ..basis import FunctionSystem
from ..crossgram import SectionMatrix, assemble_section

__all__ = ["coherence", "tail_coherence", "local_coherence", "local_coherence_matrix", "level_bounds"]


def _dense(A) -> np.ndarray:
    return A.entries if isinstance(A, SectionMatrix) else np.asarray(A)


def coherence(A) -> float:
    """``max |a_ij|^2`` over the given block."""
    M = _dense(A)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(M) ** 2))


def tail_coherence(
    samp: FunctionSystem, recon: FunctionSystem, N: int, probe_depth: int = 4, method: str = "auto"
) -> tuple[float, float]:
    """Window maxima of ``mu(P_N^perp A)`` and ``mu(A P_N^perp)``.

    Rows (resp. columns) ``N+1 .. (1 + probe_depth) N`` are scanned against
    columns (resp. rows) ``1 .. (1 + probe_depth) N``. The true suprema run over
    infinitely many entries, so both values are lower bounds.
    """
    W = (1 + int(probe_depth)) * int(N)
    A = assemble_section(samp, recon, W, W, method=method).entries
    mu_rows = float(np.max(np.abs(A[N:, :]) ** 2))
    mu_cols = float(np.max(np.abs(A[:, N:]) ** 2))
    return mu_rows, mu_cols


def level_bounds(levels) -> list[tuple[int, int]]:
    """0-based half-open slices ``[L_{k-1}, L_k)`` of the bands."""
    L = [0] + [int(v) for v in levels]
    if any(b <= a for a, b in zip(L[:-1], L[1:])):
        raise ValueError(f"levels must be strictly increasing: {levels!r}")
    return list(zip(L[:-1], L[1:]))


def local_coherence(A, N_levels, M_levels, k: int, l) -> float:
    """``sqrt(mu(P_k A Q_l) * mu(P_k A))`` with 1-based level indices.

    ``l = 'inf'`` uses every available column beyond ``M_{r-1}`` (a window of
    the infinite tail). ``A`` must cover rows ``1..N_r``; its columns limit
    the row-band coherence ``mu(P_k A)``, which is therefore a window value too.
    """
    M = _dense(A)
    rows = level_bounds(N_levels)
    cols = level_bounds(M_levels)
    r0, r1 = rows[k - 1]
    if M.shape[0] < r1:
        raise ValueError("section does not cover the requested row band")
    band = M[r0:r1]
    if l == "inf" or l == np.inf:
        c0, c1 = (cols[-2][1] if len(cols) > 1 else 0), M.shape[1]
    else:
        c0, c1 = cols[int(l) - 1]
    if M.shape[1] < c1:
        raise ValueError("section does not cover the requested column band")
    return float(np.sqrt(coherence(band[:, c0:c1]) * coherence(band)))


def local_coherence_matrix(A, N_levels, M_levels) -> np.ndarray:
    r = len(N_levels)
    if len(M_levels) != r:
        raise ValueError("sampling and sparsity levels must have the same count")
    return np.array([[local_coherence(A, N_levels, M_levels, k, l) for l in range(1, r + 1)] for k in range(1, r + 1)])
