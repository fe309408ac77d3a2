"""Sparsity in levels: effective sparsity, best (s, M)-term error, relative sparsity."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..basis import CoeffVec
from ..crossgram import SectionMatrix
from .coherence import level_bounds

__all__ = [
    "SparsityLevels",
    "effective_sparsity",
    "sigma_s_m",
    "relative_sparsity",
    "flip_coefficients",
    "random_sparse_in_levels",
    "MAX_SUPPORTS",
]

MAX_SUPPORTS = 10**6


@dataclass(frozen=True)
class SparsityLevels:
    """Level boundaries ``M_1 < ... < M_r`` and sparsities ``s_k <= M_k - M_{k-1}``."""

    levels: tuple[int, ...]
    s: tuple[int, ...]

    def __post_init__(self):
        levels = tuple(int(v) for v in self.levels)
        s = tuple(int(v) for v in self.s)
        if len(levels) != len(s):
            raise ValueError("levels and sparsities must have equal length")
        for (a, b), sk in zip(level_bounds(levels), s):
            if sk < 0 or sk > b - a:
                raise ValueError(f"sparsity {sk} does not fit in level ({a}, {b}]")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "s", s)

    @property
    def total(self) -> int:
        return sum(self.s)

    @property
    def bands(self) -> list[tuple[int, int]]:
        return level_bounds(self.levels)


def _values(beta) -> np.ndarray:
    return np.asarray(beta.values if isinstance(beta, CoeffVec) else beta)


def _desc_order(mag: np.ndarray) -> np.ndarray:
    # stable sort on -|beta| keeps the lower index first among ties
    return np.argsort(-mag, kind="stable")


def effective_sparsity(beta, levels, eps: float) -> np.ndarray:
    """Per-level minimal head counts capturing a fraction ``eps`` of the level norm."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    b = _values(beta)
    bands = level_bounds(levels)
    if b.size < bands[-1][1]:
        raise ValueError("coefficient vector shorter than the last level")
    out = np.zeros(len(bands), dtype=int)
    for k, (lo, hi) in enumerate(bands):
        mag = np.abs(b[lo:hi])
        total = float(np.sum(mag**2))
        if total == 0.0:
            continue
        head = np.cumsum(mag[_desc_order(mag)] ** 2)
        target = eps**2 * total * (1 - 1e-12)
        out[k] = int(np.searchsorted(head, target, side="left")) + 1
    return out


def sigma_s_m(beta, sl: SparsityLevels) -> float:
    """``l1`` distance from ``beta`` to the nearest ``(s, M)``-sparse vector.

    Entries beyond ``M_r`` are not allowed in the sparse approximant.
    """
    b = _values(beta)
    err = 0.0
    for (lo, hi), sk in zip(sl.bands, sl.s):
        mag = np.sort(np.abs(b[lo:hi]))[::-1]
        err += float(np.sum(mag[sk:]))
    err += float(np.sum(np.abs(b[sl.levels[-1]:])))
    return err


def flip_coefficients(beta, bandwidth: int):
    """Reverse entries ``1..bandwidth``; the rest is unchanged."""
    b = _values(beta)
    if bandwidth > b.size:
        raise ValueError("bandwidth exceeds the coefficient vector")
    out = b.copy()
    out[:bandwidth] = b[:bandwidth][::-1]
    if isinstance(beta, CoeffVec):
        return CoeffVec(out, beta.system, beta.offset)
    return out


def random_sparse_in_levels(sl: SparsityLevels, rng: np.random.Generator, complex_values: bool = False, length=None):
    """Random ``(s, M)``-sparse vector with unit-order entries bounded away from zero."""
    n = sl.levels[-1] if length is None else int(length)
    out = np.zeros(n, dtype=complex if complex_values else float)
    for (lo, hi), sk in zip(sl.bands, sl.s):
        idx = lo + rng.choice(hi - lo, size=sk, replace=False)
        mag = rng.uniform(0.5, 1.5, size=sk)
        if complex_values:
            out[idx] = mag * np.exp(2j * np.pi * rng.random(sk))
        else:
            out[idx] = mag * rng.choice([-1.0, 1.0], size=sk)
    return out


# ---------------------------------------------------------------------------
# relative sparsity


def _support_count(sl: SparsityLevels) -> int:
    return math.prod(math.comb(hi - lo, sk) for (lo, hi), sk in zip(sl.bands, sl.s))


def _max_real(G: np.ndarray) -> float:
    """``max eta^T G eta`` over ``eta in {-1, 1}^n`` (first sign fixed)."""
    n = G.shape[0]
    if n == 0:
        return 0.0
    if n == 1:
        return float(G[0, 0].real)
    signs = np.array(list(itertools.product([1.0, -1.0], repeat=n - 1))).reshape(-1, n - 1)
    signs = np.hstack([np.ones((signs.shape[0], 1)), signs])
    vals = np.einsum("ij,jk,ik->i", signs, G.real, signs)
    return float(vals.max())


def _ascent(G: np.ndarray, eta: np.ndarray, iters: int = 200) -> tuple[float, np.ndarray]:
    """Monotone ascent ``eta <- exp(i arg(G eta))`` for ``max eta^* G eta`` with ``|eta_i| = 1``."""
    val = float(np.real(np.vdot(eta, G @ eta)))
    for _ in range(iters):
        g = G @ eta
        new = np.where(np.abs(g) > 0, g / np.where(np.abs(g) > 0, np.abs(g), 1.0), eta)
        nv = float(np.real(np.vdot(new, G @ new)))
        if nv <= val * (1 + 1e-14):
            return max(val, nv), new
        eta, val = new, nv
    return val, eta


def _max_complex(G: np.ndarray, grid: int = 12) -> float:
    """Unimodular maximum of a Hermitian form: phase grid (small n) plus ascent."""
    n = G.shape[0]
    if n == 0:
        return 0.0
    best = _max_real(G) if n <= 16 else 0.0
    starts = []
    if n <= 6 and grid ** (n - 1) <= 250_000:
        phases = np.exp(2j * np.pi * np.arange(grid) / grid)
        combos = np.array(list(itertools.product(phases, repeat=n - 1))).reshape(-1, n - 1)
        etas = np.hstack([np.ones((combos.shape[0], 1)), combos])
        vals = np.real(np.einsum("ij,jk,ik->i", etas.conj(), G, etas))
        order = np.argsort(vals)[::-1][:8]
        best = max(best, float(vals[order[0]]))
        starts.extend(etas[order])
    w, V = np.linalg.eigh(G)
    top = V[:, -1]
    starts.append(np.where(np.abs(top) > 0, top / np.maximum(np.abs(top), 1e-300), 1.0))
    rng = np.random.default_rng(0)
    for _ in range(8):
        starts.append(np.exp(2j * np.pi * rng.random(n)))
    for eta in starts:
        best = max(best, _ascent(G, np.asarray(eta, dtype=complex))[0])
    return best


def relative_sparsity(A, N_levels, sl: SparsityLevels, k: int, mode: str = "exact") -> float:
    """``S_k = max ||P_k A eta||^2`` over ``||eta||_inf <= 1`` with ``s_l`` entries per level.

    Parameters
    ----------
    A : SectionMatrix or ndarray
        Section covering rows ``1..N_r`` and columns ``1..M_r``.
    N_levels : sequence of int
        Sampling levels; ``k`` (1-based) selects the band.
    sl : SparsityLevels
        Column levels and per-level sparsities.
    mode : {'exact', 'bound'}
        ``exact`` enumerates supports; the inner maximum over unimodular
        vectors is exact for real matrices and found by multi-start ascent for
        complex ones. ``bound`` returns ``min(s, (sum of the s_l largest
        column norms per level)^2)``; the cap ``s`` assumes ``A`` is an
        isometry, as every cross-Gramian of orthonormal systems is.
    """
    M = A.entries if isinstance(A, SectionMatrix) else np.asarray(A)
    rows = level_bounds(N_levels)
    r0, r1 = rows[k - 1]
    if M.shape[0] < r1 or M.shape[1] < sl.levels[-1]:
        raise ValueError("section too small for the requested levels")
    B = M[r0:r1, : sl.levels[-1]]
    if mode == "bound":
        norms = np.linalg.norm(B, axis=0)
        acc = 0.0
        for (lo, hi), sk in zip(sl.bands, sl.s):
            acc += float(np.sum(np.sort(norms[lo:hi])[::-1][:sk]))
        return float(min(sl.total, acc**2))
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    count = _support_count(sl)
    if count > MAX_SUPPORTS:
        raise ValueError(f"{count} support patterns exceed the exact-mode limit {MAX_SUPPORTS}")
    is_real = np.isrealobj(B) or np.allclose(np.imag(B), 0.0)
    if is_real:
        B = np.real(B)
    per_level = [
        list(itertools.combinations(range(lo, hi), sk)) for (lo, hi), sk in zip(sl.bands, sl.s)
    ]
    gram = B.conj().T @ B
    best = 0.0
    for choice in itertools.product(*per_level):
        S = np.fromiter(itertools.chain.from_iterable(choice), dtype=np.int64)
        G = gram[np.ix_(S, S)]
        val = _max_real(G) if is_real else _max_complex(G)
        best = max(best, val)
    return float(best)
