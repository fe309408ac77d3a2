"""Sufficient-condition evaluator for multilevel recovery and the error-bound shape.

The ``≳`` constants of the recovery theorem are unknown; every check uses a
configurable ``constant`` (default 1) and reports ratios, so a pass means
"consistent with the theorem at that constant" and nothing stronger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LevelReport",
    "TheoremReport",
    "theorem_conditions",
    "block_diagonal_samples",
    "error_bound_terms",
    "recovery_error_bound",
]


@dataclass(frozen=True)
class LevelReport:
    k: int
    family1: float
    family2: float
    passes: bool
    implied_m: int
    full: bool


@dataclass(frozen=True)
class TheoremReport:
    levels: list[LevelReport] = field(default_factory=list)
    K: float = 1.0
    constant: float = 1.0

    @property
    def all_pass(self) -> bool:
        return all(lv.passes for lv in self.levels)

    @property
    def implied_m(self) -> list[int]:
        return [lv.implied_m for lv in self.levels]


def _log_factor(epsilon: float) -> float:
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return math.log(1.0 / epsilon) + 1.0


def _knapsack(c: np.ndarray, caps: np.ndarray, budget: float) -> float:
    """``max c . t`` over ``0 <= t <= caps``, ``sum t <= budget`` (fractional, greedy)."""
    val, left = 0.0, float(budget)
    for i in np.argsort(-c, kind="stable"):
        if c[i] <= 0 or left <= 0:
            break
        take = min(float(caps[i]), left)
        val += c[i] * take
        left -= take
    return val


def theorem_conditions(N, m, M, s, mu, S, epsilon: float, constant: float = 1.0) -> TheoremReport:
    """Per-level evaluation of both sufficient-condition families.

    Parameters
    ----------
    N, m : sequences of int
        Sampling levels and per-level sample counts.
    M, s : sequences of int
        Sparsity levels and per-level sparsities.
    mu : array_like, shape (r, r)
        Local coherences ``mu(k, l)``.
    S : sequence of float
        Relative sparsities ``S_k``.
    epsilon : float
        Failure probability parameter.
    constant : float
        Value used for the unspecified ``≳`` constants.

    Notes
    -----
    Family one at level ``k`` is
    ``C (w_k / m_k) (log(1/eps) + 1) (sum_l mu(k,l) s_l) log N_r <= 1``.
    Family two requires, for every ``l``, that
    ``C sum_k (w_k / mhat_k - 1) mu(k,l) s~_k <= 1`` for all ``s~`` with
    ``sum s~ <= s`` and ``s~_k <= S_k``, where
    ``mhat_k = m_k / (C (log(1/eps) + 1) log N_r)``. The worst ``s~`` is a
    fractional knapsack. A fully sampled level passes both families.
    """
    N = np.asarray(N, dtype=float)
    m = np.asarray(m, dtype=float)
    s = np.asarray(s, dtype=float)
    S = np.asarray(S, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = N.size
    if not (m.size == r and s.size == r and S.size == r and mu.shape == (r, r) and len(M) == r):
        raise ValueError("all level arrays must have the same length r")
    w = np.diff(np.concatenate([[0.0], N]))
    full = m >= w
    lf = _log_factor(epsilon)
    logN = max(math.log(N[-1]), 1.0)
    stot = float(s.sum())
    scale = constant * lf * logN
    mhat = np.where(m > 0, m / scale, 0.0)
    with np.errstate(divide="ignore"):
        gain = np.where(full, 0.0, np.where(mhat > 0, w / mhat - 1.0, np.inf))
    gain = np.maximum(gain, 0.0)
    fam2 = np.zeros(r)
    for l in range(r):
        c = gain * mu[:, l]
        c = np.where(np.isnan(c), 0.0, c)
        fam2_l = constant * _knapsack(c, S, stot)
        fam2 = np.maximum(fam2, np.where(c > 0, fam2_l, 0.0))
    reports = []
    for k in range(r):
        demand = float(mu[k] @ s)
        if full[k]:
            f1, f2, implied = 0.0, 0.0, int(w[k])
        else:
            f1 = scale * (w[k] / m[k]) * demand if m[k] > 0 else (np.inf if demand > 0 else 0.0)
            f2 = float(fam2[k])
            need1 = scale * w[k] * demand
            mu_max = float(mu[k].max())
            need2 = 0.0
            if mu_max > 0 and stot > 0:
                # worst case of family two is bounded by (w/mhat - 1) mu_max s <= 1/C
                need2 = scale * w[k] / (1.0 + 1.0 / (constant * stot * mu_max))
            implied = int(min(w[k], math.ceil(max(need1, need2) - 1e-9)))
        passes = bool(full[k] or (f1 <= 1.0 + 1e-12 and f2 <= 1.0 + 1e-12))
        reports.append(LevelReport(k + 1, float(f1), float(f2), passes, implied, bool(full[k])))
    K = float(np.max(np.where(m > 0, w / np.maximum(m, 1), np.inf)))
    return TheoremReport(reports, K, constant)


def block_diagonal_samples(N, s, mu_blocks, epsilon: float, constant: float = 1.0) -> list[int]:
    """Closed-form ``m_k = C w_k (log(1/eps) + 1) mu(A_k) s_k log N_r`` capped at ``w_k``."""
    N = np.asarray(N, dtype=float)
    w = np.diff(np.concatenate([[0.0], N]))
    lf = _log_factor(epsilon)
    logN = max(math.log(N[-1]), 1.0)
    out = []
    for wk, sk, mk in zip(w, s, mu_blocks):
        out.append(int(min(wk, math.ceil(constant * wk * lf * mk * sk * logN - 1e-9))))
    return out


def error_bound_terms(K: float, M: int, s: int, epsilon: float) -> tuple[float, float]:
    """``(L, sqrt(K) (1 + L sqrt(s)))`` from the recovery error bound."""
    s = max(int(s), 1)
    L = 1.0 + math.sqrt(math.log2(6.0 / epsilon)) / math.log2(4.0 * K * M * math.sqrt(s))
    return L, math.sqrt(K) * (1.0 + L * math.sqrt(s))


def recovery_error_bound(delta: float, sigma: float, K: float, M: int, s: int, epsilon: float, C: float = 1.0) -> float:
    """``C (delta sqrt(K) (1 + L sqrt(s)) + sigma_{s,M})``."""
    _, noise = error_bound_terms(K, M, s, epsilon)
    return C * (delta * noise + sigma)
