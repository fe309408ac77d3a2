"""Weak and strong balancing property checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..crossgram import SectionMatrix

__all__ = ["BalancingReport", "balancing_check", "balancing_thresholds"]


@dataclass(frozen=True)
class BalancingReport:
    lhs_weak: float
    lhs_strong: float
    holds_weak: bool
    holds_strong: bool
    threshold_weak: float
    threshold_strong: float

    def __iter__(self):
        # unpacks as (lhs_weak, lhs_strong, holds_weak, holds_strong)
        return iter((self.lhs_weak, self.lhs_strong, self.holds_weak, self.holds_strong))


def balancing_thresholds(s: int, K: float, M: int) -> tuple[float, float]:
    arg = 4.0 * np.sqrt(max(s, 1)) * K * M
    weak = 0.125 / np.sqrt(np.log2(arg)) if arg > 2 else 0.125
    return float(weak), 0.125


def balancing_check(A, N: int, K: float, M: int, s: int) -> BalancingReport:
    """Evaluate both balancing conditions on the first ``N`` rows.

    ``A`` must cover rows ``1..N`` and at least ``M`` columns. Columns beyond
    ``M`` act as a finite window of the ``P_M^perp`` tail, so ``lhs_strong``
    is a lower bound on the true operator norm.
    """
    E = A.entries if isinstance(A, SectionMatrix) else np.asarray(A)
    if E.shape[0] < N or E.shape[1] < M:
        raise ValueError(f"section of shape {E.shape} does not cover N={N}, M={M}")
    B = E[:N]
    G = B[:, :M].conj().T @ B[:, :M]
    R = G - np.eye(M)
    lhs_weak = float(np.max(np.sum(np.abs(R), axis=1))) if M else 0.0
    if B.shape[1] > M:
        T = B[:, M:].conj().T @ B[:, :M]
        lhs_strong = float(np.max(np.sum(np.abs(T), axis=1)))
    else:
        lhs_strong = 0.0
    tw, ts = balancing_thresholds(s, K, M)
    return BalancingReport(lhs_weak, lhs_strong, lhs_weak <= tw, lhs_strong <= ts, tw, ts)
