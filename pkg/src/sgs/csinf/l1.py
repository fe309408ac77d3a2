"""Certified l1 minimisation ``min ||x||_1  s.t.  ||A x - y|| <= delta``.

The solver is Douglas-Rachford splitting between the soft-threshold prox of
``gamma ||.||_1`` and the exact projection onto the constraint set, followed
by a least-squares polish on the detected support. Optimality is certified by
a dual-feasible point: the reported ``duality_gap`` bounds the distance of the
objective from the optimum.

Step rule: ``gamma = 0.01 * ||A^+ y||_inf`` (fixed), relaxation 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from ..basis import CoeffVec, FunctionSystem
from ..crossgram import SectionMatrix, assemble_rows

log = logging.getLogger(__name__)

__all__ = ["CsResult", "L1InfeasibleError", "TruncationError", "l1_solve", "choose_truncation", "MAX_ITER"]

MAX_ITER = 50_000
MAX_COLUMNS = 1 << 16
STEP_FACTOR = 0.01


class L1InfeasibleError(ValueError):
    """No ``x`` satisfies ``||A x - y|| <= delta``.

    ``certificate`` is a vector ``w`` with ``A^* w = 0`` and
    ``Re <w, y> > delta ||w||``, which proves infeasibility.
    """

    def __init__(self, message: str, certificate: np.ndarray, distance: float):
        super().__init__(message)
        self.certificate = certificate
        self.distance = distance


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CsResult:
    coeffs: CoeffVec
    status: str
    objective: float
    feasibility_gap: float
    K: int
    iterations: int
    duality_gap: float

    @property
    def converged(self) -> bool:
        return self.status == "optimal"


def _soft(z: np.ndarray, t: float) -> np.ndarray:
    mag = np.abs(z)
    scale = np.maximum(mag - t, 0.0) / np.where(mag > 0, mag, 1.0)
    return z * scale


class _Constraint:
    """Projection onto ``{x : ||A x - y|| <= delta}`` through a thin SVD of ``A``."""

    def __init__(self, A: np.ndarray, y: np.ndarray, delta: float):
        U, s, Vh = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
        keep = s > 1e-12 * (s[0] if s.size else 1.0)
        self.U, self.s, self.Vh = U[:, keep], s[keep], Vh[keep]
        self.A, self.y, self.delta = A, y, float(delta)
        self.c = self.U.conj().T @ y
        perp = y - self.U @ self.c
        self.perp = perp
        self.rho2 = self.delta**2 - float(np.vdot(perp, perp).real)
        tol = 1e-10 * (1.0 + np.linalg.norm(y))
        if self.rho2 < -tol * (tol + 2 * self.delta):
            dist = float(np.linalg.norm(perp))
            w = perp / dist
            raise L1InfeasibleError(
                f"data lies {dist:.3e} from the range of A, above delta={self.delta:.3e}", w, dist
            )
        self.rho = np.sqrt(max(self.rho2, 0.0))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        a = self.Vh @ z
        r = self.s * a - self.c
        if self.rho == 0.0:
            return z + self.Vh.conj().T @ (self.c / self.s - a)
        if np.linalg.norm(r) <= self.rho:
            return z
        s2 = self.s**2
        absr2 = np.abs(r) ** 2

        def phi(lam):
            return float(np.sum(absr2 / (1.0 + lam * s2) ** 2)) - self.rho2

        hi = 1.0 / s2.max()
        while phi(hi) > 0:
            hi *= 4.0
        lam = scipy.optimize.brentq(phi, 0.0, hi, xtol=1e-14 * hi, rtol=1e-14)
        new = (a + lam * self.s * self.c) / (1.0 + lam * s2)
        return z + self.Vh.conj().T @ (new - a)

    def least_norm_dual(self, u: np.ndarray) -> np.ndarray:
        """Least-squares ``lambda`` with ``A^* lambda ~ u``."""
        return self.U @ ((self.Vh @ u) / self.s)

    def residual(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.A @ x - self.y))


def _sign(v: np.ndarray) -> np.ndarray:
    mag = np.abs(v)
    return np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 0.0)


def _dual_gap(A, y, delta, x, lam) -> float:
    """Gap between ``||x||_1`` and the dual value of ``lam`` scaled to feasibility."""
    c = float(np.max(np.abs(A.conj().T @ lam))) if lam.size else 0.0
    if c > 1.0:
        lam = lam / c
    dual = float(np.real(np.vdot(lam, y))) - delta * float(np.linalg.norm(lam))
    return float(np.sum(np.abs(x))) - dual


def _polish(A, y, delta, x, proj: _Constraint, lam=None):
    """Least-squares refit on the support of ``x`` plus its KKT certificate.

    If every thresholded support of a stalled iterate exceeds ``m`` entries,
    the columns where the dual estimate ``lam`` is tight are tried instead.
    Only used for ``delta = 0``. Returns ``(x, gap)`` or ``None``.
    """
    m = A.shape[0]
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak == 0.0:
        return None
    supports = [np.flatnonzero(np.abs(x) > thr * peak) for thr in (1e-9, 1e-7, 1e-5, 1e-4, 1e-3)]
    if lam is not None and supports[-1].size > m:
        c = np.abs(A.conj().T @ lam)
        k = min(m, int(np.count_nonzero(c >= 1.0 - 1e-3)))
        if k:
            supports.append(np.sort(np.argsort(-c, kind="stable")[:k]))
    best = None
    for S in supports:
        if S.size == 0 or S.size > m:
            continue
        AS = A[:, S]
        xs, *_ = scipy.linalg.lstsq(AS, y)
        if np.linalg.norm(AS @ xs - y) > 1e-9 * (1.0 + np.linalg.norm(y)):
            continue
        cand = np.zeros_like(x)
        cand[S] = xs
        sg = _sign(xs)
        lam, *_ = scipy.linalg.lstsq(AS.conj().T, sg)
        gap = _dual_gap(A, y, delta, cand, lam)
        if best is None or gap < best[1]:
            best = (cand, gap)
    return best


def l1_solve(
    A,
    y,
    delta: float = 0.0,
    tol: float = 1e-6,
    max_iter: int = MAX_ITER,
    check_every: int = 25,
    system: FunctionSystem | None = None,
    offset: int = 1,
) -> CsResult:
    """Solve ``min ||x||_1`` subject to ``||A x - y|| <= delta``.

    Parameters
    ----------
    A : SectionMatrix or ndarray, shape (m, K)
        Row-subsampled section ``P_Omega A P_K``.
    y : array_like, shape (m,)
    delta : float
        Noise level; ``0`` gives the equality-constrained problem.
    tol : float
        Target duality gap relative to ``1 + ||x||_1``.

    Returns
    -------
    CsResult
        ``status`` is ``'optimal'`` when the certified gap is within ``tol``,
        ``'max_iter'`` otherwise (the gap is still reported).

    Raises
    ------
    L1InfeasibleError
        If the data are farther than ``delta`` from the range of ``A``.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if isinstance(A, SectionMatrix):
        system = system or A.reconstruction_system
        offset = A.col_range[0]
        E = A.entries
    else:
        E = np.asarray(A)
    y = np.asarray(y)
    if E.ndim != 2 or y.shape != (E.shape[0],):
        raise ValueError(f"dimension mismatch: A {E.shape}, y {y.shape}")
    real = np.isrealobj(E) and np.isrealobj(y)
    dtype = float if real else complex
    E = E.astype(dtype, copy=False)
    y = y.astype(dtype, copy=False)
    K = E.shape[1]
    proj = _Constraint(E, y, delta)

    def finish(x, status, its, gap):
        return CsResult(
            CoeffVec(x, system, offset),
            status,
            float(np.sum(np.abs(x))),
            proj.residual(x),
            K,
            its,
            float(gap),
        )

    if np.linalg.norm(y) <= delta:
        return finish(np.zeros(K, dtype=dtype), "optimal", 0, 0.0)

    x_ln = proj(np.zeros(K, dtype=dtype))
    gamma = STEP_FACTOR * float(np.max(np.abs(x_ln)))
    z = x_ln.copy()
    x = x_ln
    gap = np.inf
    for it in range(1, max_iter + 1):
        x = _soft(z, gamma)
        v = proj(2.0 * x - z)
        z = z + (v - x)
        if it % check_every:
            continue
        change = float(np.linalg.norm(v - x)) / (1.0 + float(np.linalg.norm(x)))
        if change > 1e-3 and it % (20 * check_every):
            continue
        feas = proj(x)
        u = (z - x) / gamma
        lam = proj.least_norm_dual(u)
        gap = _dual_gap(E, y, delta, feas, lam)
        cand = feas
        if delta == 0.0:
            stalled = change < 1e-4 and it % (20 * check_every) == 0
            pol = _polish(E, y, delta, x, proj, lam if stalled else None)
            if pol is not None and pol[1] < gap:
                cand, gap = pol
        if gap <= tol * (1.0 + float(np.sum(np.abs(cand)))):
            log.debug("l1_solve converged after %d iterations, gap %.2e", it, gap)
            return finish(cand, "optimal", it, gap)
    feas = proj(x)
    u = (z - _soft(z, gamma)) / gamma
    gap = _dual_gap(E, y, delta, feas, proj.least_norm_dual(u))
    log.info("l1_solve hit the iteration cap %d with gap %.2e", max_iter, gap)
    return finish(feas, "max_iter", max_iter, gap)


def choose_truncation(
    A,
    omega,
    base_K: int,
    y,
    delta: float = 0.0,
    tol: float = 1e-6,
    cap: int = MAX_COLUMNS,
    solve_tol: float = 1e-10,
    **solve_kw,
) -> tuple[int, CsResult]:
    """Double ``K`` from ``base_K`` until the l1 solution stagnates.

    ``A`` is either a ``(samp, recon)`` pair of systems or a callable
    ``K -> ndarray`` returning the rows ``omega`` of ``A[:, 1..K]``. The
    returned ``K`` is the smaller of the first pair of consecutive
    truncations whose solutions differ by less than ``tol`` in l1.
    Data inconsistent with a truncation count as a change. Each solve is
    certified to the relative gap ``solve_tol``, which must sit well below
    ``tol`` for the comparison to be meaningful.
    """
    omega = np.asarray(omega, dtype=np.int64)
    if callable(A):
        rows_for = A
        system = None
    else:
        samp, recon = A
        system = recon

        def rows_for(K):
            return assemble_rows(samp, recon, omega, K)

    def solve(K):
        try:
            return l1_solve(rows_for(K), y, delta, tol=solve_tol, system=system, **solve_kw)
        except L1InfeasibleError:
            return None

    K = int(base_K)
    if K < 1:
        raise ValueError("base_K must be positive")
    prev = solve(K)
    while True:
        if 2 * K > cap:
            raise TruncationError(f"no stagnation up to the column cap {cap}")
        cur = solve(2 * K)
        if prev is not None and cur is not None:
            a = np.zeros(2 * K, dtype=complex)
            a[:K] = prev.coeffs.values
            diff = float(np.sum(np.abs(a - cur.coeffs.values)))
            log.debug("truncation K=%d -> %d: l1 change %.3e", K, 2 * K, diff)
            if diff < tol:
                return K, prev
        K, prev = 2 * K, cur
