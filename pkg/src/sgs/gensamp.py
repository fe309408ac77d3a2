"""Generalized sampling, consistent reconstruction and stability functionals.

For orthonormal sampling and reconstruction systems the generalized sampling
condition number equals ``D_{N,M} = 1 / sigma_min(A[N, M])`` and the stable
sampling rate is the least ``N`` with ``D_{N,M} <= theta``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import CoeffVec, FunctionSystem
from .crossgram import SectionMatrix, assemble_section, fast_operator, min_singular_value

log = logging.getLogger(__name__)

__all__ = [
    "IllPosedSectionError",
    "BoundExhaustedError",
    "GsResult",
    "SsrQuery",
    "gs_reconstruct",
    "consistent_reconstruct",
    "d_nm",
    "stable_sampling_rate",
    "sec_angle",
    "empirical_quasi_optimality",
    "cgnr",
]

SINGULAR_FLOOR = 1e-14


class IllPosedSectionError(np.linalg.LinAlgError):
    """The section is (numerically) rank deficient."""


class BoundExhaustedError(RuntimeError):
    def __init__(self, message: str, last_d: float):
        super().__init__(f"{message}; last D = {last_d:.4g}")
        self.last_d = last_d


@dataclass(frozen=True)
class GsResult:
    coeffs: CoeffVec
    residual_norm: float
    iterations: int
    d_nm: float
    kappa_estimate: float
    converged: bool = True


@dataclass(frozen=True)
class SsrQuery:
    M: int
    theta: float = 2.0
    n_min: int | None = None
    n_max: int = 1 << 16

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be positive")
        if not self.theta > 1.0:
            raise ValueError("theta must exceed 1 for orthonormal systems")


def _spectrum(M: np.ndarray) -> np.ndarray:
    return scipy.linalg.svd(M, compute_uv=False, lapack_driver="gesdd")


def cgnr(apply, apply_adj, y, n: int, tol: float = 1e-12, maxiter: int | None = None):
    """Conjugate gradients on ``A^* A x = A^* y``.

    Stops when ``||A^*(y - A x)|| <= tol ||A^* y||`` or after ``maxiter`` steps.
    Returns ``(x, iterations, converged)``.
    """
    maxiter = 10 * n if maxiter is None else maxiter
    x = np.zeros(n, dtype=complex)
    r = np.asarray(y, dtype=complex).copy()
    s = apply_adj(r)
    p = s.copy()
    gamma = np.vdot(s, s).real
    target = tol * np.sqrt(gamma)
    if gamma == 0.0:
        return x, 0, True
    for it in range(1, maxiter + 1):
        q = apply(p)
        qq = np.vdot(q, q).real
        if qq == 0.0:
            return x, it, False
        alpha = gamma / qq
        x += alpha * p
        r -= alpha * q
        s = apply_adj(r)
        gamma_new = np.vdot(s, s).real
        if np.sqrt(gamma_new) <= target:
            return x, it, True
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    return x, maxiter, False


def gs_reconstruct(A: SectionMatrix, samples, tol: float = 1e-12, fast: bool = False) -> GsResult:
    """Least-squares generalized sampling reconstruction from ``N >= M`` samples.

    Parameters
    ----------
    A : SectionMatrix
        The ``N x M`` uneven section.
    samples : array_like, shape (N,)
        Sample vector ``P_N f_hat``.
    tol : float
        Relative normal-equation residual used to stop conjugate gradients.
    fast : bool
        Use the FFT-based product when the section supports it.
    """
    y = np.asarray(samples, dtype=complex)
    N, M = A.shape
    if y.shape != (N,):
        raise ValueError(f"expected {N} samples, got shape {y.shape}")
    if N < M:
        raise IllPosedSectionError(f"N={N} < M={M}: increase the number of samples")
    s = _spectrum(A.entries)
    if s[-1] < 1e-12:
        raise IllPosedSectionError(
            f"sigma_min={s[-1]:.2e} for the {N}x{M} section; increase N"
        )
    op = fast_operator(A) if fast else None
    if op is not None:
        apply, apply_adj = op.matvec, op.rmatvec
    else:
        E = A.entries
        EH = E.conj().T
        apply, apply_adj = (lambda v: E @ v), (lambda v: EH @ v)
    beta, its, ok = cgnr(apply, apply_adj, y, M, tol=tol)
    res = float(np.linalg.norm(A.entries @ beta - y))
    return GsResult(
        CoeffVec(beta, A.reconstruction_system, A.col_range[0]),
        res,
        its,
        float(1.0 / s[-1]),
        float(s[0] / s[-1]),
        ok,
    )


def consistent_reconstruct(A: SectionMatrix, samples, rcond: float = 1e-15) -> GsResult:
    """Finite-section (square) solve ``A[N, N] beta = P_N f_hat``.

    Raises :class:`IllPosedSectionError` when the section is numerically
    singular, i.e. ``sigma_min / sigma_max < rcond``.
    """
    N, M = A.shape
    if N != M:
        raise ValueError(f"consistent reconstruction needs a square section, got {N}x{M}")
    y = np.asarray(samples, dtype=complex)
    s = _spectrum(A.entries)
    if s[-1] <= rcond * s[0]:
        raise IllPosedSectionError(
            f"square section numerically singular (condition {s[0] / max(s[-1], 1e-300):.2e})"
        )
    beta = scipy.linalg.solve(A.entries, y)
    res = float(np.linalg.norm(A.entries @ beta - y))
    return GsResult(
        CoeffVec(beta, A.reconstruction_system, A.col_range[0]),
        res,
        1,
        float(1.0 / s[-1]),
        float(s[0] / s[-1]),
    )


def _as_section(samp, recon, N, M) -> SectionMatrix:
    if isinstance(samp, SectionMatrix):
        return samp.sub((1, N), (1, M)) if N is not None else samp
    return assemble_section(samp, recon, N, M)


def d_nm(samp, recon=None, N: int | None = None, M: int | None = None) -> float:
    """``1 / sigma_min(A[N, M])``; ``inf`` when ``sigma_min < 1e-14``.

    ``samp`` may also be an assembled section (then ``N``, ``M`` restrict it).
    """
    A = _as_section(samp, recon, N, M)
    smin = min_singular_value(A)
    return np.inf if smin < SINGULAR_FLOOR else 1.0 / smin


class _RowCache:
    """Rows ``1..n`` of ``A[:, 1..M]`` grown on demand (sections nest)."""

    def __init__(self, samp, recon, M):
        self.samp, self.recon, self.M = samp, recon, M
        self.block = np.empty((0, M), dtype=complex)

    def upto(self, n: int) -> np.ndarray:
        have = self.block.shape[0]
        if n > have:
            new = assemble_section(self.samp, self.recon, (have + 1, n), (1, self.M)).entries
            self.block = np.vstack([self.block, new])
        return self.block[:n]

    def d(self, n: int) -> float:
        smin = min_singular_value(self.upto(n))
        return np.inf if smin < SINGULAR_FLOOR else 1.0 / smin


def stable_sampling_rate(q: SsrQuery, samp: FunctionSystem, recon: FunctionSystem) -> int:
    """Least ``N`` with ``D_{N,M} <= theta`` (doubling, then bisection)."""
    cache = _RowCache(samp, recon, q.M)
    lo = max(q.M, q.n_min or q.M)
    if lo > q.n_max:
        raise BoundExhaustedError(f"lower bound {lo} above n_max={q.n_max}", np.inf)
    hi = lo
    d = cache.d(hi)
    while d > q.theta:
        if hi >= q.n_max:
            raise BoundExhaustedError(f"no N <= {q.n_max} reaches theta={q.theta}", d)
        lo = hi
        hi = min(2 * hi, q.n_max)
        d = cache.d(hi)
    if hi == max(q.M, q.n_min or q.M):
        return hi
    # invariant: D(lo) > theta >= D(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if cache.d(mid) <= q.theta:
            hi = mid
        else:
            lo = mid
    if not (cache.d(hi) <= q.theta < cache.d(hi - 1)):
        raise RuntimeError("stable sampling rate bisection failed its verification pass")
    log.debug("SSR(M=%d, theta=%g) = %d", q.M, q.theta, hi)
    return hi


def sec_angle(samp, recon=None, N: int | None = None, M: int | None = None) -> float:
    """``sec(theta_{N,M})`` from the smallest eigenvalue of ``B = G (A^* C A)^{-1} G``.

    ``G = A^* A`` is the compressed frame operator and ``C`` the Gram matrix of
    the sampling vectors, which is the identity for orthonormal systems.
    """
    A = _as_section(samp, recon, N, M).entries
    C = np.eye(A.shape[0])
    G = A.conj().T @ A
    inner = A.conj().T @ C @ A
    try:
        B = G @ scipy.linalg.solve(inner, G, assume_a="her")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise IllPosedSectionError("singular inner matrix in the angle formula") from exc
    B = 0.5 * (B + B.conj().T)
    lam = scipy.linalg.eigvalsh(B)[0]
    if lam <= 0:
        return np.inf
    return float(1.0 / np.sqrt(lam))


def empirical_quasi_optimality(samp, recon, N: int, M: int, K: int) -> float:
    """``sqrt(1 + ||A_{N,M}^+ A_{N,(M,K]}||^2)``: the norm of the GS projection
    restricted to ``span{phi_1..phi_K}``, which increases to ``sec(theta_{N,M})``."""
    A = assemble_section(samp, recon, N, K).entries
    X = np.linalg.lstsq(A[:, :M], A[:, M:], rcond=None)[0]
    nrm = np.linalg.norm(X, 2) if X.size else 0.0
    return float(np.sqrt(1.0 + nrm**2))
