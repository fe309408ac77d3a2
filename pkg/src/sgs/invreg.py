"""Generalized sampling through a compact operator.

The data ``g = A f`` are sampled in a system ``psi`` (``eta = S_R^* g``), the
singular coefficients ``gamma`` of ``g`` are recovered by generalized sampling
in ``span{u_1..u_N}``, and ``f`` is reconstructed in ``span{phi_1..phi_M}``
either through the uneven section ``V_N^* T_M`` or through its filtered
(Tikhonov) variant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import basis
from .basis import CoeffVec, FunctionSystem, Grid
from .gensamp import IllPosedSectionError

log = logging.getLogger(__name__)

__all__ = [
    "SingularSystem",
    "FilterSpec",
    "InvProblemData",
    "volterra_singular_system",
    "numeric_singular_system",
    "volterra_forward",
    "volterra_gamma",
    "add_noise",
    "sample",
    "recover_gamma",
    "uneven_recover",
    "filtered_recover",
    "angles",
    "filtered_error_bound",
    "uneven_error_bound",
    "singular_coefficients",
    "l2_error",
]


@dataclass(frozen=True)
class SingularSystem:
    """Singular triples ``{sigma_k, u_k, v_k}`` of a compact operator on an interval.

    ``eval_u(i, x)`` and ``eval_v(i, x)`` evaluate the ``i``-th retained
    triple (``i = 0..count-1``) at points ``x``.
    """

    kind: str
    sigma: np.ndarray
    eval_u: Callable[[int, np.ndarray], np.ndarray] = field(repr=False)
    eval_v: Callable[[int, np.ndarray], np.ndarray] = field(repr=False)
    domain: tuple[float, float] = (0.0, 1.0)
    first_index: int = 1
    frequencies: np.ndarray | None = field(default=None, repr=False)  # oscillation of triple i

    def max_frequency(self, n: int) -> float:
        if self.frequencies is None:
            return 0.0
        return float(np.max(self.frequencies[:n]))

    @property
    def count(self) -> int:
        return self.sigma.size

    def u_block(self, n: int, x) -> np.ndarray:
        return np.column_stack([self.eval_u(i, np.asarray(x, dtype=float)) for i in range(n)])

    def v_block(self, n: int, x) -> np.ndarray:
        return np.column_stack([self.eval_v(i, np.asarray(x, dtype=float)) for i in range(n)])


def volterra_singular_system(count: int, first_index: int = 1) -> SingularSystem:
    """Analytic singular system of ``(A f)(t) = int_0^t f`` on ``[0, 1]``.

    Triple ``k`` (``k >= 0``) has ``sigma_k = 1 / ((k + 1/2) pi)``,
    ``v_k = sqrt(2) cos((k + 1/2) pi t)`` and ``u_k = sqrt(2) sin((k + 1/2) pi t)``.
    The retained triples are ``k = first_index .. first_index + count - 1``.
    """
    if count < 1 or first_index < 0:
        raise ValueError("count must be positive and first_index nonnegative")
    k = np.arange(first_index, first_index + count)
    b = (k + 0.5) * np.pi
    sigma = 1.0 / b
    sigma.setflags(write=False)

    def eval_u(i, x):
        return np.sqrt(2.0) * np.sin(b[i] * np.asarray(x, dtype=float))

    def eval_v(i, x):
        return np.sqrt(2.0) * np.cos(b[i] * np.asarray(x, dtype=float))

    return SingularSystem("VolterraAnalytic", sigma, eval_u, eval_v, (0.0, 1.0), first_index, b)


def numeric_singular_system(
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray],
    count: int,
    domain: tuple[float, float] = (0.0, 1.0),
    panels: int = 128,
    order: int = 12,
) -> SingularSystem:
    """Singular system of an integral operator ``(A f)(t) = int K(t, s) f(s) ds``.

    The operator is discretized by a Nystrom rule with square-root weights; the
    right singular functions are evaluated anywhere through ``v = A^* u / sigma``
    and the left ones through ``u = A v / sigma``.
    """
    grid = Grid.composite(domain[0], domain[1], panels, order)
    x, w = grid.nodes, grid.weights
    sw = np.sqrt(w)
    Kmat = sw[:, None] * kernel(x[:, None], x[None, :]) * sw[None, :]
    U, s, Vh = np.linalg.svd(Kmat)
    if count > s.size:
        raise ValueError(f"only {s.size} numeric triples available")
    s = s[:count]
    # fix signs so that the first nonzero sample of each v is positive
    U = U[:, :count]
    V = Vh[:count].conj().T
    for i in range(count):
        j = int(np.argmax(np.abs(V[:, i]) > 1e-8))
        if V[j, i] < 0:
            U[:, i] *= -1
            V[:, i] *= -1
    u_nodes = U / sw[:, None]
    v_nodes = V / sw[:, None]

    def eval_u(i, t):
        t = np.asarray(t, dtype=float)
        return (kernel(t[:, None], x[None, :]) * w[None, :]) @ v_nodes[:, i] / s[i]

    def eval_v(i, t):
        t = np.asarray(t, dtype=float)
        return (np.conj(kernel(x[:, None], t[None, :])) * w[:, None]).T @ u_nodes[:, i] / s[i]

    s = s.copy()
    s.setflags(write=False)
    return SingularSystem("NumericFromOperator", s, eval_u, eval_v, tuple(domain), 0)


@dataclass(frozen=True)
class FilterSpec:
    """Spectral filter ``F_alpha(sigma^2)``: ``tikhonov`` or ``none`` (``1 / sigma^2``)."""

    kind: str = "tikhonov"
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("tikhonov", "none"):
            raise ValueError(f"unknown filter {self.kind!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    def evaluate(self, sigma2) -> np.ndarray:
        sigma2 = np.asarray(sigma2, dtype=float)
        if self.kind == "none":
            return 1.0 / sigma2
        return 1.0 / (self.alpha + sigma2)


@dataclass(frozen=True)
class InvProblemData:
    """Noisy data on a quadrature grid and its samples."""

    grid: Grid
    g_clean: np.ndarray
    g_noisy: np.ndarray
    delta: float
    noise_seed: int | None
    eps_rel: float
    eta: np.ndarray | None = None
    sampling_system: FunctionSystem | None = None


# ---------------------------------------------------------------------------
# forward operator and data


def _integration_matrix(order: int) -> np.ndarray:
    """``S[i, j] = int_{-1}^{x_i} l_j(s) ds`` for the Gauss-Legendre Lagrange basis."""
    x, _ = basis._gauss_legendre(order)
    V = np.polynomial.legendre.legvander(x, order - 1)
    C = np.linalg.inv(V)  # column j: Legendre coefficients of l_j
    S = np.empty((order, order))
    for j in range(order):
        S[:, j] = np.polynomial.legendre.legval(x, np.polynomial.legendre.legint(C[:, j], lbnd=-1))
    return S


def volterra_forward(f, grid: Grid) -> np.ndarray:
    """``g(x) = int_{a}^{x} f(s) ds`` at the grid nodes (panel-wise spectral integration)."""
    f = np.asarray(f)
    if f.shape != grid.nodes.shape:
        raise ValueError("f must be sampled on the grid")
    q = grid.order
    S = _integration_matrix(q)
    panels = f.reshape(-1, q)
    half = 0.5 * np.diff(grid.breakpoints)
    partial = (panels @ S.T) * half[:, None]
    totals = panels @ basis._gauss_legendre(q)[1] * half
    offsets = np.concatenate([[0.0], np.cumsum(totals)[:-1]])
    return (partial + offsets[:, None]).ravel()


def volterra_gamma(k) -> np.ndarray:
    """``<g, u_k>`` for ``g = sin(2 pi t) / (2 pi)``, i.e. the data of ``f = cos(2 pi t)``."""
    k = np.asarray(k, dtype=float)
    return 4.0 * np.sqrt(2.0) * np.cos(k * np.pi) / (np.pi**2 * (4 * k**2 + 4 * k - 15))


def sample(g, system: FunctionSystem, R: int, grid: Grid) -> np.ndarray:
    """Samples ``<g, psi_i>``, ``i = 1..R``, by quadrature."""
    block = basis.eval_block(system, np.arange(1, R + 1), grid.nodes)
    return np.conj(block).T @ (grid.weights * np.asarray(g))


def add_noise(
    g,
    eps_rel: float,
    seed: int | None,
    grid: Grid,
    complex_noise: bool = True,
    sampling_system: FunctionSystem | None = None,
    R: int | None = None,
) -> InvProblemData:
    """Add Gaussian noise with ``||z|| / ||g|| = eps_rel / 100`` in the quadrature norm.

    If ``sampling_system`` and ``R`` are given the noisy samples are attached.
    """
    if eps_rel < 0:
        raise ValueError("eps_rel must be nonnegative")
    g = np.asarray(g)
    gnorm = grid.norm(g)
    if eps_rel == 0:
        z = np.zeros(g.shape, dtype=complex)
    else:
        if gnorm == 0:
            raise ValueError("relative noise of a zero signal is undefined")
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(g.shape)
        if complex_noise:
            z = z + 1j * rng.standard_normal(g.shape)
        z = z * (eps_rel / 100.0 * gnorm / grid.norm(z))
    g_noisy = g + z
    delta = grid.norm(z)
    eta = None
    if sampling_system is not None and R is not None:
        eta = sample(g_noisy, sampling_system, R, grid)
    return InvProblemData(grid, g, g_noisy, float(delta), seed, float(eps_rel), eta, sampling_system)


# ---------------------------------------------------------------------------
# cross-Gramians


def _fourier_extent(system: FunctionSystem, n: int) -> float:
    if system.kind == "fourier":
        return 2.0 * np.pi * (n // 2) / system.length
    if system.kind == "legendre":
        return 4.0 * n / system.length
    return 0.0


def _gram_grid(ss: SingularSystem, n: int, system: FunctionSystem, n_sys: int, refine: int = 1) -> Grid:
    lo = max(ss.domain[0], system.domain[0])
    hi = min(ss.domain[1], system.domain[1])
    dyadic = []
    if system.is_wavelet:
        lev = int(basis.wavelet_label(n_sys)[0])
        dyadic.append((system.domain, max(lev, 0) + 1))
    freq = _fourier_extent(system, n_sys) + ss.max_frequency(n) + 2.0 * np.pi
    return basis.adapted_grid((lo, hi), frequency=freq, dyadic=dyadic, refine=refine)


def _gram(ss: SingularSystem, which: str, n: int, system: FunctionSystem, m: int, tol: float = 1e-10):
    """``<u_l, psi_i>`` (``which='S*U'``, shape m x n) or ``<phi_j, v_k>`` (``'V*T'``, n x m)."""

    def build(grid):
        sys_vals = basis.eval_block(system, np.arange(1, m + 1), grid.nodes)
        if which == "S*U":
            sv = ss.u_block(n, grid.nodes)
            return np.conj(sys_vals).T @ (grid.weights[:, None] * sv)
        sv = ss.v_block(n, grid.nodes)
        return np.conj(sv).T @ (grid.weights[:, None] * sys_vals)

    grid = _gram_grid(ss, n, system, m)
    G = build(grid)
    G2 = build(grid.refine(2))
    dev = float(np.abs(G - G2).max())
    if dev > tol:
        G = build(grid.refine(4))
        dev = float(np.abs(G - G2).max())
        if dev > 10 * tol:
            log.warning("cross-Gramian %s quadrature deviation %.2e", which, dev)
    return G2


def singular_coefficients(f, ss: SingularSystem, n: int, grid: Grid, which: str = "v") -> np.ndarray:
    """``<f, v_k>`` (or ``<f, u_k>``), ``k`` over the first ``n`` retained triples."""
    blk = ss.v_block(n, grid.nodes) if which == "v" else ss.u_block(n, grid.nodes)
    return np.conj(blk).T @ (grid.weights * np.asarray(f))


# ---------------------------------------------------------------------------
# reconstruction


def _eta_vector(eta) -> np.ndarray:
    if isinstance(eta, InvProblemData):
        if eta.eta is None:
            raise ValueError("problem data carries no samples")
        return np.asarray(eta.eta, dtype=complex)
    return np.asarray(eta, dtype=complex)


def recover_gamma(ss: SingularSystem, samp: FunctionSystem, N: int, R: int, eta) -> np.ndarray:
    """Least-squares singular coefficients ``gamma`` of ``g`` from ``R`` samples.

    Solves ``U_N^* S_R S_R^* U_N gamma = U_N^* S_R eta``, i.e. generalized sampling
    of ``g`` in ``span{u_1..u_N}``.
    """
    eta = _eta_vector(eta)
    if N > ss.count:
        raise ValueError(f"only {ss.count} singular triples available, N={N} requested")
    if R < N:
        raise IllPosedSectionError(f"R={R} < N={N}: the sample system is underdetermined")
    if eta.size < R:
        raise ValueError(f"need {R} samples, got {eta.size}")
    G = _gram(ss, "S*U", N, samp, R)
    s = np.linalg.svd(G, compute_uv=False)
    if s[-1] < 1e-12:
        raise IllPosedSectionError(f"cos(theta1) = {s[-1]:.2e}; increase R")
    return np.linalg.lstsq(G, eta[:R], rcond=None)[0]


def _pinv_solve(B: np.ndarray, rhs: np.ndarray, cutoff: float = 1e-12) -> np.ndarray:
    U, s, Vh = np.linalg.svd(B, full_matrices=False)
    keep = s > cutoff * s[0]
    return Vh[keep].conj().T @ ((U[:, keep].conj().T @ rhs) / s[keep])


def uneven_recover(
    ss: SingularSystem,
    recon: FunctionSystem,
    N: int,
    M: int,
    R: int,
    eta,
    samp: FunctionSystem | None = None,
) -> CoeffVec:
    """Unfiltered uneven-section estimate ``beta = (V_N^* T_M)^+ Sigma_N^{-1} gamma``.

    ``samp`` defaults to ``recon`` (Fourier sampling and reconstruction).
    """
    samp = samp or recon
    gamma = recover_gamma(ss, samp, N, R, eta)
    B = _gram(ss, "V*T", N, recon, M)
    smin = np.linalg.svd(B, compute_uv=False)[-1] if N >= M else 0.0
    if smin < 1e-12:
        raise IllPosedSectionError(f"cos(theta2) = {smin:.2e} for N={N}, M={M}; increase N or decrease M")
    beta = _pinv_solve(B, gamma / ss.sigma[:N])
    return CoeffVec(beta, recon)


def filtered_recover(
    ss: SingularSystem,
    recon: FunctionSystem,
    filt: FilterSpec,
    N: int,
    M: int,
    R: int,
    eta,
    samp: FunctionSystem | None = None,
    gamma: np.ndarray | None = None,
) -> CoeffVec:
    """Filtered estimate from ``B^* Theta^{-2} B beta = B^* Theta^{-1} Sigma gamma``.

    ``B = V_N^* T_M`` and ``Theta = diag(F_alpha(sigma_k^2))``. A precomputed
    ``gamma`` (for instance exact data) bypasses the sampling step.
    """
    samp = samp or recon
    if gamma is None:
        gamma = recover_gamma(ss, samp, N, R, eta)
    sig = ss.sigma[:N]
    theta_inv = 1.0 / filt.evaluate(sig**2)
    B = _gram(ss, "V*T", N, recon, M)
    W = theta_inv[:, None] * B
    s = np.linalg.svd(W, compute_uv=False) if N >= M else np.zeros(1)
    if N < M or s[-1] <= 1e-13 * s[0]:
        raise IllPosedSectionError(
            f"weighted section singular for N={N}, M={M}; increase N or decrease M"
        )
    lhs = W.conj().T @ W
    rhs = W.conj().T @ (sig * gamma)
    beta = scipy.linalg.lstsq(lhs, rhs)[0]
    return CoeffVec(beta, recon)


# ---------------------------------------------------------------------------
# subspace angles and error bounds


def angles(ss: SingularSystem, samp: FunctionSystem, recon: FunctionSystem, N, M, R, filt: FilterSpec | None = None) -> dict:
    """``sec(theta1_{R,N})``, ``sec(theta2_{N,M})`` and, with a filter, ``sec(theta2alpha_{N,M})``."""

    def sec(mat):
        s = np.linalg.svd(mat, compute_uv=False)
        if mat.shape[0] < mat.shape[1] or s[-1] == 0:
            return np.inf
        return float(1.0 / s[-1])

    G1 = _gram(ss, "S*U", N, samp, R)
    B = _gram(ss, "V*T", N, recon, M)
    out = {"sec1": sec(G1), "sec2": sec(B)}
    if filt is not None:
        D = (1.0 / filt.evaluate(ss.sigma[:N] ** 2)) ** 2
        # T_M against L(T_M), L = V D V^*; the orthonormal basis of L(T_M)
        # in V_N coordinates is orth(D B)
        Q = scipy.linalg.orth(D[:, None] * B)
        out["sec2a"] = sec(Q.conj().T @ B)
    return out


def uneven_error_bound(sec2, sec1, tail_v, delta, sigma_N, proj_err_t=0.0, dagger_gap=0.0) -> float:
    """Right-hand side of the uneven-section error bound.

    ``tail_v = ||f - P_{V_N} f||``, ``proj_err_t = ||f^dag - P_{T_M} f^dag||`` and
    ``dagger_gap = ||f^dag - f||``.
    """
    return float(
        (1 + 2 * sec2) * dagger_gap + sec2 * proj_err_t + sec2 * sec1 * (tail_v + delta / sigma_N)
    )


def filtered_error_bound(err_exact, sec2a, sec1, sigma_next, filt: FilterSpec, sigma, tail_v, delta) -> float:
    """Right-hand side of the filtered error bound; ``err_exact = ||f^dag - f^alpha_{N,M}||``."""
    sigma = np.asarray(sigma)
    c = sec2a * sec1 * sigma_next * float(np.max(filt.evaluate(sigma**2) * sigma))
    return float(err_exact + c * (tail_v + delta))


def l2_error(coeffs: CoeffVec, f, grid: Grid, system: FunctionSystem | None = None) -> float:
    """``||f - sum beta_j phi_j||`` in the quadrature norm."""
    return grid.norm(basis.synthesize(coeffs, grid, system) - np.asarray(f))
