"""Orthonormal function systems, quadrature grids and pointwise evaluation.

Four systems are supported on a closed interval ``[a, b]``:

* ``fourier``: ``exp(2 pi i w x / L) / sqrt(L)`` with ``L = b - a``. Index ``j``
  maps to the frequency ``w`` through the fold ``0, 1, -1, 2, -2, ...``.
* ``haar``: the Haar basis, constant function first, then wavelets level by
  level (``j = 2**J + k + 1`` is the wavelet at level ``J`` and shift ``k``).
* ``daubechies``: periodized Daubechies wavelets with ``p`` vanishing moments,
  same ordering as ``haar``. ``p = 1`` reproduces ``haar``.
* ``legendre``: orthonormal Legendre polynomials, ``j`` has degree ``j - 1``.

Every quantity returned here is computed directly from these definitions, so
this module serves as the independent oracle for the cross-Gramian code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import pywt

__all__ = [
    "KINDS",
    "LEGENDRE_MAX_DEGREE",
    "WAVELET_MAX_LEVEL",
    "BasisError",
    "FunctionSystem",
    "Grid",
    "CoeffVec",
    "fourier",
    "haar",
    "daubechies",
    "legendre",
    "fold_frequency",
    "fold_index",
    "wavelet_label",
    "eval_element",
    "eval_block",
    "inner_product",
    "synthesize",
]

KINDS = ("fourier", "haar", "daubechies", "legendre")

# The normalized three-term recurrence is stable for any degree, but grids
# resolving higher degrees become impractically large.
LEGENDRE_MAX_DEGREE = 16384
WAVELET_MAX_LEVEL = 40
FOURIER_MAX_INDEX = 2**40


class BasisError(ValueError):
    """Raised for indices or inputs a system cannot represent."""


@dataclass(frozen=True)
class FunctionSystem:
    """An orthonormal system on ``domain`` (see module docstring)."""

    kind: str
    domain: tuple[float, float] = (0.0, 1.0)
    p: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BasisError(f"unknown system kind {self.kind!r}; expected one of {KINDS}")
        a, b = (float(v) for v in self.domain)
        if not (np.isfinite(a) and np.isfinite(b) and b > a):
            raise BasisError(f"invalid domain {self.domain!r}")
        object.__setattr__(self, "domain", (a, b))
        if self.kind == "daubechies":
            if int(self.p) < 1:
                raise BasisError("daubechies needs p >= 1 vanishing moments")
        object.__setattr__(self, "p", int(self.p))

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def is_wavelet(self) -> bool:
        return self.kind in ("haar", "daubechies")

    @property
    def is_complex(self) -> bool:
        return self.kind == "fourier"

    def label(self, j: int):
        """Natural label of the ``j``-th element (1-based)."""
        check_index(self, j)
        if self.kind == "fourier":
            return int(fold_frequency(j))
        if self.kind == "legendre":
            return j - 1
        return wavelet_label(j)

    def describe(self) -> str:
        a, b = self.domain
        extra = f",p={self.p}" if self.kind == "daubechies" else ""
        return f"{self.kind}[{a:g},{b:g}{extra}]"


def fourier(a: float = 0.0, b: float = 1.0) -> FunctionSystem:
    return FunctionSystem("fourier", (a, b))


def haar(a: float = 0.0, b: float = 1.0) -> FunctionSystem:
    return FunctionSystem("haar", (a, b))


def daubechies(p: int, a: float = 0.0, b: float = 1.0) -> FunctionSystem:
    return FunctionSystem("daubechies", (a, b), p)


def legendre(a: float = -1.0, b: float = 1.0) -> FunctionSystem:
    return FunctionSystem("legendre", (a, b))


# ---------------------------------------------------------------------------
# indexing


def fold_frequency(j):
    """Frequency of the ``j``-th Fourier element: 1, 2, 3, 4, 5 -> 0, 1, -1, 2, -2."""
    j = np.asarray(j, dtype=np.int64)
    half = j // 2
    return np.where(j % 2 == 0, half, -half)


def fold_index(w):
    """Inverse of :func:`fold_frequency`."""
    w = np.asarray(w, dtype=np.int64)
    return np.where(w > 0, 2 * w, 1 - 2 * w)


def wavelet_label(j):
    """``(level, shift)`` of the ``j``-th wavelet element; ``(-1, 0)`` is the constant."""
    j = np.asarray(j, dtype=np.int64)
    n = np.maximum(j - 1, 1)
    level = np.floor(np.log2(n.astype(float))).astype(np.int64)
    # guard against rounding in log2 for large n
    level = np.where(2**level > n, level - 1, level)
    level = np.where(2 ** (level + 1) <= n, level + 1, level)
    shift = n - 2**level
    level = np.where(j == 1, -1, level)
    shift = np.where(j == 1, 0, shift)
    if level.ndim == 0:
        return int(level), int(shift)
    return level, shift


def check_index(system: FunctionSystem, j) -> None:
    j = np.asarray(j)
    if j.size == 0:
        return
    if np.any(j < 1):
        raise BasisError("element indices are 1-based")
    jmax = int(j.max())
    if system.kind == "legendre" and jmax - 1 > LEGENDRE_MAX_DEGREE:
        raise BasisError(
            f"Legendre degree {jmax - 1} exceeds the supported maximum {LEGENDRE_MAX_DEGREE}"
        )
    if system.is_wavelet and jmax - 1 >= 2**WAVELET_MAX_LEVEL:
        raise BasisError(f"wavelet index {jmax} exceeds level {WAVELET_MAX_LEVEL}")
    if system.kind == "fourier" and jmax > FOURIER_MAX_INDEX:
        raise BasisError(f"Fourier index {jmax} too large")


# ---------------------------------------------------------------------------
# quadrature grids


@dataclass(frozen=True)
class Grid:
    """Composite Gauss-Legendre rule.

    Attributes
    ----------
    nodes : ndarray
        Strictly increasing abscissae.
    weights : ndarray
        Positive weights; they sum to the covered length.
    breakpoints : ndarray
        Panel boundaries.
    order : int
        Gauss points per panel.
    """

    nodes: np.ndarray
    weights: np.ndarray
    breakpoints: np.ndarray = field(repr=False)
    order: int = 16

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise BasisError("nodes and weights must be 1-D arrays of equal length")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
            raise BasisError("grid nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise BasisError("grid weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.nodes.size

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @classmethod
    def from_breakpoints(cls, breakpoints: Sequence[float], order: int = 16) -> "Grid":
        bp = np.unique(np.asarray(breakpoints, dtype=float))
        if bp.size < 2:
            raise BasisError("need at least two distinct breakpoints")
        x, w = _gauss_legendre(order)
        lo, hi = bp[:-1, None], bp[1:, None]
        half = 0.5 * (hi - lo)
        nodes = (lo + half * (x[None, :] + 1.0)).ravel()
        weights = (half * w[None, :]).ravel()
        return cls(nodes, weights, bp, order)

    @classmethod
    def composite(cls, a: float, b: float, panels: int = 64, order: int = 16) -> "Grid":
        return cls.from_breakpoints(np.linspace(a, b, int(panels) + 1), order)

    def integrate(self, values) -> complex:
        return np.dot(self.weights, values)

    def norm(self, values) -> float:
        return float(np.sqrt(np.dot(self.weights, np.abs(values) ** 2)))

    def refine(self, factor: int = 2) -> "Grid":
        bp = self.breakpoints
        fine = [np.linspace(bp[i], bp[i + 1], factor + 1)[:-1] for i in range(bp.size - 1)]
        return Grid.from_breakpoints(np.concatenate(fine + [bp[-1:]]), self.order)


@lru_cache(maxsize=32)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(int(order))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def adapted_grid(
    domain: tuple[float, float],
    frequency: float = 0.0,
    degree: int = 0,
    dyadic: Sequence[tuple[tuple[float, float], int]] = (),
    order: int = 20,
    refine: int = 1,
) -> Grid:
    """Composite rule tuned to the functions that will be integrated.

    Parameters
    ----------
    domain : (a, b)
        Integration interval.
    frequency : float
        Largest angular frequency (radians per unit length) to resolve.
    degree : int
        Largest polynomial degree (on ``domain``) to resolve.
    dyadic : list of ((c, d), level)
        Wavelet supports ``[c, d]`` whose discontinuities at ``c + (d-c) k / 2**level``
        must be panel boundaries.
    refine : int
        Extra subdivision factor applied to every panel.
    """
    a, b = domain
    L = b - a
    points = [np.array([a, b])]
    for (c, d), level in dyadic:
        n = 2 ** int(level)
        pts = np.linspace(c, d, n + 1)
        points.append(pts[(pts >= a) & (pts <= b)])
    bp = np.unique(np.concatenate(points))
    # oscillation budget: keep the phase change per panel below order / 2
    kappa = abs(frequency) + 2.0 * degree / max(L, 1e-300) * 2.0
    max_h = np.inf if kappa == 0 else order / (2.0 * kappa)
    pieces = []
    for lo, hi in zip(bp[:-1], bp[1:]):
        n = max(1, int(np.ceil((hi - lo) / max_h)) if np.isfinite(max_h) else 1) * int(refine)
        pieces.append(np.linspace(lo, hi, n + 1)[:-1])
    pieces.append(bp[-1:])
    return Grid.from_breakpoints(np.concatenate(pieces), order)


# ---------------------------------------------------------------------------
# Daubechies scaling function evaluation


@dataclass(frozen=True)
class _Cascade:
    coeffs: np.ndarray  # c_n = sqrt(2) h_n, sum 2
    hi: np.ndarray  # wavelet filter, psi(x) = sqrt(2) sum g_n phi(2x - n)
    support: int  # phi supported on [0, support]
    T0: np.ndarray
    T1: np.ndarray
    v0: np.ndarray  # phi at integers 0..support-1


@lru_cache(maxsize=16)
def _cascade(p: int) -> _Cascade:
    w = pywt.Wavelet(f"db{p}")
    h = np.asarray(w.rec_lo, dtype=float)
    g = np.asarray(w.rec_hi, dtype=float)
    c = np.sqrt(2.0) * h
    L = c.size - 1

    def coef(n):
        return c[n] if 0 <= n <= L else 0.0

    # v(x)_i = phi(x + i), i = 0..L-1, x in [0, 1)
    T0 = np.array([[coef(2 * i - m) for m in range(L)] for i in range(L)])
    T1 = np.array([[coef(2 * i - m + 1) for m in range(L)] for i in range(L)])
    if L == 0:
        return _Cascade(c, g, 1, np.ones((1, 1)), np.ones((1, 1)), np.ones(1))
    vals, vecs = np.linalg.eig(T0)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    v0 = np.real(vecs[:, idx])
    v0 = v0 / v0.sum()
    return _Cascade(c, g, L, T0, T1, v0)


def _phi_on_unit(p: int, t: np.ndarray, digits: int = 60) -> np.ndarray:
    """Values ``phi(t + i)`` for ``t`` in ``[0, 1)``; shape ``(len(t), support)``.

    Products of the two refinement matrices over the binary expansion of ``t``
    are exact for dyadic arguments, which covers every double.
    """
    cas = _cascade(p)
    t = np.asarray(t, dtype=float)
    bits = np.empty((digits, t.size), dtype=np.int8)
    r = t.copy()
    for m in range(digits):
        r = 2.0 * r
        d = r >= 1.0
        bits[m] = d
        r = r - d
    v = np.broadcast_to(cas.v0, (t.size, cas.support)).copy()
    for m in range(digits - 1, -1, -1):
        b = bits[m].astype(bool)
        out = v @ cas.T0.T
        if b.any():
            out[b] = v[b] @ cas.T1.T
        v = out
    return v


def scaling_function(p: int, x) -> np.ndarray:
    """Daubechies scaling function ``phi`` with ``p`` vanishing moments at ``x``."""
    x = np.asarray(x, dtype=float)
    cas = _cascade(p)
    k = np.floor(x)
    t = x - k
    k = k.astype(np.int64)
    out = np.zeros(x.shape)
    inside = (k >= 0) & (k < cas.support)
    if inside.any():
        vals = _phi_on_unit(p, t[inside])
        out[inside] = vals[np.arange(vals.shape[0]), k[inside]]
    return out


def mother_wavelet(p: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cas = _cascade(p)
    out = np.zeros(x.shape)
    for n, gn in enumerate(cas.hi):
        out += np.sqrt(2.0) * gn * scaling_function(p, 2.0 * x - n)
    return out


def _periodic_wavelet(p: int, level: int, shift: int, t: np.ndarray) -> np.ndarray:
    """``sum_m 2**(J/2) psi(2**J (t + m) - k)`` for ``t`` in ``[0, 1)``."""
    cas = _cascade(p)
    n = 2**level
    u = np.mod(n * t - shift, n)
    out = np.zeros(t.shape)
    m = 0
    while m * n < cas.support:
        out += mother_wavelet(p, u + m * n)
        m += 1
    return 2.0 ** (level / 2.0) * out


# ---------------------------------------------------------------------------
# element evaluation


def _unit(system: FunctionSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    a, b = system.domain
    tol = 1e-12 * max(1.0, abs(a), abs(b))
    if x.size and (x.min() < a - tol or x.max() > b + tol):
        raise BasisError(f"grid nodes outside the domain {system.domain}")
    t = (x - a) / (b - a)
    # half-open cells: the right endpoint is identified with the left one
    return np.where(t >= 1.0, 0.0, np.clip(t, 0.0, None))


def _exp_table(theta: np.ndarray, w: np.ndarray, block: int = 64) -> np.ndarray:
    """``exp(1j * outer(theta, w))`` for integer ``w`` by angle addition.

    Two table lookups and one product per entry replace a complex exponential;
    the rounding error stays at a few ulps.
    """
    w = np.asarray(w, dtype=np.int64)
    if w.size == 0:
        return np.empty((theta.size, 0), dtype=complex)
    lo = int(w.min())
    d = w - lo
    fine = np.exp(1j * np.outer(theta, np.arange(min(block, int(d.max()) + 1))))
    coarse = np.exp(1j * np.outer(theta, block * np.arange(int(d.max()) // block + 1) + lo))
    return coarse[:, d // block] * fine[:, d % block]


def _legendre_table(t: np.ndarray, nmax: int) -> np.ndarray:
    """Orthonormal (on [-1, 1]) Legendre values, shape ``(len(t), nmax + 1)``."""
    out = np.empty((t.size, nmax + 1))
    out[:, 0] = np.sqrt(0.5)
    if nmax >= 1:
        out[:, 1] = np.sqrt(1.5) * t
    for n in range(1, nmax):
        a1 = np.sqrt((2 * n + 1) * (2 * n + 3)) / (n + 1)
        a0 = n / (n + 1) * np.sqrt((2 * n + 3) / (2 * n - 1))
        out[:, n + 1] = a1 * t * out[:, n] - a0 * out[:, n - 1]
    return out


def eval_block(system: FunctionSystem, indices, x) -> np.ndarray:
    """Values of several elements; shape ``(len(x), len(indices))``."""
    idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    check_index(system, idx)
    x = np.asarray(x, dtype=float)
    a, b = system.domain
    L = b - a
    if system.kind == "fourier":
        _unit(system, x)
        return _exp_table(2.0 * np.pi * x / L, fold_frequency(idx)) / np.sqrt(L)
    if system.kind == "legendre":
        _unit(system, x)
        t = np.clip(2.0 * (x - a) / L - 1.0, -1.0, 1.0)
        table = _legendre_table(t, int(idx.max()) - 1)
        return table[:, idx - 1] * np.sqrt(2.0 / L)
    t = _unit(system, x)
    out = np.empty((x.size, idx.size))
    levels, shifts = wavelet_label(idx)
    for c, (lev, sh) in enumerate(zip(np.atleast_1d(levels), np.atleast_1d(shifts))):
        if lev < 0:
            out[:, c] = 1.0
        elif system.kind == "haar":
            u = t * 2.0**lev - sh
            out[:, c] = 2.0 ** (lev / 2.0) * (
                ((u >= 0) & (u < 0.5)).astype(float) - ((u >= 0.5) & (u < 1.0)).astype(float)
            )
        else:
            out[:, c] = _periodic_wavelet(system.p, int(lev), int(sh), t)
    return out / np.sqrt(L)


def eval_element(system: FunctionSystem, j: int, grid) -> np.ndarray:
    """Values of the ``j``-th element on ``grid`` (a :class:`Grid` or array of points)."""
    x = grid.nodes if isinstance(grid, Grid) else grid
    vals = eval_block(system, [int(j)], x)[:, 0]
    return vals.astype(complex)


def inner_product(f, system: FunctionSystem, j: int, grid: Grid) -> complex:
    """Quadrature value of ``<f, element_j>`` (conjugate on the element)."""
    f = np.asarray(f)
    if f.shape != grid.nodes.shape:
        raise BasisError(f"function has {f.shape} samples, grid has {grid.nodes.shape}")
    return complex(np.dot(grid.weights * f, np.conj(eval_element(system, j, grid))))


@dataclass(frozen=True)
class CoeffVec:
    """Finite coefficient vector in ``system`` starting at 1-based ``offset``."""

    values: np.ndarray
    system: FunctionSystem | None = None
    offset: int = 1

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        if not np.all(np.isfinite(v)):
            raise BasisError("coefficients must be finite")
        if int(self.offset) < 1:
            raise BasisError("offset is 1-based")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.values.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def synthesize(coeffs: CoeffVec, grid, system: FunctionSystem | None = None) -> np.ndarray:
    """Pointwise ``sum_j beta_j phi_j`` on ``grid``."""
    system = system or coeffs.system
    if system is None:
        raise BasisError("no function system attached to the coefficients")
    x = grid.nodes if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    if len(coeffs) == 0:
        return np.zeros(x.size, dtype=complex)
    out = np.zeros(x.size, dtype=complex)
    idx = coeffs.indices
    # chunk columns to bound memory
    step = max(1, 2_000_000 // max(x.size, 1))
    for s in range(0, idx.size, step):
        block = eval_block(system, idx[s : s + step], x)
        out += block @ coeffs.values[s : s + step]
    return out
