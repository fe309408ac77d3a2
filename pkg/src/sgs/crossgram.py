"""Finite sections of the cross-Gramian ``A[i, j] = <phi_j, psi_i>``.

Rows index the sampling system ``psi``, columns the reconstruction system
``phi``. Sections are dense; products with Fourier/Haar sections can use an
FFT plus fast Haar transform instead of the dense matrix.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import spherical_jn

from . import basis
from .basis import FunctionSystem, fold_frequency, wavelet_label

log = logging.getLogger(__name__)

__all__ = [
    "QuadratureError",
    "SectionMatrix",
    "assemble_section",
    "matvec",
    "min_singular_value",
    "closed_form_available",
    "dump_section",
    "load_section",
    "FourierHaarOperator",
    "fast_operator",
    "assemble_rows",
    "condition_number",
    "default_tolerance",
]

MAGIC = b"SGRM"


class QuadratureError(RuntimeError):
    """Quadrature refinement did not reach the requested accuracy."""

    def __init__(self, message: str, worst: float):
        super().__init__(f"{message} (worst entry deviation {worst:.3e})")
        self.worst = worst


def _as_range(r) -> tuple[int, int]:
    if isinstance(r, range):
        if r.step != 1 or len(r) == 0:
            raise ValueError("ranges must be nonempty with unit step")
        return r.start, r.stop - 1
    if isinstance(r, (int, np.integer)):
        if r < 1:
            raise ValueError(f"section size must be positive, got {r}")
        return 1, int(r)
    lo, hi = (int(v) for v in r)
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid 1-based inclusive range {r!r}")
    return lo, hi


@dataclass(frozen=True)
class SectionMatrix:
    """Dense block ``A[rows, cols]`` with 1-based inclusive index ranges."""

    entries: np.ndarray
    row_range: tuple[int, int]
    col_range: tuple[int, int]
    sampling_system: FunctionSystem | None = None
    reconstruction_system: FunctionSystem | None = None
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex, copy=True)
        if e.ndim != 2:
            raise ValueError("entries must be 2-D")
        r = _as_range(self.row_range)
        c = _as_range(self.col_range)
        if e.shape != (r[1] - r[0] + 1, c[1] - c[0] + 1):
            raise ValueError(f"entries shape {e.shape} does not match ranges {r}, {c}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "row_range", r)
        object.__setattr__(self, "col_range", c)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def rows(self) -> np.ndarray:
        return np.arange(self.row_range[0], self.row_range[1] + 1)

    @property
    def cols(self) -> np.ndarray:
        return np.arange(self.col_range[0], self.col_range[1] + 1)

    def sub(self, rows=None, cols=None) -> "SectionMatrix":
        """Restriction to sub-ranges (given as 1-based inclusive ranges)."""
        r = _as_range(rows) if rows is not None else self.row_range
        c = _as_range(cols) if cols is not None else self.col_range
        if r[0] < self.row_range[0] or r[1] > self.row_range[1]:
            raise ValueError("row range outside the section")
        if c[0] < self.col_range[0] or c[1] > self.col_range[1]:
            raise ValueError("column range outside the section")
        r0, c0 = self.row_range[0], self.col_range[0]
        block = self.entries[r[0] - r0 : r[1] - r0 + 1, c[0] - c0 : c[1] - c0 + 1]
        return SectionMatrix(block, r, c, self.sampling_system, self.reconstruction_system, dict(self.meta))

    def take_rows(self, rows) -> np.ndarray:
        """Dense rows for an arbitrary set of 1-based row indices."""
        rows = np.asarray(rows, dtype=np.int64)
        return self.entries[rows - self.row_range[0]]


# ---------------------------------------------------------------------------
# closed forms


def _expm1_ratio(z) -> np.ndarray:
    """``(exp(z) - 1) / z`` with the removable singularity filled in."""
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    nz = np.abs(z) > 1e-300
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _fourier_haar(fsys: FunctionSystem, hsys: FunctionSystem, rows, cols) -> np.ndarray:
    """``<haar_j, fourier_i>``; the Haar interval must lie inside the Fourier interval."""
    a, b = fsys.domain
    L = b - a
    c0, c1 = hsys.domain
    ell = c1 - c0
    w = fold_frequency(rows).astype(float)
    theta = 2.0 * np.pi * w / L
    # Fourier element exp(i theta x) / sqrt(L)
    levels, shifts = wavelet_label(cols)
    levels = np.atleast_1d(levels)
    shifts = np.atleast_1d(shifts)
    out = np.empty((w.size, levels.size), dtype=complex)
    for c, (lev, k) in enumerate(zip(levels, shifts)):
        if lev < 0:
            out[:, c] = np.exp(-1j * theta * c0) * ell * _expm1_ratio(-1j * theta * ell) / np.sqrt(ell * L)
        else:
            d = ell / 2.0 ** (lev + 1)
            x0 = c0 + ell * k / 2.0**lev
            amp = 2.0 ** (lev / 2.0) / np.sqrt(ell)
            out[:, c] = (
                amp * d * _expm1_ratio(-1j * theta * d) * np.exp(-1j * theta * x0)
                * (-np.expm1(-1j * theta * d)) / np.sqrt(L)
            )
    return out


def _fourier_legendre(fsys: FunctionSystem, psys: FunctionSystem, rows, cols) -> np.ndarray:
    """``<P_n, fourier_i>`` on a shared interval via spherical Bessel functions."""
    a, b = fsys.domain
    h = 0.5 * (b - a)
    c = 0.5 * (a + b)
    w = fold_frequency(rows).astype(float)
    n = np.asarray(cols, dtype=np.int64) - 1
    W, Nn = np.meshgrid(w, n, indexing="ij")
    jn = spherical_jn(Nn, np.pi * np.abs(W))
    sign = np.where((W < 0) & (Nn % 2 == 1), -1.0, 1.0)
    phase = (-1j) ** (Nn % 4)
    return np.sqrt(2 * Nn + 1) * phase * sign * jn * np.exp(-1j * np.pi * W * c / h)


def _m0(p: int, xi: np.ndarray) -> np.ndarray:
    h = basis._cascade(p).coeffs / np.sqrt(2.0)
    n = np.arange(h.size)
    return np.exp(-2j * np.pi * np.multiply.outer(xi, n)) @ h / np.sqrt(2.0)


def _phi_hat(p: int, xi: np.ndarray, terms: int = 64) -> np.ndarray:
    out = np.ones(np.shape(xi), dtype=complex)
    for m in range(1, terms + 1):
        out *= _m0(p, xi / 2.0**m)
    return out


def _psi_hat(p: int, xi: np.ndarray) -> np.ndarray:
    g = basis._cascade(p).hi
    n = np.arange(g.size)
    m1 = np.exp(-1j * np.pi * np.multiply.outer(xi, n)) @ g / np.sqrt(2.0)
    return m1 * _phi_hat(p, xi / 2.0)


def _fourier_daubechies(fsys: FunctionSystem, dsys: FunctionSystem, rows, cols) -> np.ndarray:
    """``<psi^per_{J,k}, fourier_i>`` on a shared interval via the infinite product."""
    a, b = fsys.domain
    L = b - a
    w = fold_frequency(rows).astype(float)
    levels, shifts = wavelet_label(cols)
    levels = np.atleast_1d(levels)
    shifts = np.atleast_1d(shifts)
    out = np.zeros((w.size, levels.size), dtype=complex)
    shift_phase = np.exp(-2j * np.pi * w * a / L)
    cache = {}
    for c, (lev, k) in enumerate(zip(levels, shifts)):
        if lev < 0:
            out[:, c] = (w == 0).astype(float)
            continue
        if lev not in cache:
            cache[lev] = _psi_hat(dsys.p, w / 2.0**lev)
        out[:, c] = 2.0 ** (-lev / 2.0) * np.exp(-2j * np.pi * w * k / 2.0**lev) * cache[lev]
    return out * shift_phase[:, None]


def _closed_form(samp: FunctionSystem, recon: FunctionSystem):
    """Closed-form entry generator for ``(samp, recon)``, or ``None``."""
    if samp.kind == "fourier":
        if recon.kind == "haar":
            a, b = samp.domain
            c, d = recon.domain
            if a <= c and d <= b:
                return lambda r, k: _fourier_haar(samp, recon, r, k)
        if recon.domain == samp.domain:
            if recon.kind == "legendre":
                return lambda r, k: _fourier_legendre(samp, recon, r, k)
            if recon.kind == "daubechies":
                return lambda r, k: _fourier_daubechies(samp, recon, r, k)
    return None


def closed_form_available(samp: FunctionSystem, recon: FunctionSystem) -> bool:
    if samp == recon:
        return True
    return _closed_form(samp, recon) is not None or _closed_form(recon, samp) is not None


# ---------------------------------------------------------------------------
# quadrature


def _pair_grid(samp: FunctionSystem, recon: FunctionSystem, rmax: int, cmax: int, refine: int = 1):
    lo = max(samp.domain[0], recon.domain[0])
    hi = min(samp.domain[1], recon.domain[1])
    if hi <= lo:
        return None
    freq = 0.0
    degree = 0
    dyadic = []
    for sys_, jmax in ((samp, rmax), (recon, cmax)):
        if sys_.kind == "fourier":
            freq += 2.0 * np.pi * (jmax // 2) / sys_.length
        elif sys_.kind == "legendre":
            degree_eff = (jmax - 1) * (hi - lo) / sys_.length
            degree += int(np.ceil(degree_eff))
        else:
            lev = int(wavelet_label(jmax)[0])
            extra = 1 if sys_.kind == "haar" else 4
            dyadic.append((sys_.domain, max(lev, 0) + extra))
    return basis.adapted_grid((lo, hi), frequency=freq, degree=degree, dyadic=dyadic, refine=refine)


def _quadrature_block(samp, recon, rows, cols, grid, chunk_elems: int = 4_000_000) -> np.ndarray:
    """``sum_q w_q phi_col(x_q) conj(psi_row(x_q))`` in row chunks."""
    x = grid.nodes
    phi = basis.eval_block(recon, cols, x) * grid.weights[:, None]
    out = np.empty((len(rows), len(cols)), dtype=complex)
    step = max(1, chunk_elems // max(x.size, 1))
    for s in range(0, len(rows), step):
        psi = basis.eval_block(samp, rows[s : s + step], x)
        out[s : s + step] = np.conj(psi).T @ phi
    return out


def _quadrature_section(samp, recon, rows, cols, tol, max_refine, rng_seed=0):
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    grid = _pair_grid(samp, recon, int(rows.max()), int(cols.max()))
    if grid is None:
        return np.zeros((rows.size, cols.size), dtype=complex), 0.0
    rng = np.random.default_rng(rng_seed)
    nprobe = min(24, rows.size * cols.size)
    pr = np.concatenate([[rows.size - 1, 0, rows.size - 1], rng.integers(0, rows.size, nprobe)])
    pc = np.concatenate([[cols.size - 1, cols.size - 1, 0], rng.integers(0, cols.size, nprobe)])
    worst = np.inf
    for level in range(max_refine + 1):
        fine = grid.refine(2)
        coarse_vals = np.array([_quadrature_block(samp, recon, rows[[i]], cols[[j]], grid)[0, 0] for i, j in zip(pr, pc)])
        fine_vals = np.array([_quadrature_block(samp, recon, rows[[i]], cols[[j]], fine)[0, 0] for i, j in zip(pr, pc)])
        worst = float(np.max(np.abs(coarse_vals - fine_vals)))
        if worst <= tol:
            log.debug("quadrature accepted: %d nodes, worst probe deviation %.2e", len(grid), worst)
            return _quadrature_block(samp, recon, rows, cols, grid), worst
        grid = fine
    raise QuadratureError(f"quadrature for {samp.describe()} x {recon.describe()} did not converge", worst)


def default_tolerance(samp: FunctionSystem, recon: FunctionSystem) -> float:
    # Daubechies wavelets with p >= 2 are only Holder continuous, which caps
    # the attainable Gauss-Legendre accuracy.
    rough = any(s.kind == "daubechies" and s.p >= 2 for s in (samp, recon))
    return 1e-6 if rough else 1e-10


def assemble_section(
    samp: FunctionSystem,
    recon: FunctionSystem,
    rows,
    cols,
    method: str = "auto",
    tol: float | None = None,
    max_refine: int = 4,
) -> SectionMatrix:
    """Dense section ``A[rows, cols]`` with ``A[i, j] = <phi_j, psi_i>``.

    Parameters
    ----------
    samp, recon : FunctionSystem
        Sampling system (rows) and reconstruction system (columns).
    rows, cols : range, int or (lo, hi)
        1-based inclusive index ranges; an int ``n`` means ``1..n``.
    method : {'auto', 'closed', 'quadrature'}
        ``auto`` uses a closed form when one exists and quadrature otherwise.
    tol : float, optional
        Quadrature acceptance threshold for the refinement check.
    """
    r = _as_range(rows)
    c = _as_range(cols)
    ridx = np.arange(r[0], r[1] + 1)
    cidx = np.arange(c[0], c[1] + 1)
    basis.check_index(samp, ridx)
    basis.check_index(recon, cidx)
    meta = {"method": method}
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown assembly method {method!r}")
    if method != "quadrature" and samp == recon:
        entries = (ridx[:, None] == cidx[None, :]).astype(complex)
        meta["method"] = "identity"
        return SectionMatrix(entries, r, c, samp, recon, meta)
    if method != "quadrature":
        gen = _closed_form(samp, recon)
        if gen is not None:
            meta["method"] = "closed"
            return SectionMatrix(gen(ridx, cidx), r, c, samp, recon, meta)
        rev = _closed_form(recon, samp)
        if rev is not None:
            meta["method"] = "closed"
            return SectionMatrix(np.conj(rev(cidx, ridx)).T, r, c, samp, recon, meta)
        if method == "closed":
            raise ValueError(f"no closed form for {samp.describe()} x {recon.describe()}")
    tol = default_tolerance(samp, recon) if tol is None else tol
    entries, worst = _quadrature_section(samp, recon, ridx, cidx, tol, max_refine)
    meta.update(method="quadrature", quadrature_deviation=worst)
    return SectionMatrix(entries, r, c, samp, recon, meta)


def assemble_rows(samp: FunctionSystem, recon: FunctionSystem, rows, cols, method: str = "auto") -> np.ndarray:
    """Dense rows ``A[rows, cols]`` for an arbitrary 1-based row index set.

    Closed forms are evaluated at the requested rows only; otherwise the
    enclosing range is assembled and subsampled.
    """
    ridx = np.asarray(rows, dtype=np.int64).ravel()
    c = _as_range(cols)
    cidx = np.arange(c[0], c[1] + 1)
    if ridx.size == 0:
        return np.zeros((0, cidx.size), dtype=complex)
    basis.check_index(samp, ridx)
    basis.check_index(recon, cidx)
    if method != "quadrature":
        if samp == recon:
            return (ridx[:, None] == cidx[None, :]).astype(complex)
        gen = _closed_form(samp, recon)
        if gen is not None:
            return np.asarray(gen(ridx, cidx), dtype=complex)
        rev = _closed_form(recon, samp)
        if rev is not None:
            return np.conj(rev(cidx, ridx)).T.copy()
    full = assemble_section(samp, recon, (int(ridx.min()), int(ridx.max())), c, method=method)
    return full.entries[ridx - int(ridx.min())].copy()


# ---------------------------------------------------------------------------
# products and spectra


def _haar_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Haar coefficients (constant first, level by level) -> scaled cell values ``sqrt(n) f``."""
    c = np.asarray(coeffs, dtype=complex)
    vals = c[:1].copy()
    n = 1
    while n < c.size:
        d = c[n : 2 * n]
        nxt = np.empty(2 * n, dtype=complex)
        nxt[0::2] = (vals + d) / np.sqrt(2.0)
        nxt[1::2] = (vals - d) / np.sqrt(2.0)
        vals = nxt
        n *= 2
    return vals


def _haar_forward(vals: np.ndarray) -> np.ndarray:
    """Adjoint (and inverse) of :func:`_haar_inverse`."""
    v = np.asarray(vals, dtype=complex)
    details = []
    while v.size > 1:
        a = (v[0::2] + v[1::2]) / np.sqrt(2.0)
        d = (v[0::2] - v[1::2]) / np.sqrt(2.0)
        details.append(d)
        v = a
    return np.concatenate([v] + details[::-1])


class FourierHaarOperator:
    """FFT-based products with a Fourier/Haar section on a shared interval.

    Columns must be ``1..2**J``; rows may be any frequency set.
    """

    def __init__(self, samp: FunctionSystem, recon: FunctionSystem, rows, ncols: int):
        if samp.kind != "fourier" or recon.kind != "haar" or samp.domain != recon.domain:
            raise ValueError("fast path needs Fourier rows and Haar columns on the same interval")
        n = int(ncols)
        if n < 1 or n & (n - 1):
            raise ValueError("fast path needs a dyadic number of Haar columns")
        self.n = n
        self.rows = np.asarray(rows, dtype=np.int64)
        self.shape = (self.rows.size, n)
        w = fold_frequency(self.rows)
        a = samp.domain[0]
        L = samp.length
        # cell values of sum beta_j phi_j are sqrt(n / L) * haar_inverse(beta)
        self.factor = (
            _expm1_ratio(-2j * np.pi * w / n) * np.exp(-2j * np.pi * w * a / L) / np.sqrt(n)
        )
        self.bins = np.mod(w, n)

    def matvec(self, x) -> np.ndarray:
        cells = _haar_inverse(x)
        return self.factor * np.fft.fft(cells)[self.bins]

    def rmatvec(self, y) -> np.ndarray:
        acc = np.zeros(self.n, dtype=complex)
        np.add.at(acc, self.bins, np.conj(self.factor) * np.asarray(y, dtype=complex))
        cells = np.fft.ifft(acc) * self.n
        return _haar_forward(cells)


def matvec(A: SectionMatrix, x, adjoint: bool = False, fast: bool = False) -> np.ndarray:
    """``A @ x`` or ``A^* @ x``; ``fast`` selects the FFT path when it applies."""
    x = np.asarray(x)
    need = A.shape[0] if adjoint else A.shape[1]
    if x.shape != (need,):
        raise ValueError(f"vector of length {need} expected, got shape {x.shape}")
    if fast:
        op = fast_operator(A)
        if op is not None:
            return op.rmatvec(x) if adjoint else op.matvec(x)
    return A.entries.conj().T @ x if adjoint else A.entries @ x


def fast_operator(A: SectionMatrix):
    s, r = A.sampling_system, A.reconstruction_system
    if s is None or r is None or s.kind != "fourier" or r.kind != "haar" or s.domain != r.domain:
        return None
    n = A.shape[1]
    if A.col_range[0] != 1 or n & (n - 1):
        return None
    return FourierHaarOperator(s, r, A.rows, n)


def min_singular_value(A) -> float:
    """Smallest of the ``ncols`` singular values; zero for wide sections."""
    M = A.entries if isinstance(A, SectionMatrix) else np.asarray(A)
    if M.shape[0] < M.shape[1]:
        return 0.0
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def condition_number(A) -> float:
    M = A.entries if isinstance(A, SectionMatrix) else np.asarray(A)
    s = np.linalg.svd(M, compute_uv=False)
    if M.shape[0] < M.shape[1] or s[-1] == 0:
        return np.inf
    return float(s[0] / s[-1])


# ---------------------------------------------------------------------------
# binary dump


def dump_section(A: SectionMatrix, path) -> None:
    """Little-endian ``SGRM`` dump: magic, rows, cols, range metadata, complex64 data.

    The range metadata word holds the first row index in its low 16 bits and
    the first column index in its high 16 bits.
    """
    r0, c0 = A.row_range[0], A.col_range[0]
    if r0 >= 2**16 or c0 >= 2**16:
        raise ValueError("range offsets must fit in 16 bits")
    nr, nc = A.shape
    header = MAGIC + struct.pack("<III", nr, nc, (c0 << 16) | r0)
    data = np.ascontiguousarray(A.entries, dtype="<c8").tobytes()
    Path(path).write_bytes(header + data)


def load_section(path, samp=None, recon=None) -> SectionMatrix:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError("not an SGRM file")
    nr, nc, meta = struct.unpack("<III", raw[4:16])
    r0, c0 = meta & 0xFFFF, meta >> 16
    data = np.frombuffer(raw[16:], dtype="<c8")
    if data.size != nr * nc:
        raise ValueError("truncated SGRM payload")
    return SectionMatrix(
        data.reshape(nr, nc).astype(complex), (r0, r0 + nr - 1), (c0, c0 + nc - 1), samp, recon
    )
