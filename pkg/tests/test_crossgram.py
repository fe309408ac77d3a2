import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgs import basis
from sgs.crossgram import (
    SectionMatrix,
    assemble_rows,
    assemble_section,
    condition_number,
    dump_section,
    fast_operator,
    load_section,
    matvec,
    min_singular_value,
)

F01 = basis.fourier(0, 1)
H01 = basis.haar(0, 1)


def oracle(samp, recon, i, j, grid):
    """Entry <phi_j, psi_i> by direct quadrature."""
    phi = basis.eval_block(recon, [j], grid.nodes)[:, 0]
    return basis.inner_product(phi, samp, i, grid)


def test_identity_sections():
    A = assemble_section(H01, H01, 4, 4)
    assert np.array_equal(A.entries, np.eye(4))
    B = assemble_section(F01, F01, (3, 7), (3, 7))
    assert np.array_equal(B.entries, np.eye(5))


def test_zero_mean_wavelet_entry():
    A = assemble_section(F01, H01, 1, 2)
    assert abs(A.entries[0, 1]) < 1e-15


@pytest.mark.parametrize(
    "samp, recon, grid",
    [
        (F01, H01, basis.adapted_grid((0, 1), frequency=2 * np.pi * 20, dyadic=[((0, 1), 6)], order=20)),
        (basis.fourier(-1, 1), H01, basis.adapted_grid((0, 1), frequency=np.pi * 20, dyadic=[((0, 1), 6)], order=20)),
        (F01, basis.legendre(0, 1), basis.adapted_grid((0, 1), frequency=2 * np.pi * 20, degree=40, order=20)),
        (basis.fourier(-1, 1), basis.legendre(-1, 1), basis.adapted_grid((-1, 1), frequency=np.pi * 20, degree=40, order=20)),
    ],
    ids=["FH", "FH-wide", "FL01", "FL"],
)
def test_closed_form_matches_quadrature(samp, recon, grid):
    A = assemble_section(samp, recon, 32, 32)
    rng = np.random.default_rng(3)
    for i, j in rng.integers(1, 33, size=(15, 2)):
        assert A.entries[i - 1, j - 1] == pytest.approx(oracle(samp, recon, i, j, grid), abs=1e-10)


def test_fourier_legendre_quadrature_path():
    L = basis.legendre(0, 1)
    closed = assemble_section(F01, L, 8, 8, method="closed")
    quad = assemble_section(F01, L, 8, 8, method="quadrature")
    assert np.abs(closed.entries - quad.entries).max() < 1e-9
    assert quad.meta["method"] == "quadrature"


def test_daubechies_closed_form():
    D = basis.daubechies(2, 0, 1)
    closed = assemble_section(F01, D, 12, 8, method="closed")
    quad = assemble_section(F01, D, 12, 8, method="quadrature")
    assert np.abs(closed.entries - quad.entries).max() < 1e-5


def test_nesting_exact():
    big = assemble_section(F01, H01, 64, 64)
    small = assemble_section(F01, H01, (5, 20), (3, 17))
    assert np.array_equal(big.sub((5, 20), (3, 17)).entries, small.entries)


def test_assemble_rows_matches_section():
    A = assemble_section(F01, H01, 40, 16)
    rows = np.array([3, 17, 40, 9])
    assert np.array_equal(assemble_rows(F01, H01, rows, 16), A.entries[rows - 1])
    L = basis.legendre(0, 1)
    B = assemble_section(L, F01, 10, 6)
    assert np.allclose(assemble_rows(L, F01, [2, 7], 6), B.entries[[1, 6]], atol=1e-13)


def test_matvec_trivial():
    A = assemble_section(H01, H01, 8, 8)
    x = np.arange(8.0)
    assert np.allclose(matvec(A, x), x)
    B = assemble_section(F01, H01, 16, 8)
    assert np.allclose(matvec(B, np.eye(8)[2]), B.entries[:, 2])


def test_matvec_dimension_mismatch():
    A = assemble_section(F01, H01, 16, 8)
    with pytest.raises(ValueError):
        matvec(A, np.ones(9))


@pytest.mark.parametrize("rows, cols", [(64, 64), (128, 64), (100, 32)])
def test_fast_path(rows, cols):
    A = assemble_section(F01, H01, rows, cols)
    op = fast_operator(A)
    assert op is not None
    rng = np.random.default_rng(0)
    x = rng.standard_normal(cols) + 1j * rng.standard_normal(cols)
    y = rng.standard_normal(rows) + 1j * rng.standard_normal(rows)
    assert np.abs(matvec(A, x, fast=True) - A.entries @ x).max() < 1e-10
    assert np.abs(matvec(A, y, adjoint=True, fast=True) - A.entries.conj().T @ y).max() < 1e-10


def test_min_singular_value_trivial():
    assert min_singular_value(assemble_section(H01, H01, 6, 6)) == pytest.approx(1.0)
    tall = SectionMatrix(np.vstack([np.eye(4), np.zeros((3, 4))]), (1, 7), (1, 4))
    assert min_singular_value(tall) == pytest.approx(1.0)
    wide = SectionMatrix(np.eye(3, 5), (1, 3), (1, 5))
    assert min_singular_value(wide) == 0.0


def test_fourier_legendre_square_decay():
    F, L = basis.fourier(-1, 1), basis.legendre(-1, 1)
    ns = np.array([9, 13, 17, 21, 23])
    s = np.array([min_singular_value(assemble_section(F, L, n, n)) for n in ns])
    assert np.all(np.diff(s) < 0)
    # frozen SVD values; the 1e-3 level is crossed at N = 23
    assert s[3] == pytest.approx(2.1558186425e-3, rel=1e-6)
    assert s[4] < 1e-3
    slope = np.polyfit(ns, np.log(s), 1)[0]
    assert slope < -0.3
    assert condition_number(assemble_section(F, L, 21, 21)) == pytest.approx(463.86091, rel=1e-6)


def test_dump_roundtrip(tmp_path):
    A = assemble_section(F01, H01, (3, 10), (2, 6))
    path = tmp_path / "a.sgrm"
    dump_section(A, path)
    raw = path.read_bytes()
    assert raw[:4] == b"SGRM"
    B = load_section(path, F01, H01)
    assert B.row_range == A.row_range and B.col_range == A.col_range
    assert np.abs(B.entries - A.entries).max() < 1e-6  # complex64 payload


def test_invalid_ranges():
    with pytest.raises(ValueError):
        assemble_section(F01, H01, (0, 4), 4)
    with pytest.raises(ValueError):
        assemble_section(F01, H01, 4, 4, method="spline")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 48), m=st.integers(1, 48))
def test_adjoint_consistency(seed, n, m):
    A = assemble_section(F01, H01, n, m)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    lhs = np.vdot(y, matvec(A, x))
    rhs = np.vdot(matvec(A, y, adjoint=True), x)
    assert abs(lhs - rhs) < 1e-10


@settings(max_examples=10, deadline=None)
@given(M=st.integers(1, 32), n0=st.integers(1, 40), extra=st.integers(1, 40))
def test_sigma_min_grows_with_rows(M, n0, extra):
    big = assemble_section(F01, H01, n0 + extra, M)
    a = min_singular_value(big.sub((1, n0), (1, M)))
    b = min_singular_value(big)
    assert b >= a - 1e-12
