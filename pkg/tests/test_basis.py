import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgs import basis
from sgs.basis import BasisError, CoeffVec, Grid


def gram(system, M, grid):
    V = basis.eval_block(system, np.arange(1, M + 1), grid.nodes)
    return np.conj(V).T @ (grid.weights[:, None] * V)


def dyadic_grid(domain, level, order=16):
    return basis.adapted_grid(domain, dyadic=[(domain, level)], order=order)


@pytest.mark.parametrize(
    "system",
    [basis.fourier(0, 1), basis.fourier(-1, 1), basis.legendre(-1, 1), basis.legendre(0, 1), basis.haar(0, 1)],
    ids=lambda s: s.describe(),
)
def test_gram_identity(system):
    M = 64
    if system.kind == "fourier":
        grid = basis.adapted_grid(system.domain, frequency=2 * np.pi * 33 / system.length)
    elif system.kind == "legendre":
        grid = basis.adapted_grid(system.domain, degree=M)
    else:
        grid = dyadic_grid(system.domain, 6)
    assert np.abs(gram(system, M, grid) - np.eye(M)).max() < 1e-10


# low regularity of the p = 2 scaling function limits panel quadrature accuracy
@pytest.mark.parametrize("p, tol", [(1, 1e-10), (2, 2e-6), (3, 1e-7)])
def test_daubechies_gram(p, tol):
    s = basis.daubechies(p, 0, 1)
    grid = dyadic_grid(s.domain, 10)
    assert np.abs(gram(s, 32, grid) - np.eye(32)).max() < tol


def test_fold_ordering():
    assert basis.fold_frequency(np.arange(1, 8)).tolist() == [0, 1, -1, 2, -2, 3, -3]
    j = np.arange(1, 1025)
    assert np.array_equal(basis.fold_index(basis.fold_frequency(j)), j)
    assert np.unique(basis.fold_frequency(j)).size == j.size


def test_wavelet_labels():
    assert basis.wavelet_label(1) == (-1, 0)
    assert basis.wavelet_label(2) == (0, 0)
    assert basis.wavelet_label(3) == (1, 0)
    assert basis.wavelet_label(4) == (1, 1)
    assert basis.wavelet_label(5) == (2, 0)
    lev, sh = basis.wavelet_label(np.arange(2, 1025))
    pairs = set(zip(lev.tolist(), sh.tolist()))
    assert len(pairs) == 1023
    assert all(0 <= k < 2**J for J, k in pairs)


def test_fourier_constant_and_modulus():
    f = basis.fourier(0, 1)
    g = Grid.composite(0, 1, 8)
    assert np.allclose(basis.eval_element(f, 1, g), 1.0)
    vals = basis.eval_element(basis.fourier(-1, 1), 7, Grid.composite(-1, 1, 8))
    assert np.allclose(np.abs(vals), 1 / np.sqrt(2), atol=1e-14)


def test_haar_father_constant():
    g = Grid.composite(0, 1, 8)
    assert np.allclose(basis.eval_element(basis.haar(0, 1), 1, g), 1.0)


def test_legendre_degree_two_value():
    # orthonormal degree-2 Legendre on [0,1] is sqrt(5) P_2(2x-1); at x=0.5 this is -sqrt(5)/2
    val = basis.eval_block(basis.legendre(0, 1), [3], np.array([0.5]))[0, 0]
    assert val == pytest.approx(-np.sqrt(5) / 2, abs=1e-13)


def test_inner_product_linear_function():
    # int_0^1 x exp(-2 pi i x) dx = i / (2 pi)
    grid = Grid.composite(0, 1, 16, 20)
    f = grid.nodes.astype(complex)
    val = basis.inner_product(f, basis.fourier(0, 1), 2, grid)
    assert val == pytest.approx(1j / (2 * np.pi), abs=1e-13)


def test_inner_product_orthonormality():
    s = basis.fourier(0, 1)
    grid = Grid.composite(0, 1, 32, 20)
    e5 = basis.eval_element(s, 5, grid)
    assert basis.inner_product(e5, s, 5, grid) == pytest.approx(1, abs=1e-10)
    assert abs(basis.inner_product(e5, s, 6, grid)) < 1e-10


def test_inner_product_length_mismatch():
    grid = Grid.composite(0, 1, 4)
    with pytest.raises((ValueError, BasisError)):
        basis.inner_product(np.ones(3), basis.fourier(0, 1), 1, grid)


def test_synthesize_trivial():
    grid = Grid.composite(0, 1, 8)
    h = basis.haar(0, 1)
    assert np.allclose(basis.synthesize(CoeffVec(np.eye(8)[0], h), grid), 1.0)
    assert np.allclose(basis.synthesize(CoeffVec(np.zeros(8), h), grid), 0.0)


def test_synthesize_legendre_spectral():
    s = basis.legendre(-1, 1)
    grid = basis.adapted_grid(s.domain, degree=64, order=20)
    f = grid.nodes**5 * np.exp(-grid.nodes)
    coeffs = np.array([basis.inner_product(f, s, j, grid) for j in range(1, 33)])
    rec = basis.synthesize(CoeffVec(coeffs, s), grid)
    assert np.abs(rec - f).max() < 1e-6


def test_daubechies_one_matches_haar():
    x = np.linspace(0, 1, 2001, endpoint=False)
    A = basis.eval_block(basis.daubechies(1), np.arange(1, 33), x)
    B = basis.eval_block(basis.haar(), np.arange(1, 33), x)
    assert np.abs(A - B).max() < 1e-10


def test_cascade_partition_of_unity():
    x = np.linspace(-3, 3, 1001)
    phi = sum(basis.scaling_function(2, x - k) for k in range(-6, 7))
    assert np.abs(phi - 1).max() < 1e-8


def test_index_errors():
    with pytest.raises(BasisError):
        basis.eval_block(basis.legendre(), [basis.LEGENDRE_MAX_DEGREE + 2], np.array([0.0]))
    with pytest.raises(BasisError):
        basis.eval_block(basis.fourier(), [0], np.array([0.5]))
    with pytest.raises(BasisError):
        basis.eval_block(basis.haar(0, 1), [1], np.array([1.5]))


def test_invalid_systems():
    with pytest.raises(BasisError):
        basis.FunctionSystem("chebyshev")
    with pytest.raises(BasisError):
        basis.fourier(1, 0)
    with pytest.raises(BasisError):
        basis.daubechies(0)


def test_grid_weights_sum():
    g = Grid.composite(-1, 2, 37, 11)
    assert g.weights.sum() == pytest.approx(3.0, abs=1e-12)
    assert np.all(np.diff(g.nodes) > 0)
    r = g.refine(3)
    assert r.weights.sum() == pytest.approx(3.0, abs=1e-12)
    assert len(r) == 3 * len(g)


@settings(max_examples=25, deadline=None)
@given(
    kind=st.sampled_from(["fourier", "legendre", "haar"]),
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(1, 40),
)
def test_parseval(kind, seed, n):
    system = {"fourier": basis.fourier(0, 1), "legendre": basis.legendre(0, 1), "haar": basis.haar(0, 1)}[kind]
    rng = np.random.default_rng(seed)
    beta = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if kind == "haar":
        grid = dyadic_grid(system.domain, 6)
    else:
        grid = basis.adapted_grid(system.domain, frequency=2 * np.pi * n, degree=n)
    vals = basis.synthesize(CoeffVec(beta, system), grid)
    assert grid.norm(vals) == pytest.approx(np.linalg.norm(beta), abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2**30))
def test_fold_roundtrip(j):
    assert int(basis.fold_index(basis.fold_frequency(j))) == j


def test_coeffvec_rejects_nonfinite():
    with pytest.raises((ValueError, BasisError)):
        CoeffVec(np.array([1.0, np.nan]), basis.haar())
