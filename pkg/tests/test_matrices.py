import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.interpolate import BSpline

from curldiv.bspline import KnotVector, basis_matrix, cardinal_eval, gauss_legendre
from curldiv.matrices import (BandedMatrix1D, advection_matrix, central_rows, central_stencil,
                              factors_1d, mass_matrix, stiffness_matrix, toeplitz_mass_factor)
from curldiv.symbols import symbol_m


def _oracle_factors(p, n):
    """Interior Galerkin matrices from scipy's B-spline evaluator, 2(p+1) points per span."""
    kv = KnotVector(p, n)
    rule = gauss_legendre(2 * (p + 1))
    x = ((np.arange(n)[:, None] + rule.nodes[None, :]) / n).ravel()
    w = np.tile(rule.weights / n, n)
    B = BSpline.design_matrix(x, kv.knots, p).toarray()[:, 1:-1]
    dB = np.zeros_like(B)
    for j in range(B.shape[1]):
        c = np.zeros(kv.nbasis)
        c[j + 1] = 1.0
        dB[:, j] = BSpline(kv.knots, c, p).derivative()(x)
    return (B * w[:, None]).T @ B, (B * w[:, None]).T @ dB, (dB * w[:, None]).T @ dB


def test_scipy_basis_agrees():
    kv = KnotVector(4, 7)
    x = np.linspace(0, 1, 57)
    ref = BSpline.design_matrix(x, kv.knots, 4).toarray()
    assert np.abs(basis_matrix(kv, x) - ref).max() < 1e-14


@pytest.mark.parametrize("p", range(1, 7))
def test_factors_match_quadrature_oracle(p):
    n = 2 * p + 5
    M, A, S = factors_1d(p, n)
    Mo, Ao, So = _oracle_factors(p, n)
    assert np.abs(M.to_dense() - Mo).max() < 1e-12
    assert np.abs(A.to_dense() - Ao).max() < 1e-12
    assert np.abs(S.to_dense() - So).max() < 1e-12 * n


def test_mass_examples():
    n = 16
    M = mass_matrix(1, n).to_dense()
    assert np.allclose(M[5, 4:7], np.array([1 / 6, 2 / 3, 1 / 6]) / n, atol=1e-15)
    Mp = mass_matrix(3, n).to_dense()
    rows = list(central_rows(3, n))
    assert np.allclose(Mp.sum(axis=1)[rows], 1 / n, atol=1e-14)
    assert Mp[rows[0], rows[0]] == pytest.approx(cardinal_eval(7, 4.0) / n, abs=1e-15)


def test_advection_examples():
    A = advection_matrix(1, 10).to_dense()
    assert np.allclose(A[4, 3:6], [-0.5, 0.0, 0.5], atol=1e-15)
    A4 = advection_matrix(4, 20).to_dense()
    assert np.all(np.diag(A4) == 0.0)
    assert np.abs(A4 + A4.T).max() <= 1e-14


def test_stiffness_examples():
    n = 10
    S = stiffness_matrix(1, n).to_dense()
    assert np.allclose(S[4, 3:6], n * np.array([-1.0, 2.0, -1.0]), atol=1e-12)
    S2 = stiffness_matrix(2, 12).to_dense()
    stencil = central_stencil(2, 12, "stiffness")
    for i in range(3, 8):  # 1-based rows 4..8
        assert np.abs(S2[i, i - 2:i + 3] - stencil).max() < 1e-12


@pytest.mark.parametrize("p", range(1, 7))
def test_stiffness_row_sums_vanish_in_interior(p):
    n = 4 * p + 6
    sums = stiffness_matrix(p, n).to_dense().sum(axis=1)
    m = n + p - 2
    interior = np.arange(p, m - p)
    assert np.abs(sums[interior]).max() < 1e-11 * n
    boundary = np.r_[np.arange(p), np.arange(m - p, m)]
    assert np.all(np.abs(sums[boundary]) > 1e-8)


@pytest.mark.parametrize("p", range(1, 7))
def test_spd_factors(p):
    M, A, S = factors_1d(p, 3 * p + 4)
    assert np.linalg.eigvalsh(M.to_dense()).min() > 0
    assert np.linalg.eigvalsh(S.to_dense()).min() > 0
    assert M.symmetry == "symmetric" and S.symmetry == "symmetric" and A.symmetry == "skew"


@pytest.mark.parametrize("p", range(1, 7))
def test_mass_spectrum_inside_symbol_range_up_to_two_outliers(p):
    # At most two boundary eigenvalues of n M fall below min m_p, for every n.
    lo = symbol_m(p, np.linspace(0, np.pi, 2001)).min()
    for n in (16, 32, 64):
        ev = np.linalg.eigvalsh(n * mass_matrix(p, n).to_dense())
        assert np.count_nonzero(ev < lo - 1e-12) <= 2
        assert ev.max() <= 1.0 + 1e-12


def test_size_guard():
    with pytest.raises(ValueError):
        mass_matrix(3, 2)
    with pytest.raises(ValueError):
        stiffness_matrix(0, 5)


def test_toeplitz_mass_factor_examples():
    assert np.array_equal(toeplitz_mass_factor(1, 5).to_dense(), np.eye(5))
    T = toeplitz_mass_factor(2, 4).to_dense()
    ref = 2 / 3 * np.eye(4) + 1 / 6 * (np.eye(4, k=1) + np.eye(4, k=-1))
    assert np.abs(T - ref).max() < 1e-15
    T3 = toeplitz_mass_factor(3, 7)
    assert T3.half_bandwidth == 2
    assert np.allclose(np.diag(T3.to_dense()), 11 / 20, atol=1e-15)


def test_banded_matrix_roundtrip(rng):
    a = rng.standard_normal((9, 9))
    a = np.triu(np.tril(a, 2), -2)
    b = BandedMatrix1D.from_dense(a, 2)
    assert np.array_equal(b.to_dense(), a)
    assert np.array_equal(b.to_sparse().toarray(), a)
    assert np.array_equal(b.T.to_dense(), a.T)
    x = rng.standard_normal((9, 4, 3))
    for axis in range(3):
        if x.shape[axis] == 9:
            got = b.apply(x, axis)
            want = np.moveaxis(np.tensordot(a, np.moveaxis(x, axis, 0), axes=1), 0, axis)
            assert np.abs(got - want).max() < 1e-13


def test_banded_matrix_validation():
    with pytest.raises(ValueError):
        BandedMatrix1D(np.ones((3, 3)))  # corner slots must be zero
    with pytest.raises(ValueError):
        BandedMatrix1D.from_dense(np.array([[1.0, 2.0], [0.0, 1.0]]), 1, "symmetric")
    with pytest.raises(ValueError):
        BandedMatrix1D.from_dense(np.eye(4), 1).apply(np.ones(5))


@given(st.integers(1, 6), st.integers(0, 58))
def test_central_rows_dual_path(p, extra):
    n = p + 2 + extra
    M, A, S = factors_1d(p, n)
    for f, kind in ((M, "mass"), (A, "advection"), (S, "stiffness")):
        dense = f.to_dense()
        st_ = central_stencil(p, n, kind)
        for i in central_rows(p, n):
            assert np.abs(dense[i, i - p:i + p + 1] - st_).max() <= 1e-12 * max(1, n)
