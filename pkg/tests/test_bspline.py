from fractions import Fraction
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curldiv.bspline import (KnotVector, basis_eval, basis_matrix, cardinal_deriv, cardinal_eval,
                             cardinal_integer_values, composite_rule, gauss_legendre)


def _cardinal_exact(p, t):
    """Closed-form cardinal B-spline in exact rationals (truncated-power sum)."""
    t = Fraction(t)
    s = sum((-1) ** k * comb(p + 1, k) * max(t - k, 0) ** p for k in range(p + 2))
    return s / factorial(p)


@pytest.mark.parametrize("p,t,expected", [(1, 1.0, 1.0), (3, 2.0, 2 / 3), (5, 3.0, 11 / 20),
                                          (2, -0.5, 0.0)])
def test_cardinal_eval_examples(p, t, expected):
    assert cardinal_eval(p, t) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("p", range(1, 8))
def test_cardinal_eval_against_truncated_powers(p):
    ts = [Fraction(k, 7) for k in range(0, 7 * (p + 1) + 1)]
    got = cardinal_eval(p, np.array([float(t) for t in ts]))
    want = np.array([float(_cardinal_exact(p, t)) for t in ts])
    assert np.abs(got - want).max() < 1e-13


def test_cardinal_deriv_examples():
    assert cardinal_deriv(3, 1.0, 1) == pytest.approx(0.5, abs=1e-15)
    assert cardinal_deriv(3, 2.0, 2) == pytest.approx(-2.0, abs=1e-15)
    for p in range(2, 8):
        assert cardinal_deriv(p, (p + 1) / 2, 1) == pytest.approx(0.0, abs=1e-14)


def test_cardinal_deriv_rejects_discontinuous_orders():
    with pytest.raises(ValueError):
        cardinal_deriv(3, 1.0, 3)
    with pytest.raises(ValueError):
        cardinal_deriv(1, 0.5, 1)


def test_cardinal_deriv_matches_finite_difference():
    t = np.linspace(0.13, 4.87, 37)
    h = 1e-6
    fd = (cardinal_eval(4, t + h) - cardinal_eval(4, t - h)) / (2 * h)
    assert np.abs(cardinal_deriv(4, t, 1) - fd).max() < 1e-8


@given(st.integers(1, 8), st.floats(-3.0, 12.0))
def test_cardinal_partition_of_unity_and_positivity(p, t):
    v = cardinal_eval(p, t)
    assert v >= 0.0
    shifts = np.arange(np.floor(t) - p - 1, np.floor(t) + 2)
    assert sum(cardinal_eval(p, t - k) for k in shifts) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("p", range(1, 8))
def test_cardinal_symmetry(p):
    t = np.linspace(0.0, p + 1.0, 1001)
    assert np.abs(cardinal_eval(p, t) - cardinal_eval(p, p + 1.0 - t)).max() <= 1e-14


_PAIRS = [(p1, p2, r1, r2) for p1, p2 in [(1, 1), (2, 3), (3, 3), (5, 4), (5, 5)]
          for r1, r2 in [(0, 0), (0, 1), (1, 1)] if not ((r1 and p1 < 2) or (r2 and p2 < 2))]


@pytest.mark.parametrize("p1,p2,r1,r2", _PAIRS)
def test_inner_product_identity(p1, p2, r1, r2):
    # int phi_{p1}^(r1)(t) phi_{p2}^(r2)(t + tau) dt = (-1)^r1 phi_{p1+p2+1}^(r1+r2)(p1 + 1 + tau)
    rule = gauss_legendre(p1 + p2 + 2)
    for tau in range(-p2 - 1, p1 + 2):
        total = 0.0
        for cell in range(p1 + 1):
            x = cell + rule.nodes
            total += rule.weights @ (cardinal_deriv(p1, x, r1) * cardinal_deriv(p2, x + tau, r2))
        rhs = (-1) ** r1 * cardinal_deriv(p1 + p2 + 1, p1 + 1 + tau, r1 + r2)
        assert total == pytest.approx(rhs, abs=1e-12)


def test_integer_values_cached_and_exact():
    vals = cardinal_integer_values(3)
    assert vals == pytest.approx((0.0, 1 / 6, 2 / 3, 1 / 6, 0.0), abs=1e-16)
    assert cardinal_integer_values(3) is vals


def test_knot_vector():
    kv = KnotVector(3, 5)
    k = kv.knots
    assert np.all(k[:4] == 0.0) and np.all(k[-4:] == 1.0)
    assert np.allclose(k[3:-3], np.arange(6) / 5)
    assert kv.nbasis == 8
    with pytest.raises(ValueError):
        KnotVector(0, 5)
    with pytest.raises(ValueError):
        KnotVector(2, 0)


@given(st.integers(1, 6), st.integers(1, 20), st.floats(0.0, 1.0))
def test_partition_of_unity_and_derivative_sum(p, n, x):
    kv = KnotVector(p, n)
    assert basis_matrix(kv, [x]).sum() == pytest.approx(1.0, abs=1e-13)
    if 0.0 < x < 1.0:
        assert basis_matrix(kv, [x], 1).sum() == pytest.approx(0.0, abs=1e-9 * n)


def test_boundary_vanishing():
    kv = KnotVector(4, 9)
    vals = [basis_eval(kv, i, 0.0) for i in range(1, kv.nbasis + 1)]
    assert vals[0] == 1.0 and all(v == 0.0 for v in vals[1:-1])
    vals = [basis_eval(kv, i, 1.0) for i in range(1, kv.nbasis + 1)]
    assert vals[-1] == pytest.approx(1.0) and all(v == 0.0 for v in vals[1:-1])


def test_central_function_matches_cardinal():
    p, n, i = 3, 8, 6
    kv = KnotVector(p, n)
    x = np.linspace(0.0, 1.0, 41)
    assert np.abs(basis_eval(kv, i, x) - cardinal_eval(p, n * x - i + p + 1)).max() < 1e-14
    assert np.abs(basis_eval(kv, i, x[1:-1], 1)
                  - n * cardinal_deriv(p, n * x[1:-1] - i + p + 1, 1)).max() < 1e-12


def test_basis_eval_errors():
    kv = KnotVector(2, 4)
    with pytest.raises(IndexError):
        basis_eval(kv, 0, 0.5)
    with pytest.raises(IndexError):
        basis_eval(kv, kv.nbasis + 1, 0.5)
    with pytest.raises(ValueError):
        basis_eval(kv, 1, 1.5)


def test_gauss_legendre_examples():
    r1 = gauss_legendre(1)
    assert r1.nodes[0] == pytest.approx(0.5) and r1.weights[0] == pytest.approx(1.0)
    r2 = gauss_legendre(2)
    assert np.allclose(r2.nodes, [(3 - np.sqrt(3)) / 6, (3 + np.sqrt(3)) / 6], atol=1e-15)
    assert np.allclose(r2.weights, 0.5, atol=1e-15)
    r3 = gauss_legendre(3)
    assert r3.weights @ r3.nodes**5 == pytest.approx(1 / 6, abs=1e-14)
    for q in (0, 33):
        with pytest.raises(ValueError):
            gauss_legendre(q)


@given(st.integers(1, 32))
def test_gauss_legendre_exactness(q):
    rule = gauss_legendre(q)
    for k in (0, q, 2 * q - 1):
        assert rule.weights @ rule.nodes**k == pytest.approx(1.0 / (k + 1), rel=1e-13)


def test_composite_rule_integrates_piecewise():
    x, w = composite_rule(7, 3)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert w @ np.abs(x - 3 / 7) == pytest.approx((3 / 7) ** 2 / 2 + (4 / 7) ** 2 / 2, abs=1e-14)
