"""Cardinal B-splines, open uniform B-spline bases and Gauss-Legendre rules.

The cardinal B-spline ``phi_p`` is the degree-``p`` B-spline on the integer
knots ``0, 1, ..., p + 1``.  Interior functions of the open uniform basis on
``[0, 1]`` are shifted and scaled copies of it, which is what makes the
Galerkin matrices Toeplitz away from the boundary.

All evaluators are right-continuous: at a knot where a derivative jumps, the
value from the right is returned.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

MAX_DEGREE = 8


def _check_degree(p: int) -> None:
    if int(p) != p or p < 1:
        raise ValueError(f"spline degree must be a positive integer, got {p!r}")
    if p > MAX_DEGREE:
        raise ValueError(f"spline degree {p} exceeds the supported maximum {MAX_DEGREE}")


def cardinal_eval(p: int, t):
    """Evaluate the cardinal B-spline of degree `p` at `t`.

    Parameters
    ----------
    p : int
        Degree, ``p >= 0``.
    t : float or array_like
        Evaluation points; anything outside ``[0, p + 1]`` gives 0.

    Returns
    -------
    float or ndarray
        ``phi_p(t)``, same shape as `t`.
    """
    if int(p) != p or p < 0:
        raise ValueError(f"cardinal degree must be a nonnegative integer, got {p!r}")
    t_arr = np.asarray(t, dtype=float)
    # v[j] holds phi_k(t - j) for j = 0..p while k climbs from 0 to p.
    shifts = np.arange(p + 1, dtype=float).reshape((-1,) + (1,) * t_arr.ndim)
    s = t_arr[None, ...] - shifts
    v = ((s >= 0.0) & (s < 1.0)).astype(float)
    for k in range(1, p + 1):
        nxt = np.zeros_like(v)
        nxt[: p + 1 - k] = (s[: p + 1 - k] * v[: p + 1 - k]
                            + (k + 1 - s[: p + 1 - k]) * v[1: p + 2 - k]) / k
        v = nxt
    out = v[0]
    return float(out) if np.ndim(t) == 0 else out


def cardinal_deriv(p: int, t, r: int):
    """Evaluate the `r`-th derivative of the cardinal B-spline of degree `p`.

    Uses ``phi_p^(r)(t) = sum_k (-1)^k C(r, k) phi_{p-r}(t - k)``, so only
    derivatives that are continuous functions (``r <= p - 1``) are accepted.
    """
    if int(r) != r or r < 0:
        raise ValueError(f"derivative order must be a nonnegative integer, got {r!r}")
    if r >= max(p, 1):
        if r == 0:
            return cardinal_eval(p, t)
        raise ValueError(f"derivative of order {r} of phi_{p} is not continuous")
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    for k in range(r + 1):
        out = out + (-1) ** k * comb(r, k) * np.asarray(cardinal_eval(p - r, t_arr - k))
    return float(out) if np.ndim(t) == 0 else out


@lru_cache(maxsize=None)
def cardinal_integer_values(p: int, r: int = 0) -> tuple[float, ...]:
    """``phi_p^(r)(k)`` for ``k = 0, ..., p + 1`` (cached)."""
    return tuple(float(v) for v in np.atleast_1d(cardinal_deriv(p, np.arange(p + 2.0), r)))


@dataclass(frozen=True)
class KnotVector:
    """Open uniform knot vector of degree `p` with `n` equal intervals on [0, 1]."""

    p: int
    n: int

    def __post_init__(self):
        _check_degree(self.p)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"number of intervals must be a positive integer, got {self.n!r}")

    @property
    def knots(self) -> np.ndarray:
        inner = np.arange(self.n + 1) / self.n
        return np.concatenate([np.zeros(self.p), inner, np.ones(self.p)])

    @property
    def nbasis(self) -> int:
        return self.n + self.p

    def greville(self) -> np.ndarray:
        """Knot averages, one per basis function."""
        k = self.knots
        p = self.p
        return np.array([k[i + 1: i + p + 1].mean() for i in range(self.nbasis)])

    def span(self, x) -> np.ndarray:
        """0-based index of the knot interval containing `x` (last one closed)."""
        x = np.asarray(x, dtype=float)
        cell = np.clip(np.floor(x * self.n).astype(int), 0, self.n - 1)
        return cell


def _basis_nonzero(kv: KnotVector, x: np.ndarray, r: int):
    """Values (r=0) or first derivatives (r=1) of the p+1 nonzero functions at x.

    Returns ``(first, vals)`` where ``vals[:, a]`` belongs to basis function
    ``first + a`` (0-based).
    """
    p, knots = kv.p, kv.knots
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cell = kv.span(x)
    mu = cell + p  # knot index with knots[mu] <= x < knots[mu + 1]
    # Cox-de Boor triangle for degree p - r, then differentiate once if asked.
    deg = p - r
    vals = np.zeros((x.size, deg + 1))
    vals[:, 0] = 1.0
    for k in range(1, deg + 1):
        new = np.zeros_like(vals)
        for a in range(k + 1):
            i = mu - k + a  # 0-based function index N_i^k
            left = np.zeros(x.size)
            right = np.zeros(x.size)
            if a >= 1:
                den = knots[i + k] - knots[i]
                ok = den > 0
                left[ok] = (x[ok] - knots[i][ok]) / den[ok] * vals[ok, a - 1]
            if a <= k - 1:
                den = knots[i + k + 1] - knots[i + 1]
                ok = den > 0
                right[ok] = (knots[i + k + 1][ok] - x[ok]) / den[ok] * vals[ok, a]
            new[:, a] = left + right
        vals = new
    if r == 1:
        d = np.zeros((x.size, p + 1))
        for a in range(p + 1):
            i = mu - p + a
            if a >= 1:
                den = knots[i + p] - knots[i]
                ok = den > 0
                d[ok, a] += p / den[ok] * vals[ok, a - 1]
            if a <= p - 1:
                den = knots[i + p + 1] - knots[i + 1]
                ok = den > 0
                d[ok, a] -= p / den[ok] * vals[ok, a]
        vals = d
    return mu - p, vals


def basis_matrix(kv: KnotVector, x, r: int = 0) -> np.ndarray:
    """Dense matrix ``B[k, i] = (N_{i+1}^p)^(r)(x_k)`` over all ``n + p`` functions."""
    if r not in (0, 1):
        raise ValueError("only r = 0 or r = 1 is supported")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    first, vals = _basis_nonzero(kv, x, r)
    out = np.zeros((x.size, kv.nbasis))
    rows = np.arange(x.size)
    for a in range(kv.p + 1):
        out[rows, first + a] = vals[:, a]
    return out


def basis_eval(kv: KnotVector, i: int, x, r: int = 0):
    """Evaluate ``N_i^p`` (1-based `i`) or its first derivative at `x`."""
    if int(i) != i or not 1 <= i <= kv.nbasis:
        raise IndexError(f"basis index {i} outside 1..{kv.nbasis}")
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0.0) | (x_arr > 1.0)):
        raise ValueError("evaluation points must lie in [0, 1]")
    col = basis_matrix(kv, x_arr.ravel(), r)[:, i - 1].reshape(x_arr.shape)
    return float(col) if np.ndim(x) == 0 else col


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)


@lru_cache(maxsize=None)
def gauss_legendre(q: int) -> QuadratureRule:
    """`q`-point Gauss-Legendre rule on [0, 1]; exact up to degree ``2q - 1``."""
    if int(q) != q or not 1 <= q <= 32:
        raise ValueError(f"number of quadrature points must be in 1..32, got {q!r}")
    x, w = np.polynomial.legendre.leggauss(int(q))
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)


def composite_rule(n: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-span Gauss rule on the uniform mesh of [0, 1] with `n` intervals."""
    rule = gauss_legendre(q)
    left = np.arange(n)[:, None] / n
    x = (left + rule.nodes[None, :] / n).ravel()
    w = np.tile(rule.weights / n, n)
    return x, w
