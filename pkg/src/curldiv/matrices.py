"""Banded storage and the 1D mass, advection and stiffness factors.

The factors live on the ``m = n + p - 2`` B-splines that vanish at both ends
of [0, 1] (homogeneous Dirichlet conditions).  Rows near the boundary come
from per-span Gauss quadrature; the Toeplitz centre is filled from cardinal
B-spline values after checking that both routes agree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bspline import (KnotVector, _check_degree, basis_matrix, cardinal_integer_values,
                      composite_rule)

_SYMMETRY_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class BandedMatrix1D:
    """Square banded matrix in row-major diagonal-offset layout.

    ``data[i, w + k]`` stores entry ``(i, i + k)`` for ``-w <= k <= w``;
    slots that fall outside the matrix are kept at zero.
    """

    data: np.ndarray
    symmetry: str = "general"
    _dense_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] % 2 != 1:
            raise ValueError("band storage must have shape (m, 2w + 1)")
        m, w = data.shape[0], data.shape[1] // 2
        rows = np.arange(m)[:, None]
        cols = rows + np.arange(-w, w + 1)[None, :]
        if np.any(data[(cols < 0) | (cols >= m)] != 0.0):
            raise ValueError("entries outside the matrix must be zero")
        if self.symmetry not in ("symmetric", "skew", "general"):
            raise ValueError(f"unknown symmetry tag {self.symmetry!r}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.symmetry != "general":
            dense = self.to_dense()
            sign = 1.0 if self.symmetry == "symmetric" else -1.0
            scale = max(1.0, np.abs(dense).max())
            if np.abs(dense - sign * dense.T).max() > _SYMMETRY_TOL * scale:
                raise ValueError(f"band contents are not {self.symmetry}")

    @property
    def size(self) -> int:
        return self.data.shape[0]

    @property
    def half_bandwidth(self) -> int:
        return self.data.shape[1] // 2

    @property
    def shape(self):
        return (self.size, self.size)

    @classmethod
    def from_dense(cls, a, half_bandwidth: int | None = None, symmetry: str = "general",
                   tol: float = 0.0) -> "BandedMatrix1D":
        """Pack a dense matrix; entries beyond the band must be ``<= tol``."""
        a = np.asarray(a, dtype=float)
        m = a.shape[0]
        offs = np.subtract.outer(np.arange(m), np.arange(m))
        if half_bandwidth is None:
            nz = np.abs(a) > tol
            half_bandwidth = int(np.abs(offs[nz]).max()) if nz.any() else 0
        w = half_bandwidth
        outside = np.abs(offs) > w
        if outside.any() and np.abs(a[outside]).max() > tol:
            raise ValueError("matrix has entries outside the requested band")
        data = np.zeros((m, 2 * w + 1))
        for k in range(-w, w + 1):
            d = np.diagonal(a, k)
            if k >= 0:
                data[: m - k, w + k] = d
            else:
                data[-k:, w + k] = d
        return cls(data, symmetry)

    def to_dense(self) -> np.ndarray:
        if "dense" not in self._dense_cache:
            m, w = self.size, self.half_bandwidth
            out = np.zeros((m, m))
            for k in range(-w, w + 1):
                if k >= 0:
                    idx = np.arange(m - k)
                    out[idx, idx + k] = self.data[: m - k, w + k]
                else:
                    idx = np.arange(-k, m)
                    out[idx, idx + k] = self.data[-k:, w + k]
            out.setflags(write=False)
            self._dense_cache["dense"] = out
        return self._dense_cache["dense"]

    def to_sparse(self):
        import scipy.sparse as sp

        return sp.csr_matrix(self.to_dense())

    def transpose(self) -> "BandedMatrix1D":
        if self.symmetry == "symmetric":
            return self
        if self.symmetry == "skew":
            return BandedMatrix1D(-self.data, "skew")
        return BandedMatrix1D.from_dense(self.to_dense().T, self.half_bandwidth)

    @property
    def T(self) -> "BandedMatrix1D":
        return self.transpose()

    def scaled(self, c: float) -> "BandedMatrix1D":
        return BandedMatrix1D(c * self.data, self.symmetry)

    def apply(self, x, axis: int = 0) -> np.ndarray:
        """Multiply along `axis` of the array `x`."""
        x = np.asarray(x, dtype=float)
        if x.shape[axis] != self.size:
            raise ValueError(f"axis {axis} has length {x.shape[axis]}, expected {self.size}")
        xm = np.moveaxis(x, axis, 0)
        y = np.zeros_like(xm)
        m, w = self.size, self.half_bandwidth
        tail = (1,) * (xm.ndim - 1)
        for k in range(-w, w + 1):
            lo, hi = max(0, -k), min(m, m - k)
            if lo >= hi:
                continue
            coef = self.data[lo:hi, w + k]
            if not coef.any():
                continue
            y[lo:hi] += coef.reshape((-1,) + tail) * xm[lo + k: hi + k]
        return np.moveaxis(y, 0, axis)

    def __matmul__(self, x):
        return self.apply(x, 0)


def _check_sizes(p: int, n: int) -> None:
    _check_degree(p)
    if int(n) != n or n < p:
        raise ValueError(f"need n >= p intervals for degree {p}, got n={n}")


def _quadrature_factor(p: int, n: int, r1: int, r2: int) -> np.ndarray:
    """Dense ``[int (N_{i+1})^(r1) (N_{j+1})^(r2) dx]`` over the interior functions."""
    kv = KnotVector(p, n)
    x, w = composite_rule(n, p + 1)
    b1 = basis_matrix(kv, x, r1)[:, 1:-1]
    b2 = b1 if r2 == r1 else basis_matrix(kv, x, r2)[:, 1:-1]
    return (b1 * w[:, None]).T @ b2


def central_stencil(p: int, n: int, kind: str) -> np.ndarray:
    """Toeplitz stencil ``c[k]`` for offsets ``k = j - i`` in ``-p..p``.

    ``kind`` is one of ``"mass"``, ``"advection"``, ``"stiffness"``.
    """
    k = np.arange(-p, p + 1)
    # entry (i, j) depends on p + 1 - (i - j) = p + 1 + k, an integer in 1..2p+1
    if kind == "mass":
        vals = np.asarray(cardinal_integer_values(2 * p + 1, 0))
        return vals[p + 1 + k] / n
    if kind == "advection":
        vals = np.asarray(cardinal_integer_values(2 * p + 1, 1))
        return -vals[p + 1 + k]
    if kind == "stiffness":
        vals = np.asarray(cardinal_integer_values(2 * p + 1, 2))
        return -n * vals[p + 1 + k]
    raise ValueError(f"unknown factor kind {kind!r}")


def central_rows(p: int, n: int) -> range:
    """0-based rows whose entries follow the Toeplitz formula."""
    # 1-based rows 2p..n-p-1 of the m x m matrix
    return range(2 * p - 1, n - p - 1)


def _build(p: int, n: int, kind: str, r1: int, r2: int, symmetry: str) -> BandedMatrix1D:
    _check_sizes(p, n)
    dense = _quadrature_factor(p, n, r1, r2)
    if symmetry == "symmetric":
        dense = 0.5 * (dense + dense.T)
    else:
        dense = 0.5 * (dense - dense.T)
    m = dense.shape[0]
    stencil = central_stencil(p, n, kind)
    scale = max(1.0, np.abs(stencil).max())
    for i in central_rows(p, n):
        cols = i + np.arange(-p, p + 1)
        if np.abs(dense[i, cols] - stencil).max() > 1e-11 * scale:
            raise RuntimeError(f"{kind} matrix: quadrature and Toeplitz entries disagree on row {i}")
        # the centre is exactly Toeplitz; remove quadrature roundoff there
        dense[i, cols] = stencil
        dense[cols, i] = stencil if symmetry == "symmetric" else -stencil
    return BandedMatrix1D.from_dense(dense, min(p, m - 1), symmetry, tol=1e-13 * scale)


def mass_matrix(p: int, n: int) -> BandedMatrix1D:
    """``[int N_{i+1} N_{j+1} dx]_{i,j=1}^{n+p-2}``."""
    return _build(p, n, "mass", 0, 0, "symmetric")


def advection_matrix(p: int, n: int) -> BandedMatrix1D:
    """``[int N_{i+1} (N_{j+1})' dx]``; exactly skew-symmetric."""
    return _build(p, n, "advection", 0, 1, "skew")


def stiffness_matrix(p: int, n: int) -> BandedMatrix1D:
    """``[int (N_{i+1})' (N_{j+1})' dx]``."""
    return _build(p, n, "stiffness", 1, 1, "symmetric")


def toeplitz_mass_factor(p: int, m: int) -> BandedMatrix1D:
    """``T_m(m_{p-1})``: entries ``phi_{2p-1}(p - i + j)`` for ``|i - j| < p``.

    For ``p = 1`` this is the identity.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"degree must be a positive integer, got {p!r}")
    if int(m) != m or m < 1:
        raise ValueError(f"size must be a positive integer, got {m!r}")
    w = min(p - 1, m - 1)
    vals = np.asarray(cardinal_integer_values(2 * p - 1, 0))
    data = np.zeros((m, 2 * w + 1))
    for k in range(-w, w + 1):
        lo, hi = max(0, -k), min(m, m - k)
        data[lo:hi, w + k] = vals[p + k]
    return BandedMatrix1D(data, "symmetric")


def factors_1d(p: int, n: int) -> tuple[BandedMatrix1D, BandedMatrix1D, BandedMatrix1D]:
    """``(M, A, S)`` for one direction."""
    return mass_matrix(p, n), advection_matrix(p, n), stiffness_matrix(p, n)
