"""Kronecker-block descriptors of the curl-div stiffness operator.

A vector field is stored component-major; inside a component the
coefficients run lexicographically with direction 1 slowest, so a block
``F1 (x) F2 (x) F3`` acts on a component reshaped to ``(m1, m2, m3)`` by
applying ``F_l`` along axis ``l - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrices import BandedMatrix1D, factors_1d
from .symbols import ProblemParams

DENSE_LIMIT = 20000


@dataclass(frozen=True, eq=False)
class KroneckerTerm:
    """``coef * op(F_1) (x) ... (x) op(F_d)`` with ``op`` the identity or the transpose."""

    coef: float
    factors: tuple
    transposed: tuple = None

    def __post_init__(self):
        t = (False,) * len(self.factors) if self.transposed is None else tuple(self.transposed)
        if len(t) != len(self.factors):
            raise ValueError("one transpose flag per factor")
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "transposed", t)

    @property
    def dims(self) -> tuple:
        return tuple(f.size for f in self.factors)

    def effective_factors(self) -> tuple:
        return tuple(f.T if t else f for f, t in zip(self.factors, self.transposed))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply to a component already reshaped to ``dims``."""
        y = x
        for axis, f in enumerate(self.effective_factors()):
            y = f.apply(y, axis)
        return self.coef * y

    def to_sparse(self):
        import scipy.sparse as sp

        out = None
        for f in self.effective_factors():
            s = f.to_sparse()
            out = s if out is None else sp.kron(out, s, format="csr")
        return self.coef * out


class KroneckerBlockOperator:
    """``d x d`` block operator whose blocks are sums of Kronecker terms.

    Parameters
    ----------
    blocks : sequence of sequences of lists of KroneckerTerm
        ``blocks[r][c]`` is the term list of block ``(r, c)``; empty means zero.
    dims : tuple of int
        Per-direction sizes ``m_l``.
    """

    def __init__(self, blocks, dims):
        self.dims = tuple(int(m) for m in dims)
        self.d = len(blocks)
        self.blocks = tuple(tuple(tuple(b) for b in row) for row in blocks)
        if any(len(row) != self.d for row in self.blocks):
            raise ValueError("block grid must be square")
        for row in self.blocks:
            for terms in row:
                for t in terms:
                    if t.dims != self.dims:
                        raise ValueError(f"term sizes {t.dims} do not match {self.dims}")

    @property
    def block_size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def total_size(self) -> int:
        return self.d * self.block_size

    @property
    def shape(self):
        return (self.total_size, self.total_size)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.total_size,):
            raise ValueError(f"expected a vector of length {self.total_size}, got shape {x.shape}")
        comps = x.reshape((self.d,) + self.dims)
        y = np.zeros_like(comps)
        # fixed summation order keeps results reproducible
        for r in range(self.d):
            for c in range(self.d):
                for t in self.blocks[r][c]:
                    y[r] += t.apply(comps[c])
        return y.reshape(-1)

    def __matmul__(self, x):
        return self.apply(x)

    def to_sparse_rows(self):
        """Explicit CSR matrix (exact up to floating-point products)."""
        import scipy.sparse as sp

        nb = self.block_size
        grid = []
        for r in range(self.d):
            row = []
            for c in range(self.d):
                acc = sp.csr_matrix((nb, nb))
                for t in self.blocks[r][c]:
                    acc = acc + t.to_sparse()
                row.append(acc)
            grid.append(row)
        out = sp.bmat(grid, format="csr")
        out.eliminate_zeros()
        out.sort_indices()
        return out

    def to_dense(self) -> np.ndarray:
        if self.total_size > DENSE_LIMIT:
            raise ValueError(f"dense export limited to {DENSE_LIMIT} unknowns, "
                             f"operator has {self.total_size}")
        return self.to_sparse_rows().toarray()

    def diagonal_part(self) -> "KroneckerBlockOperator":
        blocks = [[self.blocks[r][c] if r == c else () for c in range(self.d)]
                  for r in range(self.d)]
        return KroneckerBlockOperator(blocks, self.dims)

    def map_factors(self, fn) -> "KroneckerBlockOperator":
        """New operator with every distinct factor replaced by ``fn(factor, direction)``.

        Transpose flags are kept, so ``fn`` must commute with transposition
        (true for congruences ``P^T F P``).
        """
        cache = {}

        def sub(f, axis):
            key = (id(f), axis)
            if key not in cache:
                cache[key] = fn(f, axis)
            return cache[key]

        blocks = [[[KroneckerTerm(t.coef, tuple(sub(f, a) for a, f in enumerate(t.factors)),
                                  t.transposed) for t in self.blocks[r][c]]
                   for c in range(self.d)] for r in range(self.d)]
        dims = None
        for row in blocks:
            for terms in row:
                for t in terms:
                    dims = t.dims
        return KroneckerBlockOperator(blocks, dims if dims is not None else self.dims)

    def scaled(self, s: float) -> "KroneckerBlockOperator":
        blocks = [[[KroneckerTerm(s * t.coef, t.factors, t.transposed) for t in self.blocks[r][c]]
                   for c in range(self.d)] for r in range(self.d)]
        return KroneckerBlockOperator(blocks, self.dims)


def _normalize_n(params: ProblemParams, n) -> tuple:
    if np.ndim(n) == 0:
        nn = tuple(int(round(float(v) * int(n))) for v in params.nu)
    else:
        nn = tuple(int(v) for v in n)
    if len(nn) != params.d:
        raise ValueError(f"need {params.d} mesh sizes, got {nn}")
    return nn


def _factor_sets(params: ProblemParams, n):
    nn = _normalize_n(params, n)
    cache = {}
    out = []
    for v in nn:
        if v not in cache:
            cache[v] = factors_1d(params.p, v)
        out.append(cache[v])
    return nn, out


def assemble(params: ProblemParams, n, diagonal_only: bool = False) -> KroneckerBlockOperator:
    """Stiffness operator of ``alpha (curl u, curl v) + beta (div u, div v)``.

    `n` is an int (scaled by ``params.nu``) or a tuple of per-direction interval counts.
    """
    nn, fs = _factor_sets(params, n)
    al, be = float(params.alpha), float(params.beta)
    T = True
    if params.d == 2:
        (M1, A1, S1), (M2, A2, S2) = fs
        K = KroneckerTerm
        blocks = [
            [[K(al, (M1, S2)), K(be, (S1, M2))],
             [K(-al, (A1, A2), (T, False)), K(be, (A1, A2), (False, T))]],
            [[K(-al, (A1, A2), (False, T)), K(be, (A1, A2), (T, False))],
             [K(al, (S1, M2)), K(be, (M1, S2))]],
        ]
    else:
        (M1, A1, S1), (M2, A2, S2), (M3, A3, S3) = fs
        F = False

        def K(c, f, t=(F, F, F)):
            return KroneckerTerm(c, f, t)

        blocks = [
            [[K(al, (M1, M2, S3)), K(al, (M1, S2, M3)), K(be, (S1, M2, M3))],
             [K(-al, (A1, A2, M3), (T, F, F)), K(be, (A1, A2, M3), (F, T, F))],
             [K(-al, (A1, M2, A3), (T, F, F)), K(be, (A1, M2, A3), (F, F, T))]],
            [[K(-al, (A1, A2, M3), (F, T, F)), K(be, (A1, A2, M3), (T, F, F))],
             [K(al, (S1, M2, M3)), K(al, (M1, M2, S3)), K(be, (M1, S2, M3))],
             [K(-al, (M1, A2, A3), (F, T, F)), K(be, (M1, A2, A3), (F, F, T))]],
            [[K(-al, (A1, M2, A3), (F, F, T)), K(be, (A1, M2, A3), (T, F, F))],
             [K(-al, (M1, A2, A3), (F, F, T)), K(be, (M1, A2, A3), (F, T, F))],
             [K(al, (S1, M2, M3)), K(al, (M1, S2, M3)), K(be, (M1, M2, S3))]],
        ]
    dims = tuple(v + params.p - 2 for v in nn)
    op = KroneckerBlockOperator(blocks, dims)
    return op.diagonal_part() if diagonal_only else op


def assemble_block_diagonal(params: ProblemParams, n) -> KroneckerBlockOperator:
    """Diagonal blocks of :func:`assemble`, off-diagonal blocks dropped."""
    return assemble(params, n, diagonal_only=True)
