"""Matrix-free Gauss-Seidel on Kronecker-block operators (numba).

The operator is flattened into padded arrays: every distinct effective
factor is stored in band layout of a common half-bandwidth ``W``, and every
merged term records its block position, coefficient and three factor ids.
Two-dimensional operators are treated as three-dimensional with a trailing
unit direction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@dataclass(frozen=True)
class PackedOperator:
    dims: np.ndarray  # (3,) int64
    bands: np.ndarray  # (nf, mmax, 2W+1)
    term_row: np.ndarray  # (nt,) block row, terms sorted by it
    term_col: np.ndarray
    term_coef: np.ndarray
    term_fac: np.ndarray  # (nt, 3)
    row_start: np.ndarray  # (d+1,) term range per block row
    d: int


def pack_operator(op) -> PackedOperator:
    """Flatten a KroneckerBlockOperator, merging terms with identical factors."""
    eff = {}
    keys = []

    def fid(f):
        key = id(f)
        if key not in eff:
            eff[key] = (len(keys), f)
            keys.append(f)
        return eff[key][0]

    merged = {}
    order = []
    for r in range(op.d):
        for c in range(op.d):
            for t in op.blocks[r][c]:
                sign = 1.0
                ids = []
                for f, tr in zip(t.factors, t.transposed):
                    if tr and f.symmetry == "symmetric":
                        tr = False
                    if tr and f.symmetry == "skew":
                        sign, tr = -sign, False
                    ids.append(fid(f.T if tr else f))
                key = (r, c, tuple(ids))
                if key not in merged:
                    merged[key] = 0.0
                    order.append(key)
                merged[key] += sign * t.coef
    # unit factor closes 2D operators
    unit = None
    if op.d == 2:
        from .matrices import BandedMatrix1D

        unit = fid(BandedMatrix1D(np.ones((1, 1)), "symmetric"))
    dims = list(op.dims) + ([1] if op.d == 2 else [])
    w = max(f.half_bandwidth for f in keys)
    mmax = max(f.size for f in keys)
    bands = np.zeros((len(keys), mmax, 2 * w + 1))
    for i, f in enumerate(keys):
        hw = f.half_bandwidth
        bands[i, : f.size, w - hw: w + hw + 1] = f.data
    terms = sorted((k for k in order if merged[k] != 0.0), key=lambda k: (k[0], k[1]))
    nt = len(terms)
    term_row = np.array([k[0] for k in terms], dtype=np.int64)
    term_col = np.array([k[1] for k in terms], dtype=np.int64)
    term_coef = np.array([merged[k] for k in terms])
    term_fac = np.zeros((nt, 3), dtype=np.int64)
    for j, k in enumerate(terms):
        ids = list(k[2]) + ([unit] if op.d == 2 else [])
        term_fac[j] = ids
    row_start = np.searchsorted(term_row, np.arange(op.d + 1)).astype(np.int64)
    return PackedOperator(np.array(dims, dtype=np.int64), bands, term_row, term_col,
                          term_coef, term_fac, row_start, op.d)


@numba.njit(cache=True)
def _gs_sweep(x, b, dims, bands, term_col, term_coef, term_fac, row_start, d, backward,
              interleaved):
    m1, m2, m3 = dims[0], dims[1], dims[2]
    nb = m1 * m2 * m3
    w = (bands.shape[2] - 1) // 2
    n = d * nb
    for step in range(n):
        pos = n - 1 - step if backward else step
        if interleaved:
            loc = pos // d
            r = pos - loc * d
        else:
            r = pos // nb
            loc = pos - r * nb
        row = r * nb + loc
        i1 = loc // (m2 * m3)
        rem = loc - i1 * m2 * m3
        i2 = rem // m3
        i3 = rem - i2 * m3
        s = b[row]
        diag = 0.0
        for t in range(row_start[r], row_start[r + 1]):
            base = term_col[t] * nb
            coef = term_coef[t]
            f1, f2, f3 = term_fac[t, 0], term_fac[t, 1], term_fac[t, 2]
            lo1 = max(-w, -i1)
            hi1 = min(w, m1 - 1 - i1)
            lo2 = max(-w, -i2)
            hi2 = min(w, m2 - 1 - i2)
            lo3 = max(-w, -i3)
            hi3 = min(w, m3 - 1 - i3)
            for k1 in range(lo1, hi1 + 1):
                a1 = bands[f1, i1, w + k1]
                if a1 == 0.0:
                    continue
                a1 *= coef
                j1 = i1 + k1
                for k2 in range(lo2, hi2 + 1):
                    a2 = bands[f2, i2, w + k2]
                    if a2 == 0.0:
                        continue
                    a12 = a1 * a2
                    col0 = base + (j1 * m2 + i2 + k2) * m3 + i3
                    for k3 in range(lo3, hi3 + 1):
                        a = a12 * bands[f3, i3, w + k3]
                        col = col0 + k3
                        if col == row:
                            diag += a
                        else:
                            s -= a * x[col]
        if diag == 0.0:
            raise ZeroDivisionError("zero diagonal entry in Gauss-Seidel sweep")
        x[row] = s / diag
    return x


@numba.njit(cache=True)
def _diagonal(dims, bands, term_col, term_coef, term_fac, row_start, d):
    m1, m2, m3 = dims[0], dims[1], dims[2]
    nb = m1 * m2 * m3
    w = (bands.shape[2] - 1) // 2
    out = np.zeros(d * nb)
    for r in range(d):
        for t in range(row_start[r], row_start[r + 1]):
            if term_col[t] != r:
                continue
            f1, f2, f3 = term_fac[t, 0], term_fac[t, 1], term_fac[t, 2]
            for i1 in range(m1):
                for i2 in range(m2):
                    for i3 in range(m3):
                        out[r * nb + (i1 * m2 + i2) * m3 + i3] += (
                            term_coef[t] * bands[f1, i1, w] * bands[f2, i2, w] * bands[f3, i3, w])
    return out


def gs_sweep(packed: PackedOperator, x: np.ndarray, b: np.ndarray, backward: bool = False,
             interleaved: bool = False):
    """One in-place Gauss-Seidel sweep on ``x``.

    Rows are visited component-major by default; `interleaved` visits all
    components of one tensor index before moving to the next index.
    """
    return _gs_sweep(x, b, packed.dims, packed.bands, packed.term_col, packed.term_coef,
                     packed.term_fac, packed.row_start, packed.d, backward, interleaved)


def operator_diagonal(packed: PackedOperator) -> np.ndarray:
    return _diagonal(packed.dims, packed.bands, packed.term_col, packed.term_coef,
                     packed.term_fac, packed.row_start, packed.d)
