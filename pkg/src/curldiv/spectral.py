"""Dense eigenvalues of the assembled operator against sampled symbol values."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .operators import DENSE_LIMIT, KroneckerBlockOperator
from .symbols import SymbolSampling


def dense_symmetric_eigs(a, symmetry_tol: float = 1e-10) -> np.ndarray:
    """All eigenvalues of a dense symmetric matrix, ascending (LAPACK ``syevd``)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.shape[0] > DENSE_LIMIT:
        raise ValueError(f"dense eigensolve limited to {DENSE_LIMIT} unknowns")
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    if np.abs(a - a.T).max() > symmetry_tol * scale:
        raise ValueError("matrix is not symmetric")
    return sla.eigh(a, eigvals_only=True, driver="evd", overwrite_a=False)


def near_zero_fraction(values, threshold: float = 0.05) -> float:
    """Fraction of `values` below ``threshold * max(values)``."""
    v = np.asarray(values, dtype=float)
    return float(np.count_nonzero(v < threshold * v.max()) / v.size)


@dataclass(frozen=True)
class SpectrumComparison:
    matrix_eigs: np.ndarray
    symbol_eigs: np.ndarray
    rel_gaps: np.ndarray
    gap_threshold: float

    @property
    def outlier_count(self) -> int:
        return int(np.count_nonzero(self.rel_gaps > self.gap_threshold))

    @property
    def coverage(self) -> float:
        """Fraction of rank-aligned pairs whose relative gap is within the threshold."""
        return 1.0 - self.outlier_count / self.rel_gaps.size

    def rows(self):
        """``(rank, matrix_eig, symbol_eig, rel_gap)`` tuples, rank starting at 1."""
        return [(k + 1, float(a), float(b), float(g)) for k, (a, b, g) in
                enumerate(zip(self.matrix_eigs, self.symbol_eigs, self.rel_gaps))]


def rank_aligned_gaps(a, b) -> np.ndarray:
    """``|a_k - b_k| / max(|a_k|, |b_k|)`` for two ascending sequences (0 when both vanish)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    den = np.maximum(np.abs(a), np.abs(b))
    out = np.zeros_like(a)
    nz = den > 0
    out[nz] = np.abs(a[nz] - b[nz]) / den[nz]
    return out


def compare_spectrum(op: KroneckerBlockOperator, sampling: SymbolSampling, scale: float,
                     gap_threshold: float = 0.10) -> SpectrumComparison:
    """Sorted eigenvalues of ``scale * op`` against the merged symbol samples."""
    eigs = scale * dense_symmetric_eigs(op.to_dense())
    sym = sampling.merged
    if sym.size != eigs.size:
        raise ValueError(f"sampling has {sym.size} values, operator has {eigs.size} eigenvalues")
    return SpectrumComparison(eigs, sym, rank_aligned_gaps(eigs, sym), gap_threshold)
