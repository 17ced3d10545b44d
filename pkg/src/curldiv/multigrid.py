"""Geometric V-cycle for Kronecker-block operators and the three solver drivers.

Coarse operators are formed factor by factor: with ``P = I_d (x) P_1 (x) ... (x) P_d``
the Galerkin product ``P^T A P`` keeps the Kronecker-block layout of ``A`` and
only its 1D factors change to ``P_l^T F P_l``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from ._kernels import gs_sweep, pack_operator
from .krylov import (SolveReport, TensorToeplitzPreconditioner, build_preconditioner, gmres, pcg,
                     pcg_flexible)
from .matrices import BandedMatrix1D
from .operators import KroneckerBlockOperator


# -------------------------------------------------------------- prolongation

@dataclass(frozen=True)
class Prolongator1D:
    """Linear interpolation from ``(m - 1) / 2`` coarse to ``m`` fine points.

    Coarse function ``J`` (0-based) sits at fine index ``2J + 1`` with
    weights ``1/2, 1, 1/2`` on ``2J, 2J + 1, 2J + 2``.
    """

    fine_size: int

    def __post_init__(self):
        if self.fine_size < 3 or self.fine_size % 2 == 0:
            raise ValueError(f"fine size must be odd and >= 3, got {self.fine_size}")

    @property
    def coarse_size(self) -> int:
        return (self.fine_size - 1) // 2

    def to_dense(self) -> np.ndarray:
        P = np.zeros((self.fine_size, self.coarse_size))
        J = np.arange(self.coarse_size)
        P[2 * J + 1, J] = 1.0
        P[2 * J, J] = 0.5
        P[2 * J + 2, J] = 0.5
        return P

    def prolong(self, xc, axis: int = 0) -> np.ndarray:
        xc = np.moveaxis(np.asarray(xc, dtype=float), axis, 0)
        if xc.shape[0] != self.coarse_size:
            raise ValueError("coarse length mismatch")
        xf = np.zeros((self.fine_size,) + xc.shape[1:])
        xf[1::2] = xc
        xf[0:-1:2] += 0.5 * xc
        xf[2::2] += 0.5 * xc
        return np.moveaxis(xf, 0, axis)

    def restrict(self, xf, axis: int = 0) -> np.ndarray:
        """Action of the transpose (full weighting without the 1/2 scaling)."""
        xf = np.moveaxis(np.asarray(xf, dtype=float), axis, 0)
        if xf.shape[0] != self.fine_size:
            raise ValueError("fine length mismatch")
        xc = xf[1::2] + 0.5 * (xf[0:-1:2] + xf[2::2])
        return np.moveaxis(xc, 0, axis)


def coarsen_factor(f: BandedMatrix1D, P: Prolongator1D) -> BandedMatrix1D:
    """``P^T F P`` in band storage with the exact (grown) bandwidth."""
    Pd = P.to_dense()
    c = Pd.T @ f.to_dense() @ Pd
    if f.symmetry == "symmetric":
        c = 0.5 * (c + c.T)
    elif f.symmetry == "skew":
        c = 0.5 * (c - c.T)
    w = min((f.half_bandwidth + 2) // 2, P.coarse_size - 1)
    return BandedMatrix1D.from_dense(c, w, f.symmetry)


class BlockProlongator:
    """``I_d (x) P_1 (x) ... (x) P_d`` acting on component-major vectors."""

    def __init__(self, fine_dims, ncomp: int):
        self.fine_dims = tuple(fine_dims)
        self.ncomp = ncomp
        self.parts = tuple(Prolongator1D(m) for m in self.fine_dims)
        self.coarse_dims = tuple(p.coarse_size for p in self.parts)

    def prolong(self, xc):
        y = np.asarray(xc).reshape((self.ncomp,) + self.coarse_dims)
        for a, P in enumerate(self.parts):
            y = P.prolong(y, a + 1)
        return y.reshape(-1)

    def restrict(self, xf):
        y = np.asarray(xf).reshape((self.ncomp,) + self.fine_dims)
        for a, P in enumerate(self.parts):
            y = P.restrict(y, a + 1)
        return y.reshape(-1)


# ----------------------------------------------------------------- hierarchy

GS_MODES = ("symmetric", "forward", "backward")


@dataclass(frozen=True)
class SmootherConfig:
    """Smoothing schedule of the V-cycle.

    ``krylov`` is the finest-level post-smoother (``"gmres"``, ``"pcg"`` or
    ``"none"``, the last falling back to Gauss-Seidel), run for
    ``krylov_iterations`` steps (the spline degree when None).  One
    Gauss-Seidel iteration is a forward plus a backward lexicographic sweep
    in ``"symmetric"`` mode and a single sweep otherwise.
    """

    krylov: str = "gmres"
    krylov_iterations: int | None = None
    pre_sweeps: int = 1
    post_sweeps: int = 1
    pre_mode: str = "symmetric"
    post_mode: str = "symmetric"

    def __post_init__(self):
        if self.krylov not in ("gmres", "pcg", "none"):
            raise ValueError(f"unknown Krylov smoother {self.krylov!r}")
        for mode in (self.pre_mode, self.post_mode):
            if mode not in GS_MODES:
                raise ValueError(f"unknown Gauss-Seidel mode {mode!r}; choose from {GS_MODES}")


@dataclass(eq=False)
class MultigridLevel:
    op: KroneckerBlockOperator
    prolongator: BlockProlongator | None = None
    coarse_factor: tuple | None = None

    @cached_property
    def packed(self):
        return pack_operator(self.op)

    @cached_property
    def sparse_rows(self):
        return self.op.to_sparse_rows()

    @property
    def dims(self):
        return self.op.dims


@dataclass(eq=False)
class MultigridHierarchy:
    levels: list
    p: int
    smoother: SmootherConfig
    preconditioner: TensorToeplitzPreconditioner = field(repr=False, default=None)

    @property
    def nlevels(self) -> int:
        return len(self.levels)

    @property
    def sizes(self) -> list:
        return [lvl.dims for lvl in self.levels]


def _is_admissible(m: int) -> bool:
    return m >= 1 and (m + 1) & m == 0


def admissible_n(p: int, limit: int = 512) -> list:
    """Interval counts ``n`` with ``n + p - 2 = 2^k - 1``."""
    out = []
    k = 1
    while True:
        n = 2**k + 1 - p
        if n > limit:
            return out
        if n >= p:
            out.append(n)
        k += 1


def build_hierarchy(op: KroneckerBlockOperator, p: int, smoother: SmootherConfig | None = None,
                    coarsest_size: int = 1, max_levels: int | None = None) -> MultigridHierarchy:
    """Galerkin hierarchy down to ``coarsest_size`` points per direction.

    The default goes down to a single point per direction, i.e.
    ``log2(n + p - 1)`` grids for ``n + p - 2 = 2^k - 1``.
    """
    smoother = smoother or SmootherConfig()
    for m in op.dims:
        if not _is_admissible(m):
            raise ValueError(f"grid size {m} is not of the form 2^k - 1; admissible n for p={p}: "
                             f"{admissible_n(p, 300)}")
    levels = [MultigridLevel(op)]
    cur = op
    while min(cur.dims) > coarsest_size and min(cur.dims) >= 3:
        if max_levels is not None and len(levels) >= max_levels:
            break
        bp = BlockProlongator(cur.dims, cur.d)
        cur = cur.map_factors(lambda f, axis, bp=bp: coarsen_factor(f, bp.parts[axis]))
        levels[-1].prolongator = bp
        levels.append(MultigridLevel(cur))
    last = levels[-1]
    last.coarse_factor = sla.cho_factor(last.op.to_dense())
    pc = build_preconditioner(p, op.dims, op.d)
    return MultigridHierarchy(levels, p, smoother, pc)


def gauss_seidel(level: MultigridLevel, x, b, sweeps: int = 1, mode: str = "forward"):
    """Lexicographic Gauss-Seidel iterations on the component-major ordering, in place."""
    if mode not in GS_MODES:
        raise ValueError(f"unknown Gauss-Seidel mode {mode!r}")
    for _ in range(sweeps):
        if mode != "backward":
            gs_sweep(level.packed, x, b, backward=False)
        if mode != "forward":
            gs_sweep(level.packed, x, b, backward=True)
    return x


def vcycle(h: MultigridHierarchy, b, x0=None, level: int = 0) -> np.ndarray:
    """One V-cycle for ``A_level x = b`` starting from `x0`."""
    lvl = h.levels[level]
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if level == h.nlevels - 1:
        return sla.cho_solve(lvl.coarse_factor, b)
    cfg = h.smoother
    gauss_seidel(lvl, x, b, cfg.pre_sweeps, cfg.pre_mode)
    r = b - lvl.op.apply(x)
    ec = vcycle(h, lvl.prolongator.restrict(r), None, level + 1)
    x += lvl.prolongator.prolong(ec)
    if level == 0 and cfg.krylov != "none":
        k = cfg.krylov_iterations if cfg.krylov_iterations is not None else h.p
        if cfg.krylov == "gmres":
            x, _ = gmres(lvl.op, b, h.preconditioner, x0=x, k_fixed=k)
        else:
            x, _ = pcg(lvl.op, b, h.preconditioner, x0=x, fixed_iterations=k)
    else:
        gauss_seidel(lvl, x, b, cfg.post_sweeps, cfg.post_mode)
    return x


# ------------------------------------------------------------------- drivers

def _finish(rep: SolveReport, config: dict) -> SolveReport:
    rep.config.update(config)
    return rep


def solve_mim(op, b, p: int, tol: float = 1e-7, maxit: int = 1000, hierarchy=None,
              smoother: SmootherConfig | None = None, config: dict | None = None):
    """Stationary V-cycle iteration from zero until ``||r|| / ||r_0|| < tol``."""
    t0 = time.perf_counter()
    h = hierarchy or build_hierarchy(op, p, smoother or SmootherConfig("gmres"))
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    rep = SolveReport("mim")
    r0 = np.linalg.norm(b)
    if r0 == 0.0:
        rep.converged = True
    else:
        rep.residual_history.append(1.0)
        for k in range(maxit):
            x = vcycle(h, b, x)
            rel = np.linalg.norm(b - op.apply(x)) / r0
            rep.residual_history.append(rel)
            rep.iterations = k + 1
            if rel < tol:
                rep.converged = True
                break
    rep.wall_time = time.perf_counter() - t0
    return x, _finish(rep, config or {})


def solve_pmim(op, b, p: int, tol: float = 1e-7, maxit: int = 1000, hierarchy=None,
               smoother: SmootherConfig | None = None, config: dict | None = None):
    """Flexible CG preconditioned by one V-cycle (same internals as MIM)."""
    t0 = time.perf_counter()
    h = hierarchy or build_hierarchy(op, p, smoother or SmootherConfig("gmres"))
    x, rep = pcg_flexible(op, lambda r: vcycle(h, r), b, tol=tol, maxit=maxit, method="pmim")
    rep.wall_time = time.perf_counter() - t0
    return x, _finish(rep, config or {})


def solve_pwl(op, d_op, b, p: int, tol: float = 1e-7, maxit: int = 1000, hierarchy=None,
              smoother: SmootherConfig | None = None, config: dict | None = None):
    """Flexible CG on `op`, preconditioned by one V-cycle on the block diagonal `d_op`."""
    t0 = time.perf_counter()
    h = hierarchy or build_hierarchy(d_op, p, smoother or SmootherConfig("pcg"))
    x, rep = pcg_flexible(op, lambda r: vcycle(h, r), b, tol=tol, maxit=maxit, method="pwl")
    rep.wall_time = time.perf_counter() - t0
    return x, _finish(rep, config or {})
