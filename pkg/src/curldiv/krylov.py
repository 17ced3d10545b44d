"""Banded LU, the tensor Toeplitz preconditioner and Krylov iterations.

Every solver returns ``(x, SolveReport)``.  Residual histories hold
relative residual norms ``||r_k|| / ||r_0||`` starting with ``1.0`` at
``k = 0`` (or are empty when ``b`` is zero).
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .matrices import BandedMatrix1D, toeplitz_mass_factor


# ---------------------------------------------------------------- banded LU

class SingularMatrixError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BandedLU:
    """Doolittle factors in band layout: unit lower ``L`` and upper ``U``."""

    lower: np.ndarray  # lower[i, k] = L[i, i - 1 - k], k = 0..w-1
    upper: np.ndarray  # upper[i, k] = U[i, i + k],     k = 0..w

    @property
    def size(self) -> int:
        return self.upper.shape[0]

    @property
    def half_bandwidth(self) -> int:
        return self.upper.shape[1] - 1

    def solve(self, b, axis: int = 0) -> np.ndarray:
        """Solve along `axis` of `b` (any number of right-hand sides)."""
        b = np.asarray(b, dtype=float)
        if b.shape[axis] != self.size:
            raise ValueError(f"axis {axis} has length {b.shape[axis]}, expected {self.size}")
        y = np.moveaxis(b, axis, 0).copy()
        m, w = self.size, self.half_bandwidth
        lo, up = self.lower, self.upper
        for i in range(1, m):
            for k in range(min(w, i)):
                c = lo[i, k]
                if c != 0.0:
                    y[i] -= c * y[i - 1 - k]
        for i in range(m - 1, -1, -1):
            for k in range(1, min(w, m - 1 - i) + 1):
                c = up[i, k]
                if c != 0.0:
                    y[i] -= c * y[i + k]
            y[i] /= up[i, 0]
        return np.moveaxis(y, 0, axis)


def banded_lu_factor(mat: BandedMatrix1D, pivot_tol: float = 1e-14) -> BandedLU:
    """In-band LU factorization without pivoting.

    Raises
    ------
    SingularMatrixError
        If a pivot is (relatively) zero.
    """
    m, w = mat.size, mat.half_bandwidth
    # work on a dense band copy: a[i, w + k] = A[i, i + k]
    a = np.array(mat.data, dtype=float)
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    lower = np.zeros((m, max(w, 1) if w else 0))
    for j in range(m):
        piv = a[j, w]
        if abs(piv) <= pivot_tol * scale:
            raise SingularMatrixError(f"zero pivot at row {j}")
        for i in range(j + 1, min(m, j + w + 1)):
            # A[i, j] sits at a[i, w + j - i]
            lij = a[i, w + j - i] / piv
            lower[i, i - j - 1] = lij
            a[i, w + j - i] = 0.0
            # row_i -= lij * row_j over columns j+1 .. j+w
            for col in range(j + 1, min(m, j + w + 1)):
                a[i, w + col - i] -= lij * a[j, w + col - j]
    upper = np.zeros((m, w + 1))
    for k in range(w + 1):
        upper[: m - k, k] = a[: m - k, w + k]
    return BandedLU(lower if w else np.zeros((m, 0)), upper)


# ----------------------------------------------------- tensor preconditioner

class TensorToeplitzPreconditioner:
    """``I_d (x) T(m_{p-1}) (x) ... (x) T(m_{p-1})`` with banded solves.

    ``apply`` multiplies by the preconditioner matrix and ``solve`` by its
    inverse; the latter is what Krylov methods call.
    """

    def __init__(self, p: int, dims, ncomp: int):
        self.p = int(p)
        self.dims = tuple(int(m) for m in dims)
        self.ncomp = int(ncomp)
        self.factors = tuple(toeplitz_mass_factor(self.p, m) for m in self.dims)
        self.lus = tuple(banded_lu_factor(f) for f in self.factors)
        self.is_identity = self.p == 1

    @property
    def total_size(self) -> int:
        return self.ncomp * int(np.prod(self.dims))

    def _each_axis(self, x, fn):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.total_size,):
            raise ValueError(f"expected a vector of length {self.total_size}")
        if self.is_identity:
            return x.copy()
        y = x.reshape((self.ncomp,) + self.dims)
        for axis in range(len(self.dims)):
            y = fn(axis, y, axis + 1)
        return y.reshape(-1)

    def apply(self, x) -> np.ndarray:
        return self._each_axis(x, lambda a, y, ax: self.factors[a].apply(y, ax))

    def solve(self, x) -> np.ndarray:
        return self._each_axis(x, lambda a, y, ax: self.lus[a].solve(y, ax))

    __call__ = solve


def build_preconditioner(p: int, dims, ncomp: int | None = None) -> TensorToeplitzPreconditioner:
    dims = tuple(dims)
    return TensorToeplitzPreconditioner(p, dims, len(dims) if ncomp is None else ncomp)


# ------------------------------------------------------------------ reports

@dataclass
class SolveReport:
    method: str
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def relres_final(self) -> float:
        return self.residual_history[-1] if self.residual_history else 0.0

    def summary(self) -> dict:
        out = {"method": self.method}
        for key in ("n", "p", "d", "alpha", "beta"):
            out[key] = self.config.get(key)
        out.update(iterations=self.iterations, converged=self.converged,
                   relres_final=self.relres_final, seconds=self.wall_time)
        return out

    def to_json(self, full: bool = False) -> str:
        payload = asdict(self) if full else self.summary()
        return json.dumps(payload, sort_keys=True)


def _as_apply(op):
    if callable(op) and not hasattr(op, "apply"):
        return op
    return op.apply if hasattr(op, "apply") else (lambda v: op @ v)


def _as_precond(pc):
    if pc is None:
        return lambda r: r.copy()
    if hasattr(pc, "solve"):
        return pc.solve
    return pc


# ----------------------------------------------------------------- solvers

def cg(op, b, tol: float = 1e-7, maxit: int = 10000, x0=None):
    """Conjugate gradients with the relative-residual stopping rule."""
    return pcg(op, b, None, tol=tol, maxit=maxit, x0=x0, method="cg")


def pcg(op, b, precond=None, tol: float = 1e-7, maxit: int = 10000, x0=None,
        fixed_iterations: int | None = None, method: str = "pcg"):
    """Preconditioned CG (Fletcher-Reeves form).

    With `fixed_iterations` set, exactly that many steps are taken from `x0`
    (smoother mode) unless the residual vanishes first.
    """
    A, M = _as_apply(op), _as_precond(precond)
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - A(x) if x0 is not None else b.copy()
    rep = SolveReport(method)
    r0 = np.linalg.norm(r)
    if r0 == 0.0:
        rep.converged = True
        rep.wall_time = time.perf_counter() - t0
        return x, rep
    rep.residual_history.append(1.0)
    z = M(r)
    pdir = z.copy()
    rz = r @ z
    limit = fixed_iterations if fixed_iterations is not None else maxit
    for k in range(limit):
        q = A(pdir)
        pq = pdir @ q
        if pq == 0.0:
            break
        a = rz / pq
        x += a * pdir
        r -= a * q
        rel = np.linalg.norm(r) / r0
        rep.residual_history.append(rel)
        rep.iterations = k + 1
        if fixed_iterations is None and rel < tol:
            rep.converged = True
            break
        if rel == 0.0:
            rep.converged = True
            break
        z = M(r)
        rz_new = r @ z
        pdir = z + (rz_new / rz) * pdir
        rz = rz_new
    if fixed_iterations is not None:
        rep.converged = True
    rep.wall_time = time.perf_counter() - t0
    return x, rep


def pcg_flexible(op, precond, b, tol: float = 1e-7, maxit: int = 10000, x0=None,
                 method: str = "fpcg"):
    """Flexible CG: Polak-Ribiere update tolerates a varying preconditioner."""
    A, M = _as_apply(op), _as_precond(precond)
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - A(x) if x0 is not None else b.copy()
    rep = SolveReport(method)
    r0 = np.linalg.norm(r)
    if r0 == 0.0:
        rep.converged = True
        rep.wall_time = time.perf_counter() - t0
        return x, rep
    rep.residual_history.append(1.0)
    z = M(r)
    pdir = z.copy()
    rz = r @ z
    for k in range(maxit):
        q = A(pdir)
        a = rz / (pdir @ q)
        x += a * pdir
        r_new = r - a * q
        rel = np.linalg.norm(r_new) / r0
        rep.residual_history.append(rel)
        rep.iterations = k + 1
        if rel < tol:
            rep.converged = True
            break
        z_new = M(r_new)
        beta = (z_new @ (r_new - r)) / rz
        pdir = z_new + beta * pdir
        r, z = r_new, z_new
        rz = r @ z
    rep.wall_time = time.perf_counter() - t0
    return x, rep


def gmres(op, b, precond=None, x0=None, tol: float = 1e-7, maxit: int | None = None,
          k_fixed: int | None = None, method: str = "gmres"):
    """Full left-preconditioned GMRES.

    Solver mode (`k_fixed` is None) stops on the true relative residual;
    smoother mode runs exactly `k_fixed` Arnoldi steps from `x0` and records
    preconditioned residual norms.  A happy breakdown ends the iteration as
    converged; smoother mode never raises on stagnation.
    """
    A, M = _as_apply(op), _as_precond(precond)
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    smoother = k_fixed is not None
    rep = SolveReport(method)
    r_true = b - A(x) if x0 is not None else b.copy()
    true0 = np.linalg.norm(r_true)
    z = M(r_true)
    beta = np.linalg.norm(z)
    if beta == 0.0 or (not smoother and true0 == 0.0):
        rep.converged = True
        rep.wall_time = time.perf_counter() - t0
        return x, rep
    kmax = k_fixed if smoother else (maxit if maxit is not None else b.size)
    n = b.size
    V = np.zeros((kmax + 1, n))
    H = np.zeros((kmax + 1, kmax))
    cs, sn = np.zeros(kmax), np.zeros(kmax)
    g = np.zeros(kmax + 1)
    g[0] = beta
    V[0] = z / beta
    rep.residual_history.append(1.0)
    k_done = 0
    for j in range(kmax):
        w = M(A(V[j]))
        for i in range(j + 1):
            H[i, j] = w @ V[i]
            w -= H[i, j] * V[i]
        H[j + 1, j] = np.linalg.norm(w)
        breakdown = H[j + 1, j] <= 1e-14 * beta
        if not breakdown:
            V[j + 1] = w / H[j + 1, j]
        for i in range(j):
            h0, h1 = H[i, j], H[i + 1, j]
            H[i, j] = cs[i] * h0 + sn[i] * h1
            H[i + 1, j] = -sn[i] * h0 + cs[i] * h1
        den = np.hypot(H[j, j], H[j + 1, j])
        cs[j], sn[j] = (1.0, 0.0) if den == 0.0 else (H[j, j] / den, H[j + 1, j] / den)
        H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        k_done = j + 1
        if smoother:
            rep.residual_history.append(abs(g[j + 1]) / beta)
        else:
            xk = x + _combine(H, g, V, k_done)
            rel = np.linalg.norm(b - A(xk)) / true0
            rep.residual_history.append(rel)
            if rel < tol:
                rep.converged = True
                break
        if breakdown:
            rep.converged = True
            break
    x = x + _combine(H, g, V, k_done)
    rep.iterations = k_done
    if smoother:
        rep.converged = True
    rep.wall_time = time.perf_counter() - t0
    return x, rep


def _combine(H, g, V, k):
    if k == 0:
        return np.zeros(V.shape[1])
    R = H[:k, :k]
    diag = np.abs(np.diag(R))
    y = np.zeros(k)
    # back substitution; skip directions with a vanished pivot
    for i in range(k - 1, -1, -1):
        if diag[i] <= 1e-300:
            continue
        y[i] = (g[i] - R[i, i + 1:k] @ y[i + 1:k]) / R[i, i]
    return y @ V[:k]
