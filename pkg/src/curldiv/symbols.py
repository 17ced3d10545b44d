"""Spectral symbols of the curl-div discretization and their sampling.

The scalar symbols ``symbol_m``, ``symbol_a`` and ``symbol_s`` describe the
eigenvalue distribution of ``n M``, ``-i A`` and ``S / n``.  Tensor products
of them give the Laplacian symbol and the ``d x d`` matrix-valued symbol of
the curl-div operator, whose eigenvalue functions are bracketed by
``min(alpha, beta)`` and ``max(alpha, beta)`` times the Laplacian symbol.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bspline import cardinal_integer_values


@dataclass(frozen=True)
class ProblemParams:
    """Physical and discretization parameters.

    ``nu`` holds the mesh ratios: direction ``i`` has ``n * nu[i]`` intervals.
    """

    alpha: float
    beta: float
    p: int
    d: int = 2
    nu: tuple = field(default=None)

    def __post_init__(self):
        if not self.alpha > 0 or not self.beta > 0:
            raise ValueError("alpha and beta must be positive")
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"degree must be a positive integer, got {self.p!r}")
        nu = (1,) * self.d if self.nu is None else tuple(self.nu)
        if len(nu) != self.d or any(not v > 0 for v in nu):
            raise ValueError("nu needs d positive entries")
        object.__setattr__(self, "nu", tuple(Fraction(v).limit_denominator(10**6) for v in nu))

    @property
    def gamma(self) -> np.ndarray:
        nu = np.array([float(v) for v in self.nu])
        return nu**2 / nu.prod()

    @property
    def delta(self) -> np.ndarray:
        return 1.0 / np.array([float(v) for v in self.nu])

    def with_(self, **kw) -> "ProblemParams":
        args = dict(alpha=self.alpha, beta=self.beta, p=self.p, d=self.d, nu=self.nu)
        args.update(kw)
        return ProblemParams(**args)


def _coeffs(p: int, r: int) -> np.ndarray:
    return np.asarray(cardinal_integer_values(2 * p + 1, r))


def symbol_m(p: int, theta):
    """Mass symbol ``phi(p+1) + 2 sum_k phi(p+1-k) cos(k theta)`` with ``phi = phi_{2p+1}``."""
    c = _coeffs(p, 0)
    th = np.asarray(theta, dtype=float)
    out = np.full(th.shape, c[p + 1])
    for k in range(1, p + 1):
        out = out + 2.0 * c[p + 1 - k] * np.cos(k * th)
    return float(out) if np.ndim(theta) == 0 else out


def symbol_a(p: int, theta):
    """Advection symbol; odd in theta."""
    c = _coeffs(p, 1)
    th = np.asarray(theta, dtype=float)
    out = np.zeros(th.shape)
    for k in range(1, p + 1):
        out = out - 2.0 * c[p + 1 - k] * np.sin(k * th)
    return float(out) if np.ndim(theta) == 0 else out


def symbol_s(p: int, theta):
    """Stiffness symbol; nonnegative with a zero of order two at theta = 0."""
    c = _coeffs(p, 2)
    th = np.asarray(theta, dtype=float)
    out = np.full(th.shape, -c[p + 1])
    for k in range(1, p + 1):
        out = out - 2.0 * c[p + 1 - k] * np.cos(k * th)
    return float(out) if np.ndim(theta) == 0 else out


def _split(theta, d):
    th = np.asarray(theta, dtype=float)
    if th.shape[-1] != d:
        raise ValueError(f"theta must have trailing dimension {d}, got shape {th.shape}")
    return [th[..., i] for i in range(d)]


def _msa(params: ProblemParams, theta):
    th = _split(theta, params.d)
    p = params.p
    return ([symbol_m(p, t) for t in th], [symbol_s(p, t) for t in th],
            [symbol_a(p, t) for t in th])


def laplacian_symbol(params: ProblemParams, theta):
    """Symbol of the tensor-product B-spline Laplacian (scaled by ``n^(d-2)``)."""
    m, s, _ = _msa(params, theta)
    if params.d == 2:
        r = float(params.nu[1] / params.nu[0])
        return r * m[0] * s[1] + s[0] * m[1] / r
    g = params.gamma
    return g[0] * s[0] * m[1] * m[2] + g[1] * m[0] * s[1] * m[2] + g[2] * m[0] * m[1] * s[2]


def symbol_f(params: ProblemParams, theta) -> np.ndarray:
    """Matrix-valued symbol, shape ``theta.shape[:-1] + (d, d)``."""
    m, s, a = _msa(params, theta)
    al, be = params.alpha, params.beta
    shape = np.shape(m[0])
    f = np.zeros(shape + (params.d, params.d))
    if params.d == 2:
        r = float(params.nu[1] / params.nu[0])
        ms, sm = r * m[0] * s[1], s[0] * m[1] / r
        f[..., 0, 0] = al * ms + be * sm
        f[..., 1, 1] = al * sm + be * ms
        f[..., 0, 1] = f[..., 1, 0] = -(al - be) * a[0] * a[1]
        return f
    g, dl = params.gamma, params.delta
    t1 = g[0] * s[0] * m[1] * m[2]
    t2 = g[1] * m[0] * s[1] * m[2]
    t3 = g[2] * m[0] * m[1] * s[2]
    f[..., 0, 0] = be * t1 + al * t2 + al * t3
    f[..., 1, 1] = al * t1 + be * t2 + al * t3
    f[..., 2, 2] = al * t1 + al * t2 + be * t3
    f[..., 0, 1] = f[..., 1, 0] = -(al - be) * dl[2] * a[0] * a[1] * m[2]
    f[..., 0, 2] = f[..., 2, 0] = -(al - be) * dl[1] * a[0] * m[1] * a[2]
    f[..., 1, 2] = f[..., 2, 1] = -(al - be) * dl[0] * m[0] * a[1] * a[2]
    return f


def eig_functions(params: ProblemParams, theta) -> np.ndarray:
    """Ascending eigenvalues of :func:`symbol_f`, shape ``theta.shape[:-1] + (d,)``.

    In 2D the closed form in terms of ``L^+``, ``L^-`` and the advection
    symbols is used; in 3D each ``3 x 3`` symbol value is diagonalized.
    """
    if params.d == 3:
        return np.linalg.eigvalsh(symbol_f(params, theta))
    m, s, a = _msa(params, theta)
    r = float(params.nu[1] / params.nu[0])
    ms, sm = r * m[0] * s[1], s[0] * m[1] / r
    lplus, lminus = ms + sm, ms - sm
    al, be = params.alpha, params.beta
    root = np.abs(al - be) * np.sqrt(lminus**2 + 4.0 * a[0] ** 2 * a[1] ** 2)
    lam1 = 0.5 * ((al + be) * lplus - root)
    lam2 = 0.5 * ((al + be) * lplus + root)
    return np.stack([lam1, lam2], axis=-1)


def eig_functions_numeric(params: ProblemParams, theta) -> np.ndarray:
    """Ascending eigenvalues of the symbol by a direct symmetric eigensolve."""
    return np.linalg.eigvalsh(symbol_f(params, theta))


def eigvals_sym3_trig(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of symmetric ``3 x 3`` matrices by the trigonometric formula.

    Vectorized over leading axes; ascending order.  Accurate to roughly
    ``sqrt(eps)`` relative when two eigenvalues nearly coincide, so it only
    serves as an independent check of the LAPACK path.
    """
    a = np.asarray(a, dtype=float)
    q = np.trace(a, axis1=-2, axis2=-1) / 3.0
    eye = np.eye(3)
    b = a - q[..., None, None] * eye
    p2 = (b**2).sum(axis=(-2, -1)) / 6.0
    pp = np.sqrt(p2)
    out = np.repeat(q[..., None], 3, axis=-1)
    ok = pp > 1e-14 * np.maximum(1.0, np.abs(a).max(axis=(-2, -1)))
    bn = np.zeros_like(b)
    bn[ok] = b[ok] / pp[ok][:, None, None]
    rr = np.clip(np.linalg.det(bn) / 2.0, -1.0, 1.0)
    phi = np.arccos(rr) / 3.0
    e_hi = q + 2.0 * pp * np.cos(phi)
    e_lo = q + 2.0 * pp * np.cos(phi + 2.0 * np.pi / 3.0)
    e_mid = 3.0 * q - e_hi - e_lo
    trig = np.stack([e_lo, e_mid, e_hi], axis=-1)
    out[ok] = np.sort(trig[ok], axis=-1)
    return out


@dataclass(frozen=True)
class SymbolGrid:
    """Equispaced grid ``theta_k = k pi / m`` (``k = 1..m``) per direction, lexicographic."""

    m: tuple

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.arange(1, mi + 1) * np.pi / mi for mi in self.m]

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def __len__(self):
        return int(np.prod(self.m))


@dataclass(frozen=True)
class SymbolSampling:
    """Samples of the eigenvalue functions and the Laplacian symbol on a grid.

    All arrays are stored in the order that sorts ``laplacian_set`` ascending;
    ``ordering[j]`` is the lexicographic grid index of the ``j``-th sample.
    """

    grid: SymbolGrid
    thetas: np.ndarray
    lambda_sets: np.ndarray  # shape (d, K)
    laplacian_set: np.ndarray
    ordering: np.ndarray

    @property
    def merged(self) -> np.ndarray:
        """All eigenvalue samples, ascending."""
        return np.sort(self.lambda_sets.ravel())


def sample_protocol(params: ProblemParams, m) -> SymbolSampling:
    """Evaluate the eigenvalue functions and the Laplacian symbol on ``(0, pi]^d``."""
    m = tuple(int(v) for v in np.broadcast_to(m, (params.d,)))
    if any(v < 1 for v in m):
        raise ValueError("grid sizes must be positive")
    grid = SymbolGrid(m)
    pts = grid.points
    lam = eig_functions(params, pts)
    lap = laplacian_symbol(params, pts)
    # stable sort: ties keep lexicographic grid order
    order = np.argsort(lap, kind="stable")
    return SymbolSampling(grid, pts[order], np.ascontiguousarray(lam[order].T), lap[order], order)


def sampling_for_mesh(params: ProblemParams, n) -> SymbolSampling:
    """Grid with ``m_l = n_l + p - 2`` points per direction."""
    n = np.broadcast_to(n, (params.d,))
    return sample_protocol(params, tuple(int(v) + params.p - 2 for v in n))


@dataclass(frozen=True)
class BoundsReport:
    max_lower_violation: float
    max_upper_violation: float
    n_violations: int
    tol: float

    @property
    def max_violation(self) -> float:
        return max(self.max_lower_violation, self.max_upper_violation)

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


def verify_bounds(sampling: SymbolSampling, params: ProblemParams) -> BoundsReport:
    """Check ``min(a,b) L <= lambda_i <= max(a,b) L`` at every sample."""
    lap = sampling.laplacian_set
    tol = 1e-12 * (1.0 + lap.max())
    lo = min(params.alpha, params.beta) * lap
    hi = max(params.alpha, params.beta) * lap
    below = lo[None, :] - sampling.lambda_sets
    above = sampling.lambda_sets - hi[None, :]
    nviol = int(np.count_nonzero(below > tol) + np.count_nonzero(above > tol))
    return BoundsReport(float(max(below.max(), 0.0)), float(max(above.max(), 0.0)), nviol, tol)


def preconditioned_ratio(params: ProblemParams, m) -> np.ndarray:
    """``lambda_i(f) / g_p`` on the grid, with ``g_p = prod_i m_{p-1}(theta_i)``."""
    grid = SymbolGrid(tuple(np.broadcast_to(m, (params.d,))))
    pts = grid.points
    g = np.ones(len(pts))
    for i in range(params.d):
        g = g * symbol_m(params.p - 1, pts[:, i]) if params.p > 1 else g
    return eig_functions(params, pts) / g[:, None], pts
