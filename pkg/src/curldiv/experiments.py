"""Manufactured right-hand sides, iteration-count tables and symbol/spectrum CSVs."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .bspline import KnotVector, basis_matrix
from .krylov import banded_lu_factor, cg
from .matrices import BandedMatrix1D
from .multigrid import SmootherConfig, build_hierarchy, solve_mim, solve_pmim, solve_pwl
from .operators import assemble, assemble_block_diagonal
from .spectral import compare_spectrum
from .symbols import ProblemParams, sampling_for_mesh, verify_bounds

METHODS = ("cg", "pwl", "pmim", "mim")


# ------------------------------------------------------- manufactured data

@dataclass(frozen=True)
class ManufacturedSolution:
    """Vector field vanishing on the boundary of the unit square/cube."""

    d: int
    components: tuple

    def __call__(self, *x):
        return [u(*x) for u in self.components]


def _bubble(*x):
    out = 1.0
    for xi in x:
        out = out * xi * (1.0 - xi)
    return out


def manufactured_solution(d: int) -> ManufacturedSolution:
    """``u1 = sin(2 pi q)``, ``u2 = cos(2 pi q) - 1`` with ``q = prod x_i (1 - x_i)``;
    in 3D also ``u3 = u1 + u2``."""
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")

    def u1(*x):
        return np.sin(2 * np.pi * _bubble(*x))

    def u2(*x):
        return np.cos(2 * np.pi * _bubble(*x)) - 1.0

    if d == 2:
        return ManufacturedSolution(2, (u1, u2))
    return ManufacturedSolution(3, (u1, u2, lambda *x: u1(*x) + u2(*x)))


def _interior_collocation(p: int, n: int):
    kv = KnotVector(p, n)
    g = kv.greville()[1:-1]
    B = basis_matrix(kv, g)[:, 1:-1]
    return g, banded_lu_factor(BandedMatrix1D.from_dense(B))


def spline_interpolant(func: Callable, d: int, p: int, n) -> np.ndarray:
    """Coefficients (lexicographic, direction 1 slowest) of the tensor spline
    interpolating `func` at the interior Greville points."""
    ns = (int(n),) * d if np.ndim(n) == 0 else tuple(int(v) for v in n)
    pts, lus = zip(*(_interior_collocation(p, v) for v in ns))
    grids = np.meshgrid(*pts, indexing="ij")
    c = np.asarray(func(*grids), dtype=float)
    for axis, lu in enumerate(lus):
        c = lu.solve(c, axis)
    return c.reshape(-1)


def manufactured_coefficients(ms: ManufacturedSolution, p: int, n) -> np.ndarray:
    """Stacked interpolant coefficients of every component of `ms`."""
    return np.concatenate([spline_interpolant(u, ms.d, p, n) for u in ms.components])


def build_rhs(op, xstar) -> np.ndarray:
    """``b = A x*`` so that `xstar` is the exact discrete solution."""
    return op.apply(np.asarray(xstar, dtype=float))


# --------------------------------------------------------------- solving

@dataclass
class ExperimentConfig:
    d: int = 2
    p: int = 3
    n: int = 30
    alpha: float = 1.0
    beta: float = 0.1
    method: str = "pmim"
    tol: float = 1e-7
    maxit: int = 5000
    rhs_mode: str = "manufactured"
    seed: int = 0
    smoother: str | None = None  # finest-level Krylov smoother override

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.maxit < 1:
            raise ValueError("maxit must be positive")
        if self.rhs_mode not in ("manufactured", "random"):
            raise ValueError(f"unknown rhs mode {self.rhs_mode!r}")
        if self.smoother not in (None, "gmres", "pcg"):
            raise ValueError(f"unknown smoother {self.smoother!r}")
        ProblemParams(self.alpha, self.beta, self.p, self.d)

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(self.alpha, self.beta, self.p, self.d)

    def echo(self) -> dict:
        return asdict(self)


def make_problem(cfg: ExperimentConfig):
    """Operator, right-hand side and exact discrete solution for `cfg`."""
    op = assemble(cfg.params, cfg.n)
    if cfg.rhs_mode == "manufactured":
        xstar = manufactured_coefficients(manufactured_solution(cfg.d), cfg.p, cfg.n)
    else:
        xstar = np.random.default_rng(cfg.seed).standard_normal(op.total_size)
    return op, build_rhs(op, xstar), xstar


def solve_problem(cfg: ExperimentConfig, op=None, b=None, hierarchies=None):
    """Run ``cfg.method``; returns ``(x, SolveReport)``.

    `hierarchies` may cache multigrid hierarchies keyed by ``"A"``/``"D"``.
    """
    if op is None or b is None:
        op, b, _ = make_problem(cfg)
    cache = {} if hierarchies is None else hierarchies
    echo = {"n": cfg.n, "p": cfg.p, "d": cfg.d, "alpha": cfg.alpha, "beta": cfg.beta}
    if cfg.method == "cg":
        x, rep = cg(op, b, tol=cfg.tol, maxit=cfg.maxit)
        rep.config.update(echo)
        return x, rep
    if cfg.method == "pwl":
        if "D" not in cache:
            d_op = assemble_block_diagonal(cfg.params, cfg.n)
            cache["D"] = build_hierarchy(d_op, cfg.p, SmootherConfig(cfg.smoother or "pcg"))
        h = cache["D"]
        return solve_pwl(op, h.levels[0].op, b, cfg.p, cfg.tol, cfg.maxit, hierarchy=h,
                         config=echo)
    if "A" not in cache:
        cache["A"] = build_hierarchy(op, cfg.p, SmootherConfig(cfg.smoother or "gmres"))
    solver = solve_pmim if cfg.method == "pmim" else solve_mim
    return solver(op, b, cfg.p, cfg.tol, cfg.maxit, hierarchy=cache["A"], config=echo)


# ----------------------------------------------------- reference tables

def _t(rows):
    return {p: dict(cells) for p, cells in rows.items()}


REFERENCE_TABLES = {
    "T1": dict(d=2, beta=0.1, methods=("pwl", "pmim", "mim", "cg"), cells=_t({
        1: [(16, (22, 7, 21, 57)), (32, (24, 7, 21, 123)), (64, (26, 7, 21, 252)), (128, (26, 7, 21, 519))],
        2: [(15, (23, 6, 15, 40)), (31, (24, 6, 15, 77)), (63, (25, 6, 15, 153)), (127, (26, 6, 16, 312))],
        3: [(14, (23, 5, 12, 48)), (30, (24, 5, 12, 73)), (62, (25, 6, 14, 150)), (126, (26, 6, 15, 311))],
        4: [(13, (23, 5, 11, 82)), (29, (24, 5, 12, 113)), (61, (25, 5, 13, 167)), (125, (26, 6, 14, 330))],
        5: [(12, (22, 5, 10, 125)), (28, (24, 5, 11, 206)), (60, (25, 5, 13, 267)), (124, (26, 6, 14, 383))],
        6: [(11, (22, 6, 11, 206)), (27, (24, 5, 12, 333)), (59, (25, 6, 13, 475)), (123, (26, 6, 14, 620))],
    })),
    "T2": dict(d=2, beta=0.01, methods=("pwl", "pmim", "mim", "cg"), cells=_t({
        1: [(16, (42, 18, 122, 115)), (32, (57, 19, 140, 291)), (64, (67, 21, 152, 685)), (128, (73, 21, 156, 1438))],
        2: [(15, (63, 16, 114, 91)), (31, (67, 17, 116, 207)), (63, (71, 18, 116, 427)), (127, (74, 18, 119, 867))],
        3: [(14, (67, 15, 94, 91)), (30, (68, 16, 94, 201)), (62, (72, 17, 102, 419)), (126, (75, 19, 110, 872))],
        4: [(13, (65, 15, 88, 107)), (29, (65, 15, 87, 207)), (61, (70, 17, 96, 435)), (125, (73, 19, 106, 922))],
        5: [(12, (61, 15, 80, 149)), (28, (64, 16, 85, 292)), (60, (68, 17, 92, 451)), (124, (72, 18, 103, 982))],
        6: [(11, (60, 16, 88, 223)), (27, (64, 17, 80, 436)), (59, (68, 17, 89, 680)), (123, (72, 18, 100, 1039))],
    })),
    "T3": dict(d=3, beta=0.1, methods=("pmim", "mim", "cg"), cells=_t({
        1: [(8, (7, 19, 27)), (16, (8, 22, 56)), (32, (8, 23, 120))],
        2: [(7, (6, 14, 29)), (15, (6, 15, 38)), (31, (6, 15, 74))],
        3: [(6, (5, 10, 55)), (14, (5, 11, 64)), (30, (5, 12, 76))],
        4: [(5, (6, 13, 79)), (13, (5, 10, 93)), (29, (5, 11, 114))],
        5: [(4, None), (12, (6, 15, 161)), (28, (5, 11, 212))],
        6: [(3, None), (11, (8, 15, 267)), (27, (6, 14, 353))],
    })),
    "T4": dict(d=3, beta=0.01, methods=("pmim", "mim", "cg"), cells=_t({
        1: [(8, (12, 61, 38)), (16, (17, 121, 114)), (32, (20, 158, 292))],
        2: [(7, (15, 106, 46)), (15, (16, 112, 103)), (31, (16, 120, 205))],
        3: [(6, (13, 88, 72)), (14, (14, 87, 102)), (30, (15, 94, 202))],
        4: [(5, (16, 72, 114)), (13, (15, 83, 142)), (29, (15, 85, 214))],
        5: [(4, None), (12, (17, 88, 229)), (28, (15, 81, 316))],
        6: [(3, None), (11, (19, 105, 360)), (27, (17, 80, 487))],
    })),
}


def count_tolerance(method: str, reference: int) -> float:
    """Allowed deviation: 15% for CG, else the larger of 2 iterations and 20%."""
    if method == "cg":
        return 0.15 * reference
    return max(2.0, 0.2 * reference)


def run_cell(d: int, p: int, n: int, alpha: float, beta: float, methods=METHODS,
             tol: float = 1e-7, maxit: int = 5000) -> dict:
    """Iteration counts of `methods` on one configuration with the manufactured RHS."""
    base = ExperimentConfig(d, p, n, alpha, beta, methods[0], tol, maxit)
    op, b, _ = make_problem(base)
    hier = {}
    out = {}
    for m in methods:
        cfg = ExperimentConfig(d, p, n, alpha, beta, m, tol, maxit)
        _, rep = solve_problem(cfg, op, b, hier)
        out[m] = {"iterations": rep.iterations, "converged": rep.converged,
                  "relres_final": rep.relres_final, "seconds": rep.wall_time}
    return out


def run_table(table_id: str, degrees=None, sizes=None, methods=None, alpha: float = 1.0,
              progress: Callable | None = None) -> dict:
    """Reproduce a reference iteration table; failures are recorded per cell."""
    if table_id not in REFERENCE_TABLES:
        raise ValueError(f"unknown table {table_id!r}; choose from {sorted(REFERENCE_TABLES)}")
    table = REFERENCE_TABLES[table_id]
    methods = tuple(methods or table["methods"])
    report = {"table": table_id, "d": table["d"], "alpha": alpha, "beta": table["beta"],
              "methods": list(methods), "cells": []}
    for p, row in table["cells"].items():
        if degrees is not None and p not in degrees:
            continue
        for n, ref in row.items():
            if sizes is not None and n not in sizes:
                continue
            cell = {"p": p, "n": n}
            if ref is None:
                cell["status"] = "n/a"
                report["cells"].append(cell)
                continue
            reference = dict(zip(table["methods"], ref))
            try:
                got = run_cell(table["d"], p, n, alpha, table["beta"], methods)
            except Exception as exc:  # recorded, the run continues
                cell.update(status="error", error=f"{type(exc).__name__}: {exc}")
                report["cells"].append(cell)
                continue
            cell["status"] = "ok"
            for m in methods:
                it = got[m]["iterations"]
                dev = it - reference[m]
                cell[m] = dict(got[m], reference=reference[m], deviation=dev,
                               within_tolerance=bool(got[m]["converged"]
                                                     and abs(dev) <= count_tolerance(m, reference[m])))
            report["cells"].append(cell)
            if progress is not None:
                progress(cell)
    return report


# ------------------------------------------------------------- CSV output

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(header, rows, path=None) -> str:
    """Serialize rows with 17 significant digits; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def symbol_rows(params: ProblemParams, n):
    """Rows ``(k, theta..., lambda..., laplacian, lower, upper)`` in sorted-Laplacian order."""
    s = sampling_for_mesh(params, n)
    lo = min(params.alpha, params.beta) * s.laplacian_set
    hi = max(params.alpha, params.beta) * s.laplacian_set
    header = (["k"] + [f"theta_{i + 1}" for i in range(params.d)]
              + [f"lambda_{i + 1}" for i in range(params.d)] + ["laplacian", "lower_bound", "upper_bound"])
    rows = [[k + 1, *s.thetas[k], *s.lambda_sets[:, k], s.laplacian_set[k], lo[k], hi[k]]
            for k in range(len(s.laplacian_set))]
    return header, rows, s


def run_symbol_figure(fig_id: str, p: int = 3, beta: float = 0.5, alpha: float = 1.0,
                      n: int | None = None, path=None) -> str:
    """CSV behind a symbol figure.

    ``fig_id`` is ``bounds2d``/``bounds3d`` (symbol samples and bounds) or
    ``comp2d``/``comp3d`` (rank-aligned matrix versus symbol eigenvalues).
    """
    kinds = {"bounds2d": (2, 20), "bounds3d": (3, 10), "comp2d": (2, 40), "comp3d": (3, 10)}
    if fig_id not in kinds:
        raise ValueError(f"unknown figure {fig_id!r}; choose from {sorted(kinds)}")
    d, n_default = kinds[fig_id]
    n = n_default if n is None else n
    params = ProblemParams(alpha, beta, p, d)
    if fig_id.startswith("bounds"):
        header, rows, _ = symbol_rows(params, n)
        return write_csv(header, rows, path)
    s = sampling_for_mesh(params, n)
    comp = compare_spectrum(assemble(params, n), s, float(n) ** (d - 2))
    return write_csv(["rank", "matrix_eig", "symbol_eig", "rel_gap"], comp.rows(), path)


def bounds_summary(params: ProblemParams, n) -> dict:
    rep = verify_bounds(sampling_for_mesh(params, n), params)
    return {"d": params.d, "p": params.p, "alpha": params.alpha, "beta": params.beta, "n": n,
            "violations": rep.n_violations, "max_violation": rep.max_violation, "tol": float(rep.tol)}
