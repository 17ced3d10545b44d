"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line that is repeated in the terminal
summary.  Table reproduction (criteria 5 and 6) and the 3D eigensolves are
marked slow; they still run under a plain ``pytest``.
"""
import time
from fractions import Fraction
from math import comb, factorial

import mpmath
import numpy as np
import pytest

from curldiv import experiments as ex
from curldiv.matrices import _quadrature_factor, central_rows, central_stencil, factors_1d
from curldiv.operators import assemble
from curldiv.spectral import compare_spectrum, near_zero_fraction
from curldiv.symbols import ProblemParams, sampling_for_mesh, symbol_a, symbol_m, symbol_s, verify_bounds

# ----------------------------------------------------------------- criterion 1


def _mp_symbols(p, thetas, dps=60):
    """m_p s_p - a_p^2 in extended precision from exact rational spline values."""
    mpmath.mp.dps = dps
    q = 2 * p + 1

    def phi(x, r):
        tot = Fraction(0)
        for k in range(q + 2):
            if x - k > 0:
                tot += (-1) ** k * comb(q + 1, k) * Fraction(factorial(q), factorial(q - r)) \
                    * Fraction(x - k) ** (q - r)
        return tot / factorial(q)

    c = [[mpmath.mpf(phi(j, r).numerator) / phi(j, r).denominator for j in range(q + 1)]
         for r in range(3)]
    out = []
    for t in thetas:
        t = mpmath.mpf(t)
        m = c[0][p + 1] + 2 * sum(c[0][p + 1 - k] * mpmath.cos(k * t) for k in range(1, p + 1))
        a = -2 * sum(c[1][p + 1 - k] * mpmath.sin(k * t) for k in range(1, p + 1))
        s = -c[2][p + 1] - 2 * sum(c[2][p + 1 - k] * mpmath.cos(k * t) for k in range(1, p + 1))
        out.append(m * s - a**2)
    return out


def test_criterion_1_symbol_identities(record_criterion):
    t0 = time.perf_counter()
    th = np.linspace(-np.pi, np.pi, 1000)
    ident = max(np.abs(symbol_s(p, th) - symbol_m(p - 1, th) * (2 - 2 * np.cos(th))).max()
                for p in range(2, 7))
    lower_short, upper_over = {}, 0.0
    for p in range(1, 7):
        m = symbol_m(p, th)
        lower_short[p] = float(max(0.0, (2 / np.pi) ** (2 * p) - m.min()))
        upper_over = max(upper_over, float(m.max() - 1.0))
    gap_min = min((symbol_m(p, th) * symbol_s(p, th) - symbol_a(p, th) ** 2).min() for p in range(1, 7))
    # "equality only at 0": strict positivity away from 0 needs extended precision
    strict = True
    for p in range(1, 7):
        g = _mp_symbols(p, th[th != 0.0][::10])
        strict &= all(v > 0 for v in g)
        strict &= abs(_mp_symbols(p, [0.0])[0]) < mpmath.mpf(10) ** -50
    ok_ident = ident <= 1e-13
    ok_range = max(lower_short.values()) <= 1e-13 and upper_over <= 1e-13
    ok_gap = gap_min >= -1e-13 and strict
    failing = [p for p, v in lower_short.items() if v > 1e-13]
    detail = (f"s_p = m_(p-1)(2-2cos) max err {ident:.1e}; "
              f"m_p >= (2/pi)^(2p) {'holds' if not failing else f'violated for p={failing}'} "
              f"(max shortfall {max(lower_short.values()):.3f}), m_p <= 1 overshoot {upper_over:.1e}; "
              f"m s - a^2 min {gap_min:.1e}, strictly positive off 0: {bool(strict)}; "
              f"{time.perf_counter() - t0:.2f}s")
    ok = record_criterion(1, "symbol identities", ok_ident and ok_range and ok_gap, detail)
    assert ok, detail


# ----------------------------------------------------------------- criterion 2

def test_criterion_2_bound_theorems(record_criterion):
    t0 = time.perf_counter()
    results = []
    for d, n in ((2, 20), (3, 10)):
        for p in (3, 5):
            for beta in (0.5, 0.01):
                P = ProblemParams(1.0, beta, p, d)
                rep = verify_bounds(sampling_for_mesh(P, n), P)
                results.append(((d, p, beta, n), rep.n_violations, rep.max_violation))
    total = sum(r[1] for r in results)
    detail = (f"{len(results)} configurations, {total} violations, "
              f"max violation {max(r[2] for r in results):.1e}; {time.perf_counter() - t0:.1f}s")
    ok = record_criterion(2, "bound theorems", total == 0, detail)
    assert ok, detail


# ----------------------------------------------------------------- criterion 3

def _spectral_case(d, n, beta):
    P = ProblemParams(1.0, beta, 3, d)
    comp = compare_spectrum(assemble(P, n), sampling_for_mesh(P, n), float(n) ** (d - 2))
    return comp, near_zero_fraction(comp.matrix_eigs), near_zero_fraction(comp.symbol_eigs)


@pytest.mark.slow
def test_criterion_3_spectral_distribution(record_criterion):
    # The 3D comparison runs at n = 10: at n = 20 the dense matrix alone
    # needs 6.2 GB, more than this machine has.  The criterion allows n = 10.
    t0 = time.perf_counter()
    parts, ok = [], True
    for d, n in ((2, 40), (3, 10)):
        for beta in (0.5, 0.01):
            comp, frac_m, frac_s = _spectral_case(d, n, beta)
            cov_ok = comp.coverage >= 0.90
            ok &= cov_ok
            text = f"{d}D n={n} beta={beta}: coverage {comp.coverage:.3f}{'' if cov_ok else ' (<0.90)'}"
            if beta == 0.01:
                target = 0.5 if d == 2 else 1 / 3
                frac_ok = abs(frac_m - target) <= 0.05
                ok &= frac_ok
                text += (f", near-zero fraction {frac_m:.3f} (symbol {frac_s:.3f}) vs "
                         f"{target:.3f}+-0.05{'' if frac_ok else ' FAIL'}")
            parts.append(text)
    detail = "; ".join(parts) + f"; {time.perf_counter() - t0:.0f}s"
    ok = record_criterion(3, "spectral distribution", ok, detail)
    assert ok, detail


# ----------------------------------------------------------------- criterion 4

def test_criterion_4_dual_path_entries(record_criterion):
    t0 = time.perf_counter()
    worst = 0.0
    kinds = {"mass": (0, 0), "advection": (0, 1), "stiffness": (1, 1)}
    for p in range(1, 7):
        for n in range(p + 2, 65):
            for kind, (r1, r2) in kinds.items():
                q = _quadrature_factor(p, n, r1, r2)
                st = central_stencil(p, n, kind)
                for i in central_rows(p, n):
                    worst = max(worst, float(np.abs(q[i, i - p:i + p + 1] - st).max()))
    rng = np.random.default_rng(11)
    worst_mv = 0.0
    for p in (1, 2, 3):
        for n in range(max(p, 2), 9):
            al, be = 1.0, 0.3
            M, A, S = (f.to_dense() for f in factors_1d(p, n))
            dense = np.block([
                [al * np.kron(M, S) + be * np.kron(S, M), -al * np.kron(A.T, A) + be * np.kron(A, A.T)],
                [-al * np.kron(A, A.T) + be * np.kron(A.T, A), al * np.kron(S, M) + be * np.kron(M, S)]])
            op = assemble(ProblemParams(al, be, p), n)
            for _ in range(5):
                x = rng.standard_normal(op.total_size)
                worst_mv = max(worst_mv, float(np.abs(op @ x - dense @ x).max()))
    ok = worst <= 1e-12 and worst_mv <= 1e-12
    detail = (f"Toeplitz vs quadrature max |diff| {worst:.1e} (p=1..6, n<=64); "
              f"Kronecker matvec vs dense {worst_mv:.1e} (d=2, p<=3, n<=8); {time.perf_counter() - t0:.1f}s")
    ok = record_criterion(4, "dual-path matrix entries", ok, detail)
    assert ok, detail


# ------------------------------------------------------------- criteria 5, 6

@pytest.fixture(scope="module")
def tables():
    return {tid: ex.run_table(tid) for tid in ("T1", "T2", "T3", "T4")}


ANCHORS = {"T1": (3, 30), "T2": (3, 30), "T3": (2, 15), "T4": (3, 14)}


@pytest.mark.slow
def test_criterion_5_iteration_tables(tables, record_criterion):
    parts, ok = [], True
    for tid, rep in tables.items():
        cells = [c for c in rep["cells"] if c["status"] == "ok"]
        errors = [c for c in rep["cells"] if c["status"] == "error"]
        ok &= not errors
        per_method = []
        for m in rep["methods"]:
            good = sum(c[m]["within_tolerance"] for c in cells)
            ok &= good == len(cells)
            per_method.append(f"{m} {good}/{len(cells)}")
        p, n = ANCHORS[tid]
        anchor = next(c for c in cells if (c["p"], c["n"]) == (p, n))
        got = "/".join(str(anchor[m]["iterations"]) for m in rep["methods"])
        ref = "/".join(str(anchor[m]["reference"]) for m in rep["methods"])
        parts.append(f"{tid}: {', '.join(per_method)} within tolerance; anchor p={p} n={n} "
                     f"{got} (reference {ref})")
    detail = "; ".join(parts)
    ok = record_criterion(5, "iteration tables", ok, detail)
    assert ok, detail


def _spread(rep, method, key="iterations"):
    out = {}
    for c in rep["cells"]:
        if c["status"] == "ok":
            out.setdefault(c["p"], []).append(c[method][key])
    return {p: max(v) - min(v) for p, v in out.items()}


@pytest.mark.slow
def test_criterion_6_optimality_trends(tables, record_criterion):
    parts, ok = [], True
    for tid, rep in tables.items():
        for m in ("mim", "pmim"):
            ours, ref = _spread(rep, m), _spread(rep, m, "reference")
            bad = {p: s for p, s in ours.items() if s > 3}
            ok &= not bad
            if bad:
                parts.append(f"{tid} {m} spread >3 at p={sorted(bad)} (max {max(bad.values())}; "
                             f"reference max spread {max(ref.values())})")
    for tid in ("T1", "T3"):
        vals = [c["pmim"]["iterations"] for c in tables[tid]["cells"] if c["status"] == "ok"]
        in_range = all(5 <= v <= 8 for v in vals)
        ok &= in_range
        parts.append(f"{tid} P_MIM range [{min(vals)}, {max(vals)}] vs [5, 8]")
    detail = "; ".join(parts)
    ok = record_criterion(6, "optimality/robustness trends", ok, detail)
    assert ok, detail


# ----------------------------------------------------------------- criterion 7

def test_criterion_7_solver_correctness(record_criterion):
    worst, parts = 0.0, []
    for beta in (0.1, 0.01):
        cfg = ex.ExperimentConfig(2, 2, 15, 1.0, beta, "cg", tol=1e-12)
        op, b, xs = ex.make_problem(cfg)
        hier = {}
        for m in ex.METHODS:
            x, rep = ex.solve_problem(ex.ExperimentConfig(2, 2, 15, 1.0, beta, m, tol=1e-12), op, b, hier)
            err = float(np.linalg.norm(x - xs) / np.linalg.norm(xs))
            worst = max(worst, err)
            parts.append(f"{m}@{beta} {err:.1e}")
    detail = f"max relative error {worst:.1e} <= 1e-8 ({', '.join(parts)})"
    ok = record_criterion(7, "solver correctness", worst <= 1e-8, detail)
    assert ok, detail
