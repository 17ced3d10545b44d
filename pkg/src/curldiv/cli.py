"""Command-line front end.

Exit status: 0 on success, 2 for an invalid configuration, 3 when a solve
does not reach the requested tolerance.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments as ex
from .matrices import factors_1d
from .operators import assemble
from .spectral import compare_spectrum, near_zero_fraction
from .symbols import ProblemParams, sampling_for_mesh

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(sp):
    sp.add_argument("--dim", type=int, choices=(2, 3), default=2)
    sp.add_argument("--p", type=int, default=3, help="spline degree")
    sp.add_argument("--n", type=int, default=None, help="intervals per direction")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--beta", type=float, default=0.1)
    sp.add_argument("--out", default=None, help="output file (default: stdout)")
    sp.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="curldiv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("assemble", help="export the operator or a 1D factor as (row, col, value)")
    _common(sp)
    sp.add_argument("--factor", choices=("M", "A", "S"), default=None,
                    help="dump one 1D factor instead of the block operator")
    sp.add_argument("--block-diagonal", action="store_true")

    sp = sub.add_parser("symbol", help="sample eigenvalue functions and the Laplacian symbol")
    _common(sp)

    sp = sub.add_parser("bounds", help="check the min/max(alpha, beta) Laplacian bounds")
    _common(sp)

    sp = sub.add_parser("spectrum", help="compare matrix eigenvalues with symbol samples")
    _common(sp)
    sp.add_argument("--gap", type=float, default=0.10, help="relative gap threshold")

    sp = sub.add_parser("solve", help="solve with the manufactured or a random right-hand side")
    _common(sp)
    sp.add_argument("--method", choices=ex.METHODS, default="pmim")
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--maxit", type=int, default=5000)
    sp.add_argument("--seed", type=int, default=None,
                    help="use a random right-hand side with this seed")
    sp.add_argument("--smoother", choices=("gmres", "pcg"), default=None,
                    help="finest-level Krylov smoother (default: pcg for pwl, gmres otherwise)")

    sp = sub.add_parser("table", help="rerun a reference iteration table")
    sp.add_argument("--table", choices=sorted(ex.REFERENCE_TABLES), required=True)
    sp.add_argument("--p", type=int, nargs="*", default=None, help="restrict to these degrees")
    sp.add_argument("--n", type=int, nargs="*", default=None, help="restrict to these sizes")
    sp.add_argument("--method", choices=ex.METHODS, nargs="*", default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("json",), default="json")
    return ap


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True)


def _params(args) -> ProblemParams:
    return ProblemParams(args.alpha, args.beta, args.p, args.dim)


def _default_n(args, fallback):
    return args.n if args.n is not None else fallback


def _cmd_assemble(args):
    n = _default_n(args, 8)
    if args.factor is not None:
        M, A, S = factors_1d(args.p, n)
        mat = {"M": M, "A": A, "S": S}[args.factor].to_sparse().tocoo()
    else:
        op = assemble(_params(args), n, diagonal_only=args.block_diagonal)
        mat = op.to_sparse_rows().tocoo()
    order = np.lexsort((mat.col, mat.row))
    if args.format == "json":
        return _json({"rows": int(mat.shape[0]), "cols": int(mat.shape[1]), "nnz": int(mat.nnz)})
    rows = [(int(mat.row[k]), int(mat.col[k]), float(mat.data[k])) for k in order]
    return ex.write_csv(["row", "col", "value"], rows)


def _cmd_symbol(args):
    params = _params(args)
    n = _default_n(args, 20 if args.dim == 2 else 10)
    header, rows, s = ex.symbol_rows(params, n)
    if args.format == "json":
        return _json({"d": params.d, "p": params.p, "n": n, "samples": len(rows),
                      "laplacian_max": float(s.laplacian_set.max()),
                      "lambda_max": [float(v.max()) for v in s.lambda_sets]})
    return ex.write_csv(header, rows)


def _cmd_bounds(args):
    params = _params(args)
    n = _default_n(args, 20 if args.dim == 2 else 10)
    if args.format == "csv":
        header, rows, _ = ex.symbol_rows(params, n)
        return ex.write_csv(header, rows)
    return _json(ex.bounds_summary(params, n))


def _cmd_spectrum(args):
    params = _params(args)
    n = _default_n(args, 40 if args.dim == 2 else 10)
    comp = compare_spectrum(assemble(params, n), sampling_for_mesh(params, n),
                            float(n) ** (args.dim - 2), args.gap)
    if args.format == "csv":
        return ex.write_csv(["rank", "matrix_eig", "symbol_eig", "rel_gap"], comp.rows())
    return _json({"d": params.d, "p": params.p, "n": n, "alpha": params.alpha,
                  "beta": params.beta, "size": int(comp.matrix_eigs.size),
                  "coverage": comp.coverage, "outliers": comp.outlier_count,
                  "gap_threshold": args.gap,
                  "matrix_near_zero_fraction": near_zero_fraction(comp.matrix_eigs),
                  "symbol_near_zero_fraction": near_zero_fraction(comp.symbol_eigs)})


def _cmd_solve(args):
    cfg = ex.ExperimentConfig(args.dim, args.p, _default_n(args, 30), args.alpha, args.beta,
                              args.method, args.tol, args.maxit,
                              "manufactured" if args.seed is None else "random",
                              0 if args.seed is None else args.seed, args.smoother)
    _, rep = ex.solve_problem(cfg)
    summary = rep.summary()
    summary["config"] = cfg.echo()
    text = _json(summary)
    return text, (EXIT_OK if rep.converged else EXIT_NOT_CONVERGED)


def _cmd_table(args):
    rep = ex.run_table(args.table, args.p, args.n, args.method)
    return _json(rep)


_COMMANDS = {"assemble": _cmd_assemble, "symbol": _cmd_symbol, "bounds": _cmd_bounds,
             "spectrum": _cmd_spectrum, "solve": _cmd_solve, "table": _cmd_table}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "format", None) is None:
        args.format = "json" if args.command in ("bounds", "solve", "table") else "csv"
    try:
        result = _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"curldiv: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = EXIT_OK
    if isinstance(result, tuple):
        result, code = result
    _emit(result, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
