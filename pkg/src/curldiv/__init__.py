"""B-spline Galerkin discretization of the curl-div operator, its spectral
symbols, and symbol-guided multigrid / Krylov solvers."""
from .bspline import (KnotVector, QuadratureRule, basis_eval, cardinal_deriv, cardinal_eval,
                      gauss_legendre)
from .matrices import (BandedMatrix1D, advection_matrix, mass_matrix, stiffness_matrix,
                       toeplitz_mass_factor)
from .symbols import (ProblemParams, SymbolGrid, SymbolSampling, eig_functions,
                      laplacian_symbol, sample_protocol, symbol_a, symbol_f, symbol_m,
                      symbol_s, verify_bounds)

__version__ = "0.1.0"
