"""Finite-difference solver for the 2D Kuramoto-Sivashinsky equation.

The fourth-order problem is split into a coupled second-order system; each
implicit step solves a generalized Sylvester matrix equation, either through
the closed-form cosine eigenbasis of the Neumann Laplacian stencil or through
a dense Kronecker-product reference solver used for cross-checking.
"""

from .grid import GridError, GridSpec, SchemeParams, build_grid, neumann_matrix
from .mms import (ManufacturedCase, error_Er, exact_u, exact_v, forcing_g,
                  rate_C, run_case, table_run, truncation_order_check)
from .stepper import (NonFinite, RunReport, StepperState, bootstrap,
                      nonlinear_F, run, step, step_beta0, step_oracle)
from .sylvester import (GeneralSylvesterProblem, NearSingular, SingularSystem,
                        SizeLimit, SpectralBasis, cosine_eigenbasis,
                        gamma_apply, k_apply, k_problem, kron_solve,
                        lyap_apply, solve_k, spectral_symbol)

__version__ = "1.0.0"

__all__ = [
    "GridError", "GridSpec", "SchemeParams", "build_grid", "neumann_matrix",
    "ManufacturedCase", "error_Er", "exact_u", "exact_v", "forcing_g",
    "rate_C", "run_case", "table_run", "truncation_order_check",
    "NonFinite", "RunReport", "StepperState", "bootstrap", "nonlinear_F",
    "run", "step", "step_beta0", "step_oracle",
    "GeneralSylvesterProblem", "NearSingular", "SingularSystem", "SizeLimit",
    "SpectralBasis", "cosine_eigenbasis", "gamma_apply", "k_apply",
    "k_problem", "kron_solve", "lyap_apply", "solve_k", "spectral_symbol",
]
