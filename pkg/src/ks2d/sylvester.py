"""Lyapunov-Sylvester operator algebra and solvers.

The per-step linear problem of the scheme is K(X) = C with

    K(X) = X - sigma*alpha*Gamma(L_A(X)),
    Gamma(X) = q*X - delta*kappa*L_A(X),
    L_A(X) = A X + X A^T,

where A is the Neumann second-difference matrix.  Two solvers are
provided: a fast spectral solver that diagonalizes A in its closed-form
cosine eigenbasis, and a dense Kronecker-vectorization solver for general
sum_i A_i X B_i = C problems which doubles as a correctness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .grid import GridError, SchemeParams, neumann_matrix

#: Entries of the spectral symbol below this magnitude are treated as zero.
SINGULARITY_TOL = 1e-12

#: Dense Kronecker systems beyond this vec dimension are refused.
KRON_SIZE_LIMIT = 4096


class NearSingular(RuntimeError):
    """The spectral symbol has an entry too close to zero to divide by."""


class SingularSystem(RuntimeError):
    """The assembled Kronecker system has a negligible pivot."""


class SizeLimit(RuntimeError):
    """The dense Kronecker solve would exceed the size limit."""


def _check_shapes(A: np.ndarray, X: np.ndarray) -> None:
    if A.shape != X.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"shape mismatch: {A.shape} vs {X.shape}")


def lyap_apply(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """L_A(X) = A X + X A^T."""
    _check_shapes(A, X)
    return A @ X + X @ A.T


def gamma_apply(params: SchemeParams, A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Gamma(X) = q X - delta*kappa*L_A(X)."""
    return params.q * X - params.delta * params.kappa * lyap_apply(A, X)


def k_apply(params: SchemeParams, A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """K(X) = X - sigma*alpha*Gamma(L_A(X)).

    Gamma is affine in L_A, so Gamma and L_A commute and the composition
    order is immaterial.
    """
    return X - params.sigma * params.alpha * gamma_apply(params, A, lyap_apply(A, X))


@dataclass(frozen=True)
class SpectralBasis:
    """Eigen-decomposition of the Neumann difference matrix.

    Column k of P is the (unit-normalized) sampled cosine eigenvector of A
    with eigenvalue lambda_k = 2*cos(k*pi/J) - 2.  A is not symmetric (its
    corner rows carry a 2), so P is not orthogonal and P_inv is stored
    explicitly.
    """

    J: int
    eigenvalues: np.ndarray
    P: np.ndarray
    P_inv: np.ndarray
    A: np.ndarray = field(repr=False)


def cosine_eigenbasis(J: int) -> SpectralBasis:
    """Closed-form eigenbasis of neumann_matrix(J).

    lambda_k = 2*cos(k*pi/J) - 2 = -4*sin^2(k*pi/(2J)) with eigenvector
    v_k(j) = cos(k*pi*j/J); eigenvalues are 0 = lambda_0 > ... > lambda_J = -4.
    """
    if J < 2:
        raise GridError(f"J must be >= 2, got {J}")
    k = np.arange(J + 1)
    eigenvalues = 2.0 * np.cos(k * np.pi / J) - 2.0
    j = np.arange(J + 1)
    P = np.cos(np.outer(j, k) * (np.pi / J))
    P /= np.linalg.norm(P, axis=0, keepdims=True)
    P_inv = np.linalg.solve(P, np.eye(J + 1))
    return SpectralBasis(J=J, eigenvalues=eigenvalues, P=P, P_inv=P_inv,
                         A=neumann_matrix(J))


def spectral_symbol(params: SchemeParams, basis: SpectralBasis) -> np.ndarray:
    """Scalar multiplier K applies to each eigen-mode pair.

    k[i, j] = 1 - sigma*alpha*(q*mu - delta*kappa*mu^2) with
    mu = lambda_i + lambda_j.  K is invertible iff no entry vanishes.
    """
    lam_sum = np.add.outer(basis.eigenvalues, basis.eigenvalues)
    return 1.0 - params.sigma * params.alpha * (
        params.q * lam_sum - params.delta * params.kappa * lam_sum ** 2)


def solve_k(params: SchemeParams, basis: SpectralBasis, C: np.ndarray) -> np.ndarray:
    """Solve K(X) = C by spectral diagonalization.

    In the eigenbasis K acts entrywise as multiplication by the spectral
    symbol: X = P * (P^-1 C P^-T / k) * P^T.
    """
    if C.shape != (basis.J + 1, basis.J + 1):
        raise ValueError(f"rhs shape {C.shape} does not match J={basis.J}")
    symbol = spectral_symbol(params, basis)
    if np.min(np.abs(symbol)) <= SINGULARITY_TOL:
        raise NearSingular(
            "spectral symbol has a zero entry; the time step violates the "
            f"invertibility regime (min |k| = {np.min(np.abs(symbol)):.3e})")
    C_hat = basis.P_inv @ C @ basis.P_inv.T
    return basis.P @ (C_hat / symbol) @ basis.P.T


@dataclass(frozen=True)
class GeneralSylvesterProblem:
    """sum_i A_i X B_i = C with square matrices of one common shape."""

    terms: tuple[tuple[np.ndarray, np.ndarray], ...]
    rhs: np.ndarray

    def __post_init__(self):
        if not self.terms:
            raise ValueError("terms must be non-empty")
        shape = self.rhs.shape
        for A_i, B_i in self.terms:
            if A_i.shape != shape or B_i.shape != shape:
                raise ValueError("all matrices must share one shape")


def k_problem(params: SchemeParams, A: np.ndarray, C: np.ndarray) -> GeneralSylvesterProblem:
    """Expand K(X) = C into explicit sum_i A_i X B_i = C terms.

    K = I - sigma*alpha*(q*L_A - delta*kappa*L_A^2) expands to six terms
    involving I, A and A^2 on either side.
    """
    n = A.shape[0]
    I = np.eye(n)
    sa = params.sigma * params.alpha
    c1 = -sa * params.q
    c2 = sa * params.delta * params.kappa
    A2 = A @ A
    terms = (
        (I, I),
        (c1 * A, I),
        (c1 * I, A.T),
        (c2 * A2, I),
        (2.0 * c2 * A, A.T),
        (c2 * I, A2.T),
    )
    return GeneralSylvesterProblem(terms=terms, rhs=C)


def kron_solve(problem: GeneralSylvesterProblem) -> np.ndarray:
    """Direct dense solve of sum_i A_i X B_i = C by Kronecker vectorization.

    With column-stacking vec, vec(A X B) = (B^T kron A) vec(X), so the
    assembled system is G = sum_i (B_i^T kron A_i).  G is factored by LU
    with partial pivoting; a pivot below 1e-14 times the matrix scale
    raises SingularSystem.
    """
    n = problem.rhs.shape[0]
    if n * n > KRON_SIZE_LIMIT:
        raise SizeLimit(f"vec dimension {n * n} exceeds {KRON_SIZE_LIMIT}")
    G = np.zeros((n * n, n * n))
    for A_i, B_i in problem.terms:
        G += np.kron(B_i.T, A_i)
    lu, piv = scipy.linalg.lu_factor(G, check_finite=False)
    scale = np.max(np.abs(G))
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or np.min(pivots) <= 1e-14 * scale:
        raise SingularSystem(
            f"pivot {np.min(pivots):.3e} below threshold {1e-14 * scale:.3e}")
    x = scipy.linalg.lu_solve((lu, piv), problem.rhs.flatten(order="F"))
    return x.reshape((n, n), order="F")
