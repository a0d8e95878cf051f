"""Time integration of the coupled (U, V) system.

Each step solves the Lyapunov-Sylvester problem

    K(U^{n+1}) = sigma*(1-2a)*L_A(Gamma(U^n)) + sigma*a*L_A(Gamma(U^{n-1}))
                 + U^{n-1} + sigma*lam*F^n + 2l*G^n

(a = alpha) and then recovers V^{n+1} from the three-level closure
b*V^{n+1} = a*Gamma(U^{n+1}) + (1-2a)*Gamma(U^n) + a*Gamma(U^{n-1})
            - (1-2b)*V^n - b*V^{n-1}.  The V^n terms cancel from the
U update, so V enters the trajectory only through its own recursion.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import GridSpec, SchemeParams
from .sylvester import (NearSingular, SpectralBasis, gamma_apply, k_problem,
                        kron_solve, lyap_apply, solve_k)

#: Forcing callable g(X, Y, t) -> array; X, Y are full coordinate grids.
ForcingFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class NonFinite(RuntimeError):
    """A step produced NaN or infinity (instability)."""


@dataclass(frozen=True)
class StepperState:
    """Two consecutive time levels of the coupled fields.

    ``n`` indexes the "curr" level; t_curr = t0 + n*l.
    """

    U_prev: np.ndarray
    V_prev: np.ndarray
    U_curr: np.ndarray
    V_curr: np.ndarray
    n: int
    t_curr: float


@dataclass
class RunReport:
    """Per-run record: step norms, failure status, wall time.

    ``norms`` rows are (n, t, ||U^n||_F, ||V^n||_F).  ``Er`` and ``C`` are
    filled by the verification harness when an exact solution is known.
    """

    N: int
    norms: list
    status: str = "ok"
    failed_step: Optional[int] = None
    Er: Optional[float] = None
    C: Optional[float] = None
    wall_ms: float = 0.0


def nonlinear_F(U: np.ndarray) -> np.ndarray:
    """Squared centered gradient term of the scheme.

    F[j,m] = ((U[j+1,m]-U[j-1,m])^2 + (U[j,m+1]-U[j,m-1])^2) / 4, with
    Neumann ghost reflection at the boundary (U[-1] = U[1] etc.), so the
    difference along the outward normal vanishes there.
    """
    dx = np.zeros_like(U)
    dy = np.zeros_like(U)
    dx[1:-1, :] = U[2:, :] - U[:-2, :]
    dy[:, 1:-1] = U[:, 2:] - U[:, :-2]
    return 0.25 * (dx * dx + dy * dy)


def _forcing_field(forcing: Optional[ForcingFn], grid: GridSpec,
                   t: float) -> Optional[np.ndarray]:
    if forcing is None:
        return None
    X, Y = grid.meshgrid()
    return np.asarray(forcing(X, Y, t), dtype=float)


def _u_rhs(state: StepperState, params: SchemeParams, grid: GridSpec,
           A: np.ndarray, forcing: Optional[ForcingFn]) -> np.ndarray:
    a, s = params.alpha, params.sigma
    rhs = (s * (1.0 - 2.0 * a) * lyap_apply(A, gamma_apply(params, A, state.U_curr))
           + s * a * lyap_apply(A, gamma_apply(params, A, state.U_prev))
           + state.U_prev
           + s * params.lam * nonlinear_F(state.U_curr))
    G = _forcing_field(forcing, grid, state.t_curr)
    if G is not None:
        rhs = rhs + 2.0 * grid.l * G
    return rhs


def _require_finite(*fields: np.ndarray) -> None:
    for f in fields:
        if not np.all(np.isfinite(f)):
            raise NonFinite("non-finite field value (instability)")


def step(state: StepperState, params: SchemeParams, grid: GridSpec,
         basis: SpectralBasis, forcing: Optional[ForcingFn] = None) -> StepperState:
    """Advance one level with beta != 0."""
    if params.beta == 0.0:
        raise ValueError("step requires beta != 0; use step_beta0")
    A = basis.A
    rhs = _u_rhs(state, params, grid, A, forcing)
    U_next = solve_k(params, basis, rhs)
    a, b = params.alpha, params.beta
    V_next = (a * gamma_apply(params, A, U_next)
              + (1.0 - 2.0 * a) * gamma_apply(params, A, state.U_curr)
              + a * gamma_apply(params, A, state.U_prev)
              - (1.0 - 2.0 * b) * state.V_curr
              - b * state.V_prev) / b
    _require_finite(U_next, V_next)
    return StepperState(U_prev=state.U_curr, V_prev=state.V_curr,
                        U_curr=U_next, V_curr=V_next,
                        n=state.n + 1, t_curr=state.t_curr + grid.l)


def step_beta0(state: StepperState, params: SchemeParams, grid: GridSpec,
               basis: SpectralBasis, forcing: Optional[ForcingFn] = None) -> StepperState:
    """Advance one level with beta = 0.

    The U update is the same elimination as in the general case.  With
    beta = 0 the closure defines V at the *current* level from the three
    U levels around it; the newest V slot carries the zero-lag
    reconstruction Gamma(U^{n+1}) until the next step overwrites it.
    """
    if params.beta != 0.0:
        raise ValueError("step_beta0 requires beta = 0")
    A = basis.A
    rhs = _u_rhs(state, params, grid, A, forcing)
    U_next = solve_k(params, basis, rhs)
    a = params.alpha
    V_curr_closed = (a * gamma_apply(params, A, U_next)
                     + (1.0 - 2.0 * a) * gamma_apply(params, A, state.U_curr)
                     + a * gamma_apply(params, A, state.U_prev))
    V_next = gamma_apply(params, A, U_next)
    _require_finite(U_next, V_next)
    return StepperState(U_prev=state.U_curr, V_prev=V_curr_closed,
                        U_curr=U_next, V_curr=V_next,
                        n=state.n + 1, t_curr=state.t_curr + grid.l)


def step_oracle(state: StepperState, params: SchemeParams, grid: GridSpec,
                basis: SpectralBasis, forcing: Optional[ForcingFn] = None) -> np.ndarray:
    """U^{n+1} computed through the dense Kronecker solver (test oracle)."""
    A = basis.A
    rhs = _u_rhs(state, params, grid, A, forcing)
    return kron_solve(k_problem(params, A, rhs))


def bootstrap(phi, params: SchemeParams, grid: GridSpec, basis: SpectralBasis,
              exact_psi=None) -> StepperState:
    """Build the two starting levels (n = -1 and n = 0) from initial data.

    U^0 samples phi; V^0 = q*U^0 - kappa*Lap_h(U^0) unless exact_psi
    supplies the reduced field directly (manufactured-solution mode).
    The synthetic back level is

        U^-1 = U^0 + l*phi_t,   phi_t = -q*Lap(phi) + kappa*Lap^2(phi)
                                        - lam*|grad phi|^2
        V^-1 = q*U^0 + psi_t,   psi_t = -(l*q^2 + kappa)*Lap(phi)
                                        + 2*l*kappa*q*Lap^2(phi)
                                        - l*kappa^2*Lap^3(phi)
                                        - lam*l*q*|grad phi|^2
                                        + lam*l*kappa*Lap(|grad phi|^2)

    with every continuous operator replaced by its grid analogue:
    Lap -> delta*L_A and |grad .|^2 -> nonlinear_F(.)/h^2.
    """
    if callable(phi):
        X, Y = grid.meshgrid()
        U0 = np.asarray(phi(X, Y), dtype=float)
    else:
        U0 = np.array(phi, dtype=float)
    if U0.shape != (grid.J + 1, grid.J + 1):
        raise ValueError(f"initial field shape {U0.shape} does not match grid")
    if not np.all(np.isfinite(U0)):
        raise NonFinite("non-finite initial data")

    A = basis.A
    lap = lambda F: params.delta * lyap_apply(A, F)
    q, kappa, lam, l = params.q, params.kappa, params.lam, grid.l

    lap1 = lap(U0)
    lap2 = lap(lap1)
    lap3 = lap(lap2)
    grad2 = nonlinear_F(U0) / grid.h ** 2

    if exact_psi is None:
        V0 = q * U0 - kappa * lap1
    elif callable(exact_psi):
        X, Y = grid.meshgrid()
        V0 = np.asarray(exact_psi(X, Y), dtype=float)
    else:
        V0 = np.array(exact_psi, dtype=float)

    phi_t = -q * lap1 + kappa * lap2 - lam * grad2
    psi_t = (-(l * q ** 2 + kappa) * lap1 + 2.0 * l * kappa * q * lap2
             - l * kappa ** 2 * lap3 - lam * l * q * grad2
             + lam * l * kappa * lap(grad2))
    U_m1 = U0 + l * phi_t
    V_m1 = q * U0 + psi_t
    _require_finite(U_m1, V_m1, V0)
    return StepperState(U_prev=U_m1, V_prev=V_m1, U_curr=U0, V_curr=V0,
                        n=0, t_curr=grid.t0)


def run(initial: StepperState, params: SchemeParams, grid: GridSpec,
        basis: SpectralBasis, forcing: Optional[ForcingFn] = None,
        snapshot_every: int = 1):
    """Iterate the scheme N times from ``initial``.

    Returns (RunReport, snapshots); snapshots is a list of
    (n, t, U, V) tuples recorded every ``snapshot_every`` steps (the
    initial and final levels are always included).  On NearSingular or
    NonFinite the partial report carries the failing step index.
    """
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    advance = step_beta0 if params.beta == 0.0 else step
    t_start = time.perf_counter()
    state = initial
    norms = [(state.n, state.t_curr,
              float(np.linalg.norm(state.U_curr)),
              float(np.linalg.norm(state.V_curr)))]
    snapshots = [(state.n, state.t_curr, state.U_curr, state.V_curr)]
    report = RunReport(N=grid.N, norms=norms)
    for k in range(grid.N):
        try:
            # overflow feeds the NonFinite check; the warning is just noise
            with np.errstate(over="ignore", invalid="ignore"):
                state = advance(state, params, grid, basis, forcing)
        except (NonFinite, NearSingular) as exc:
            report.status = exc.__class__.__name__
            report.failed_step = state.n + 1
            break
        norms.append((state.n, state.t_curr,
                      float(np.linalg.norm(state.U_curr)),
                      float(np.linalg.norm(state.V_curr))))
        if state.n % snapshot_every == 0 or state.n == grid.N:
            snapshots.append((state.n, state.t_curr, state.U_curr, state.V_curr))
    report.wall_ms = (time.perf_counter() - t_start) * 1e3
    return report, snapshots
