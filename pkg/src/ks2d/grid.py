"""Discrete space-time grid, Neumann difference matrix, scheme coefficients.

The solver works on the square [L0, L1] x [L0, L1] with a uniform grid of
J+1 nodes per axis (spacing h) and a uniform time step l on [t0, T].  The
time step is tied to the space step through a coupling power p: l = h**p
for a unit time interval, which keeps the per-step linear operator close
to the identity (see sylvester.spectral_symbol).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid grid construction parameters."""


@dataclass(frozen=True)
class GridSpec:
    """Immutable description of the discrete space-time grid.

    Nodes are x_j = L0 + j*h and y_m = L0 + m*h for j, m in 0..J, times
    t_n = t0 + n*l for n in 0..N.
    """

    L0: float
    L1: float
    J: int
    h: float
    t0: float
    T: float
    l: float
    N: int

    @property
    def nodes(self) -> np.ndarray:
        """Grid coordinates along one axis, shape (J+1,)."""
        return self.L0 + self.h * np.arange(self.J + 1)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) with X[j, m] = x_j and Y[j, m] = y_m."""
        x = self.nodes
        return np.meshgrid(x, x, indexing="ij")

    def t(self, n: int) -> float:
        return self.t0 + n * self.l


def build_grid(L0: float, L1: float, J: int, t0: float, T: float,
               coupling_power: float) -> GridSpec:
    """Build a GridSpec with the time step slaved to the space step.

    h = (L1 - L0) / J and l = h**coupling_power * (T - t0), so that
    l = h**coupling_power on a unit time interval.  The step count is
    N = ceil((T - t0) / l): the ceiling reproduces the published step
    counts of the convergence studies (e.g. J=10 with power 3.01 gives
    1/h**p ~ 127.03 and N = 128; J=50 gives ~16136.2 and N = 16137).
    """
    for name, val in (("L0", L0), ("L1", L1), ("t0", t0), ("T", T),
                      ("coupling_power", coupling_power)):
        if not math.isfinite(val):
            raise GridError(f"non-finite {name}: {val!r}")
    if J < 2:
        raise GridError(f"J must be >= 2, got {J}")
    if not L1 > L0:
        raise GridError(f"need L1 > L0, got [{L0}, {L1}]")
    if not T > t0:
        raise GridError(f"need T > t0, got [{t0}, {T}]")
    if coupling_power <= -4.0:
        raise GridError(f"coupling power {coupling_power} too small")

    h = (L1 - L0) / J
    l = h ** coupling_power * (T - t0)
    # Guard against an exact-integer ratio landing just above the integer.
    N = math.ceil((T - t0) / l - 1e-9)
    return GridSpec(L0=float(L0), L1=float(L1), J=int(J), h=h,
                    t0=float(t0), T=float(T), l=l, N=N)


def neumann_matrix(J: int) -> np.ndarray:
    """Second-difference matrix with reflecting (zero normal derivative) ends.

    Shape (J+1, J+1): interior rows are the [1, -2, 1] stencil; the first and
    last rows are (-2, 2) and (2, -2), so every row sums to zero and constant
    vectors are annihilated.
    """
    if J < 2:
        raise GridError(f"J must be >= 2, got {J}")
    A = np.zeros((J + 1, J + 1))
    idx = np.arange(1, J)
    A[idx, idx - 1] = 1.0
    A[idx, idx] = -2.0
    A[idx, idx + 1] = 1.0
    A[0, 0], A[0, 1] = -2.0, 2.0
    A[J, J], A[J, J - 1] = -2.0, 2.0
    return A


@dataclass(frozen=True)
class SchemeParams:
    """PDE coefficients and derived per-step scheme coefficients.

    q, kappa, lam are the second-order, fourth-order and nonlinear
    coefficients of u_t = q*Lap(u) - kappa*Lap^2(u) + lam*|grad u|^2.
    alpha and beta are the three-level barycentric weights applied to u
    and to the reduced variable v = q*u - kappa*Lap(u).  sigma = 2*l/h**2
    and delta = 1/h**2 are the stencil scalings.
    """

    q: float
    kappa: float
    lam: float
    alpha: float
    beta: float
    sigma: float
    delta: float

    @classmethod
    def for_grid(cls, grid: GridSpec, q: float, kappa: float, lam: float,
                 alpha: float, beta: float) -> "SchemeParams":
        return cls(q=float(q), kappa=float(kappa), lam=float(lam),
                   alpha=float(alpha), beta=float(beta),
                   sigma=2.0 * grid.l / grid.h ** 2,
                   delta=1.0 / grid.h ** 2)
