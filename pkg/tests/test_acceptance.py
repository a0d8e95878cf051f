"""Acceptance gate: nine numbered criteria, one printed PASS/FAIL line each.

Criteria 1-3 are property checks of the linear algebra and the consistency
order.  Criteria 4-9 restate the published convergence behaviour verbatim;
several fail for this scheme as specified (the three-level companion-field
recursion is unstable for beta < 1/4, and the manufactured decay rate makes
the tabled step sizes strongly under-resolved).  They are kept red on
purpose; see the repository notes for the analysis.
"""

import math
import time

import numpy as np
import pytest

from ks2d import mms
from ks2d.grid import SchemeParams, build_grid
from ks2d.stepper import NonFinite, StepperState, step, step_beta0
from ks2d.sylvester import (cosine_eigenbasis, k_problem, kron_solve, solve_k,
                            spectral_symbol)


def _report(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'} -- {detail}")
    assert ok, detail


def _preset_params(grid, beta=None):
    return SchemeParams.for_grid(
        grid, mms.PRESET["q"], mms.PRESET["kappa"], mms.PRESET["lam"],
        mms.PRESET["alpha"], mms.PRESET["beta"] if beta is None else beta)


@pytest.fixture(scope="module")
def table3_runs():
    return {J: mms.run_case(J, 3.01) for J in (10, 12, 14, 16)}


@pytest.fixture(scope="module")
def table1_run10():
    return mms.run_case(10, 4.01)


def test_criterion_1_oracle_equivalence(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for J in (2, 3, 4, 5, 6):
        grid = build_grid(-1.0, 1.0, J, 0.0, 1.0, 3.0)
        basis = cosine_eigenbasis(J)
        draws = 0
        while draws < 50:
            q, kappa = rng.uniform(0.5, 5.0, size=2)
            lam = rng.uniform(-5.0, 5.0)
            alpha, beta = rng.uniform(0.05, 0.5, size=2)
            params = SchemeParams.for_grid(grid, q, kappa, lam, alpha, beta)
            if np.min(np.abs(spectral_symbol(params, basis))) <= 1e-6:
                continue
            C = rng.standard_normal((J + 1, J + 1))
            fast = solve_k(params, basis, C)
            dense = kron_solve(k_problem(params, basis.A, C))
            worst = max(worst, np.linalg.norm(fast - dense)
                        / max(np.linalg.norm(dense), 1e-300))
            draws += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    _report(capsys, 1, ok,
            f"max rel Frobenius diff {worst:.2e} over 250 draws, {elapsed:.1f}s")


def test_criterion_2_eigenbasis_exactness(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for J in (2, 10, 30, 50):
        b = cosine_eigenbasis(J)
        worst = max(worst,
                    float(np.max(np.abs(b.A @ b.P - b.P * b.eigenvalues))),
                    float(np.max(np.abs(b.P @ b.P_inv - np.eye(J + 1)))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    _report(capsys, 2, ok, f"max residual {worst:.2e}, {elapsed:.2f}s")


def test_criterion_3_consistency_order(capsys):
    t0 = time.perf_counter()
    p_space, p_time = mms.truncation_order_check()
    elapsed = time.perf_counter() - t0
    ok = (1.7 <= p_space <= 2.3 and 1.7 <= p_time <= 2.3 and elapsed < 30.0)
    _report(capsys, 3, ok,
            f"p_space {p_space:.3f}, p_time {p_time:.3f}, {elapsed:.1f}s")


def test_criterion_4_steady_state_invariance(capsys):
    c = 0.7
    drift = 0.0
    for power in (4.01, 3.99, 3.01):
        for beta in (mms.PRESET["beta"], 0.0):
            grid = build_grid(-1.0, 1.0, 10, 0.0, 1.0, power)
            basis = cosine_eigenbasis(10)
            params = _preset_params(grid, beta=beta)
            U = np.full((11, 11), c)
            state = StepperState(U, params.q * U, U, params.q * U, 0, 0.0)
            advance = step_beta0 if beta == 0.0 else step
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    for _ in range(1000):
                        state = advance(state, params, grid, basis)
            except NonFinite:
                drift = math.inf
                break
            drift = max(drift,
                        float(np.max(np.abs(state.U_curr - c))),
                        float(np.max(np.abs(state.V_curr - params.q * c))))
    ok = drift <= 1e-10
    _report(capsys, 4, ok, f"max drift over 1000 steps {drift:.2e}")


def test_criterion_5_coarse_row_error(capsys, table3_runs):
    row, _report_, _snaps = table3_runs[10]
    ok = row.status == "ok" and 3.1e-5 <= row.Er <= 3.1e-3
    _report(capsys, 5, ok,
            f"J=10 cubic-coupling run: status {row.status}, Er {row.Er:.3e} "
            f"(want [3.1e-5, 3.1e-3])")


def test_criterion_6_fine_row_error(capsys, table1_run10):
    row, _report_, _snaps = table1_run10
    ok = row.status == "ok" and 1.25e-6 <= row.Er <= 1.25e-4
    _report(capsys, 6, ok,
            f"J=10 quartic-coupling run: status {row.status}, Er {row.Er:.3e} "
            f"(want [1.25e-6, 1.25e-4])")


def test_criterion_7_monotone_convergence(capsys, table3_runs):
    Ers = [table3_runs[J][0].Er for J in (10, 12, 14, 16)]
    finite = all(np.isfinite(e) for e in Ers)
    decreasing = finite and all(a > b for a, b in zip(Ers, Ers[1:]))
    ratios_ok = finite and all(a / b >= 2.0 for a, b in zip(Ers, Ers[1:]))
    ok = decreasing and ratios_ok
    _report(capsys, 7, ok,
            "Er(J) for J=10,12,14,16: "
            + ", ".join(f"{e:.3e}" for e in Ers))


def test_criterion_8_trajectory_boundedness(capsys, table3_runs, table1_run10):
    worst = 0.0
    all_finite = True
    runs = [table1_run10] + [table3_runs[J] for J in (10, 12, 14, 16)]
    for _row, rep, _snaps in runs:
        norms = np.array([[nu, nv] for _n, _t, nu, nv in rep.norms])
        all_finite &= bool(np.all(np.isfinite(norms))) and rep.status == "ok"
        pair = np.hypot(norms[:, 0], norms[:, 1])
        bound = 2.0 * pair[0] + 1.0
        worst = max(worst, float(np.max(pair) / bound))
    ok = all_finite and worst <= 1.0
    _report(capsys, 8, ok,
            f"max ||(U,V)|| / (2||(U0,V0)||+1) = {worst:.3e}, "
            f"all finite: {all_finite}")


def test_criterion_9_beta_zero_variant(capsys, table3_runs):
    base, _r, _s = table3_runs[10]
    row, _r0, _s0 = mms.run_case(10, 3.01, beta=0.0)
    ok = (base.status == "ok" and row.status == "ok"
          and np.isfinite(base.Er) and np.isfinite(row.Er)
          and row.Er <= 10.0 * base.Er and base.Er <= 10.0 * row.Er)
    _report(capsys, 9, ok,
            f"beta=1/5 run: status {base.status}, Er {base.Er:.3e}; "
            f"beta=0 run: status {row.status}, Er {row.Er:.3e}")
