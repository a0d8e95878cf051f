"""Command-line front end.

Subcommands:

* ``run``      -- one simulation: bootstrap, integrate, write norms/snapshots.
* ``table``    -- convergence study for one coupling power, CSV output.
* ``verify``   -- self-check suite (oracle equivalence, eigen residuals,
                  steady state, truncation slopes).
* ``spectrum`` -- dump the per-mode symbol of the per-step operator.

Configuration is a flat ``key = value`` text file with ``#`` comments;
command-line flags override file values.  All data CSVs are deterministic
for a fixed config (timings live in the JSON report only).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import mms
from .grid import SchemeParams, build_grid
from .stepper import bootstrap, run, step
from .sylvester import (cosine_eigenbasis, k_problem, kron_solve, solve_k,
                        spectral_symbol)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_NEAR_SINGULAR = 2
EXIT_NON_FINITE = 3
EXIT_USAGE = 64


class ConfigError(ValueError):
    """Bad configuration file or flag value; message names the key."""


@dataclass
class RunConfig:
    L0: float = -1.0
    L1: float = 1.0
    t0: float = 0.0
    T: float = 1.0
    J: int = 10
    coupling_power: float = 4.01
    q: float = mms.PRESET["q"]
    kappa: float = mms.PRESET["kappa"]
    lam: float = mms.PRESET["lam"]
    alpha: float = mms.PRESET["alpha"]
    beta: float = mms.PRESET["beta"]
    forcing_mode: str = "residual"      # residual | paper | none
    initial: str = "manufactured"       # manufactured | zero | constant:c | file:path
    snapshot_every: int = 0             # 0 disables field snapshots
    out_dir: str = "."


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CHOICES = {"forcing_mode": ("residual", "paper", "none")}


def _coerce(key: str, raw: str, line: int | None = None):
    where = f" (line {line})" if line is not None else ""
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown key {key!r}{where}")
    ftype = _FIELD_TYPES[key]
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(f"malformed value for key {key!r}{where}: {raw!r}") from None


def parse_config(path: str | os.PathLike | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Resolve a RunConfig from an optional file plus flag overrides."""
    cfg = RunConfig()
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"expected 'key = value' (line {lineno}): {line!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            cfg = replace(cfg, **{key: _coerce(key, raw, lineno)})
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        cfg = replace(cfg, **{key: _coerce(key, str(val))})
    for key, allowed in _CHOICES.items():
        if getattr(cfg, key) not in allowed:
            raise ConfigError(f"key {key!r} must be one of {allowed}")
    init = cfg.initial
    if init not in ("manufactured", "zero") and not init.startswith(("constant:", "file:")):
        raise ConfigError(f"key 'initial' has unsupported value {init!r}")
    return cfg


def _fmt(x) -> str:
    """Shortest round-trip decimal for binary64."""
    return repr(float(x))


def _initial_field(cfg: RunConfig, grid):
    if cfg.initial == "manufactured":
        return (lambda x, y: mms.exact_u(x, y, grid.t0)), \
               (lambda x, y: mms.exact_v(x, y, grid.t0))
    if cfg.initial == "zero":
        return np.zeros((grid.J + 1, grid.J + 1)), None
    if cfg.initial.startswith("constant:"):
        c = float(cfg.initial.split(":", 1)[1])
        return np.full((grid.J + 1, grid.J + 1), c), None
    path = cfg.initial.split(":", 1)[1]
    return np.loadtxt(path, delimiter=","), None


def _forcing(cfg: RunConfig):
    if cfg.forcing_mode == "none":
        return None
    mode = cfg.forcing_mode
    return lambda x, y, t: mms.forcing_g(x, y, t, mode=mode,
                                         q=cfg.q, kappa=cfg.kappa, lam=cfg.lam)


def _write_snapshot(out: Path, name: str, field: np.ndarray) -> None:
    lines = [",".join(_fmt(v) for v in row) for row in field]
    (out / name).write_text("\n".join(lines) + "\n")


def cmd_run(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = build_grid(cfg.L0, cfg.L1, cfg.J, cfg.t0, cfg.T, cfg.coupling_power)
    params = SchemeParams.for_grid(grid, cfg.q, cfg.kappa, cfg.lam,
                                   cfg.alpha, cfg.beta)
    basis = cosine_eigenbasis(cfg.J)
    phi, psi = _initial_field(cfg, grid)
    t_start = time.perf_counter()
    state = bootstrap(phi, params, grid, basis, exact_psi=psi)
    cadence = cfg.snapshot_every if cfg.snapshot_every > 0 else grid.N + 1
    report, snapshots = run(state, params, grid, basis, forcing=_forcing(cfg),
                            snapshot_every=cadence)
    wall_ms = (time.perf_counter() - t_start) * 1e3

    with (out / "norms.csv").open("w") as fh:
        fh.write("n,t,norm_U,norm_V\n")
        for n, t, nu, nv in report.norms:
            fh.write(f"{n},{_fmt(t)},{_fmt(nu)},{_fmt(nv)}\n")
    if cfg.snapshot_every > 0:
        for n, _t, U, V in snapshots:
            _write_snapshot(out, f"U_{n:06d}.csv", U)
            _write_snapshot(out, f"V_{n:06d}.csv", V)

    Er = C = None
    if cfg.initial == "manufactured" and report.status == "ok":
        Er = mms.error_Er(snapshots, mms.exact_u, grid)
        C = mms.rate_C(Er, grid)
    payload = {
        "config": {f.name: getattr(cfg, f.name) for f in fields(cfg)},
        "N": grid.N,
        "published_N": mms.PUBLISHED_N.get(cfg.coupling_power, {}).get(cfg.J),
        "h": grid.h,
        "l": grid.l,
        "Er": Er,
        "C": C,
        "wall_ms": wall_ms,
        "status": report.status,
        "failed_step": report.failed_step,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out / "report.json").write_text(json.dumps(payload, indent=2) + "\n")
    if report.status == "NearSingular":
        print(f"NearSingular at step {report.failed_step}", file=sys.stderr)
        return EXIT_NEAR_SINGULAR
    if report.status == "NonFinite":
        print(f"NonFinite at step {report.failed_step}", file=sys.stderr)
        return EXIT_NON_FINITE
    print(f"run complete: N={grid.N}" + (f", Er={Er:.6e}" if Er is not None else ""))
    return EXIT_OK


TABLE_POWERS = {1: 4.01, 2: 3.99, 3: 3.01}


def cmd_table(cfg: RunConfig, table: int, J_list: list[int]) -> int:
    if not J_list:
        print("usage error: empty J list", file=sys.stderr)
        return EXIT_USAGE
    if table not in TABLE_POWERS:
        print(f"usage error: table must be 1, 2 or 3, got {table}", file=sys.stderr)
        return EXIT_USAGE
    power = TABLE_POWERS[table]
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(J: int):
        try:
            row, _rep, _sn = mms.run_case(J, power, forcing_mode=cfg.forcing_mode)
            return row
        except Exception as exc:
            return mms.ErrorTableRow(J=J, N=-1, computed_N=-1, Er=float("nan"),
                                     C=float("nan"), wall_ms=0.0,
                                     status=exc.__class__.__name__)

    workers = max(1, int(os.environ.get("KS2D_THREADS", "1")))
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, J_list))
    else:
        rows = [one(J) for J in J_list]

    with (out / f"table{table}.csv").open("w") as fh:
        fh.write("J,N,computed_N,Er,C,wall_ms,status\n")
        for r in rows:
            fh.write(f"{r.J},{r.N},{r.computed_N},{_fmt(r.Er)},{_fmt(r.C)},"
                     f"{_fmt(round(r.wall_ms, 3))},{r.status}\n")
    ok = all(r.status == "ok" for r in rows)
    print(f"table{table}.csv written, {len(rows)} rows, "
          f"{'all ok' if ok else 'some rows failed'}")
    return EXIT_OK


def verify_all(size_limit: int = 6, corrupt_eigenvalue: bool = False,
               echo=print) -> list[tuple[str, bool, str]]:
    """Run the self-check properties; returns (name, passed, detail) rows.

    ``corrupt_eigenvalue`` is a test hook that perturbs one eigenvalue to
    prove the eigen-residual check can detect sabotage.
    """
    results = []

    def record(name, passed, detail=""):
        results.append((name, passed, detail))
        echo(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))

    # eigen residual
    worst = 0.0
    for J in (2, 10, 30, 50):
        b = cosine_eigenbasis(J)
        ev = b.eigenvalues.copy()
        if corrupt_eigenvalue and J == 10:
            ev = ev.copy()
            ev[3] += 1e-6
        r1 = np.max(np.abs(b.A @ b.P - b.P * ev))
        r2 = np.max(np.abs(b.P @ b.P_inv - np.eye(J + 1)))
        worst = max(worst, r1, r2)
    record("eigen residual", worst <= 1e-12, f"max residual {worst:.2e}")

    # oracle equivalence
    rng = np.random.default_rng(1234)
    worst = 0.0
    checked = 0
    for J in range(2, max(3, size_limit + 1)):
        basis = cosine_eigenbasis(J)
        grid = build_grid(-1.0, 1.0, J, 0.0, 1.0, 3.0)
        while checked < 50 * (J - 1):
            q, kappa = rng.uniform(0.5, 5.0, size=2)
            lam = rng.uniform(-5.0, 5.0)
            alpha, beta = rng.uniform(0.05, 0.5, size=2)
            params = SchemeParams.for_grid(grid, q, kappa, lam, alpha, beta)
            symbol = spectral_symbol(params, basis)
            if np.min(np.abs(symbol)) <= 1e-6:
                continue
            C = rng.standard_normal((J + 1, J + 1))
            X_fast = solve_k(params, basis, C)
            X_dense = kron_solve(k_problem(params, basis.A, C))
            worst = max(worst, np.linalg.norm(X_fast - X_dense)
                        / max(np.linalg.norm(X_dense), 1e-30))
            checked += 1
    record("oracle equivalence", worst <= 1e-9, f"max rel diff {worst:.2e}")

    # steady state, one step at every tabled parameter set
    drift = 0.0
    for beta in (mms.PRESET["beta"], 0.0):
        grid = build_grid(-1.0, 1.0, 8, 0.0, 1.0, 3.01)
        basis = cosine_eigenbasis(8)
        params = SchemeParams.for_grid(grid, mms.PRESET["q"], mms.PRESET["kappa"],
                                       mms.PRESET["lam"], mms.PRESET["alpha"], beta)
        c = 0.7
        from .stepper import StepperState, step_beta0
        U = np.full((9, 9), c)
        state = StepperState(U, params.q * U, U, params.q * U, 0, 0.0)
        advance = step_beta0 if beta == 0.0 else step
        nxt = advance(state, params, grid, basis)
        drift = max(drift,
                    float(np.max(np.abs(nxt.U_curr - c))),
                    float(np.max(np.abs(nxt.V_curr - params.q * c))))
    record("steady-state fixed point", drift <= 1e-12, f"one-step drift {drift:.2e}")

    # truncation slopes
    p_space, p_time = mms.truncation_order_check()
    record("truncation slopes", 1.7 <= p_space <= 2.3 and 1.7 <= p_time <= 2.3,
           f"p_space {p_space:.3f}, p_time {p_time:.3f}")
    return results


def cmd_verify(size_limit: int = 6, corrupt_eigenvalue: bool = False) -> int:
    results = verify_all(size_limit=size_limit, corrupt_eigenvalue=corrupt_eigenvalue)
    return EXIT_OK if all(ok for _name, ok, _d in results) else EXIT_FAIL


def cmd_spectrum(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = build_grid(cfg.L0, cfg.L1, cfg.J, cfg.t0, cfg.T, cfg.coupling_power)
    params = SchemeParams.for_grid(grid, cfg.q, cfg.kappa, cfg.lam,
                                   cfg.alpha, cfg.beta)
    basis = cosine_eigenbasis(cfg.J)
    symbol = spectral_symbol(params, basis)
    min_abs = float(np.min(np.abs(symbol)))
    with (out / "spectrum.csv").open("w") as fh:
        fh.write("i,j,k\n")
        for i in range(cfg.J + 1):
            for j in range(cfg.J + 1):
                fh.write(f"{i},{j},{_fmt(symbol[i, j])}\n")
        fh.write(f"min,,{_fmt(min_abs)}\n")
    print(f"min |k| = {min_abs:.6e}")
    if min_abs < 1e-6:
        print("warning: operator nearly singular (min |k| < 1e-6)", file=sys.stderr)
    return EXIT_OK


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to key = value config file")
    p.add_argument("--J", type=int)
    p.add_argument("--power", dest="coupling_power", type=float)
    p.add_argument("--L0", type=float)
    p.add_argument("--L1", type=float)
    p.add_argument("--t0", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--forcing-mode", dest="forcing_mode",
                   choices=("residual", "paper", "none"))
    p.add_argument("--initial")
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p.add_argument("--out-dir", dest="out_dir")


def _resolve(args: argparse.Namespace) -> RunConfig:
    keys = set(_FIELD_TYPES)
    overrides = {k: v for k, v in vars(args).items() if k in keys}
    return parse_config(args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ks2d",
                                     description="2D Kuramoto-Sivashinsky solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation")
    _add_config_flags(p_run)

    p_table = sub.add_parser("table", help="convergence study")
    _add_config_flags(p_table)
    p_table.add_argument("--table", type=int, default=3, help="study index 1/2/3")
    p_table.add_argument("--J-list", dest="J_list", default="",
                         help="comma-separated J values")

    p_verify = sub.add_parser("verify", help="self-check suite")
    p_verify.add_argument("--size-limit", type=int, default=6)

    p_spec = sub.add_parser("spectrum", help="per-mode operator symbol")
    _add_config_flags(p_spec)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_resolve(args))
        if args.command == "table":
            cfg = _resolve(args)
            J_list = [int(s) for s in args.J_list.split(",") if s.strip()]
            return cmd_table(cfg, args.table, J_list)
        if args.command == "verify":
            return cmd_verify(size_limit=args.size_limit)
        if args.command == "spectrum":
            return cmd_spectrum(_resolve(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
