"""Command-line front-end: ``simulate``, ``estimates``, ``bridge`` and ``compare``.

Exit codes: 0 success, 1 configuration error, 2 runtime or numerical error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from typing import Sequence

import numpy as np

from .config import MODES, RunConfig, load_config
from .errors import BGKError, ConfigurationError
from .estimates import constant_table, run_suite
from .grid import build_grid
from .macroscopic import (MacroState, bridge_parameters, bridged_rates, compare_kinetic_macro,
                          coupling, ode_integrate)
from .solver import SolverState, TickRecord, initial_field, record, run_simulation

log = logging.getLogger("bgkmix")

_AXES = "xyz"


def diagnostics_header(d: int) -> list[str]:
    ax = _AXES[:d]
    return (["t", "n1", "n2"] + [f"u1_{a}" for a in ax] + [f"u2_{a}" for a in ax]
            + ["T1", "T2"] + [f"p_total_{a}" for a in ax]
            + ["E_total", "entropy", "min_f1", "min_f2", "clipped_mass"])


def _g(x) -> str:
    return format(float(x), ".17g")


def diagnostics_row(tk: TickRecord) -> list[str]:
    vals = [tk.t, *tk.n, *tk.u[0], *tk.u[1], *tk.T, *np.atleast_1d(tk.p_total), tk.E_total,
            tk.entropy, tk.min_f1, tk.min_f2, tk.clipped_mass]
    return [_g(v) for v in vals]


def emit_diagnostics(series: Sequence[TickRecord], path, d: int | None = None) -> None:
    """Write one CSV row per tick; floats carry 17 significant digits."""
    if d is None:
        d = series[0].u.shape[1] if series else 1
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(diagnostics_header(d))
            for tk in series:
                w.writerow(diagnostics_row(tk))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write diagnostics: {exc.strerror}", str(path)) from None


def macro_tick(t: float, s: MacroState) -> TickRecord:
    """A macroscopic state in the kinetic diagnostic schema; distribution-only columns are NaN."""
    n = np.array([s.n1, s.n2])
    p_total, E_total = s.totals()
    nan = math.nan
    return TickRecord(t=t, n=n, u=np.stack([s.u1, s.u2]), T=np.array([s.T1, s.T2]),
                      p_total=p_total, E_total=E_total, entropy=nan, min_f1=nan, min_f2=nan,
                      clipped_mass=0.0, cell_n=n[:, None], cell_u=np.stack([s.u1, s.u2])[:, None],
                      cell_T=np.array([[s.T1], [s.T2]]))


def initial_state(cfg: RunConfig) -> SolverState:
    grid = build_grid(cfg.grid)
    f1 = initial_field(grid, cfg.params.m1, cfg.species1, conservative=cfg.time.conservative)
    f2 = initial_field(grid, cfg.params.m2, cfg.species2, conservative=cfg.time.conservative)
    return SolverState(f1, f2, 0.0)


def _require_d3(cfg: RunConfig):
    if cfg.grid.velocity_dim != 3:
        raise ConfigurationError("bridge and compare runs need velocity_dim = 3", key="velocity_dim")


def cmd_simulate(cfg: RunConfig, out: str) -> int:
    res = run_simulation(initial_state(cfg), cfg.params, cfg.time)
    path = os.path.join(out, cfg.output.diagnostics)
    emit_diagnostics(res.ticks, path, cfg.grid.velocity_dim)
    first, last = res.ticks[0], res.ticks[-1]
    print(f"ticks {len(res.ticks)}  t_end {_g(last.t)}")
    print(f"min f {res.min_positive:.3e}  max clipped per step {res.max_clipped_per_step:.3e}")
    print(f"energy drift {abs(last.E_total - first.E_total) / abs(first.E_total):.3e}")
    print(f"wrote {path}")
    return 0


def cmd_estimates(cfg: RunConfig, out: str) -> int:
    res = run_suite(cfg.suite)
    path = os.path.join(out, "estimates.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(res.report.to_csv())
    d = cfg.grid.velocity_dim
    qs = sorted({0.0, 1.0, 2.0, float(d + 3)} | set(cfg.suite.lemma_qs))
    table = constant_table(cfg.params, d, qs)
    cpath = os.path.join(out, "constants.csv")
    with open(cpath, "w", newline="", encoding="utf-8") as fh:
        keys = list(dict.fromkeys(k for row in table for k in row))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in table:
            w.writerow([_g(row[k]) if isinstance(row.get(k), float) else row.get(k, "") for k in keys])
    fails = res.report.failures
    print(f"samples {res.samples}  rows {len(res.report.rows)}  failures {len(fails)}")
    for r in fails[:10]:
        print(f"  FAIL {r.name}: lhs={r.lhs:.6g} rhs={r.rhs:.6g}")
    print(f"wrote {path} and {cpath}")
    return 0


def _macro_initial(cfg: RunConfig) -> MacroState:
    tk = record(initial_state(cfg))
    d = cfg.grid.velocity_dim
    m1, m2 = cfg.params.m1, cfg.params.m2
    E1 = 0.5 * float(tk.u[0] @ tk.u[0]) + d / (2 * m1) * tk.T[0]
    E2 = 0.5 * float(tk.u[1] @ tk.u[1]) + d / (2 * m2) * tk.T[1]
    return MacroState(tk.n[0], tk.n[1], tk.u[0], tk.u[1], E1, E2, m1, m2)


def cmd_bridge(cfg: RunConfig, out: str) -> int:
    _require_d3(cfg)
    p = cfg.params
    s0 = _macro_initial(cfg)
    rates = bridged_rates(p, s0.n1, s0.n2, 3)
    lam = rates.lambda_u if cfg.lambda_u is None else cfg.lambda_u
    b = bridge_parameters(p, lam, s0.n1, s0.n2, 3)
    print(f"m1 nu12 n1 n2 = {_g(coupling(p, s0.n1, s0.n2))}")
    print(f"lambda_u = {_g(rates.lambda_u)}  lambda_T = {_g(rates.lambda_T)}")
    print(f"delta = {_g(b.delta)}  c = {_g(rates.c)}  gamma(c) = {_g(b.gamma(rates.c))}")
    print(f"c range = [{_g(b.c_range[0])}, {_g(b.c_range[1])}]  c_symmetric = {_g(b.c_symmetric)}")
    traj = ode_integrate(s0, rates, cfg.time.dt, cfg.time.t_end, every=cfg.time.cadence)
    path = os.path.join(out, "macro.csv")
    emit_diagnostics([macro_tick(t, s) for t, s in traj], path, 3)
    print(f"wrote {path}")
    return 0


def cmd_compare(cfg: RunConfig, out: str) -> int:
    _require_d3(cfg)
    c = cfg.compare
    res = compare_kinetic_macro(cfg.params, initial_state(cfg), c.dts, c.t_end, c.ref_substeps,
                                conservative=cfg.time.conservative)
    path = os.path.join(out, "compare.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dt", "max_rel_deviation", "ratio_to_next"])
        ratios = res.ratios + [math.nan]
        for dt, e, r in zip(res.dts, res.errors, ratios):
            w.writerow([_g(dt), _g(e), _g(r)])
            print(f"dt {dt:<8g} deviation {e:.6e}  ratio {r:.4f}")
    print(f"wrote {path}")
    return 0


_COMMANDS = {"simulate": cmd_simulate, "estimates": cmd_estimates, "bridge": cmd_bridge,
             "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bgkmix", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=MODES)
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
    ap.add_argument("--seed", type=int, default=None, help="master seed (overrides [suite])")
    ap.add_argument("--variant", choices=("two-term", "single-term"), default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigurationError("seed must be an unsigned 64-bit integer", key="seed")
            cfg = cfg.with_seed(args.seed)
        if args.variant is not None:
            cfg = cfg.with_variant(args.variant)
        out = args.out or cfg.output.directory
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "config.ini"), "w", encoding="utf-8") as fh:
            fh.write(cfg.to_text())
    except (ConfigurationError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](cfg, out)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (BGKError, ArithmeticError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
