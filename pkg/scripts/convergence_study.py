"""First-order dt convergence of the kinetic solver toward the bridged moment ODE."""
from __future__ import annotations

import argparse

from bgkmix.grid import build_grid
from bgkmix.macroscopic import c_symmetric, compare_kinetic_macro, gamma_of_c
from bgkmix.mixture import MixtureParameters
from bgkmix.solver import MaxwellianComponent, SolverState, initial_field

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=24)
    ap.add_argument("--t-end", type=float, default=1.0)
    args = ap.parse_args()
    p = MixtureParameters(m1=1.0, m2=2.0, epsilon=0.5, alpha=0.5, delta=0.5)
    p = p.replace(gamma=gamma_of_c(p.m1, p.delta, c_symmetric(p), 3))
    grid = build_grid(velocity_dim=3, v_max=6.0, n_nodes_per_axis=args.nodes)
    f1 = initial_field(grid, 1.0, [MaxwellianComponent(1.0, (0.5, 0, 0), 1.0)], True)
    f2 = initial_field(grid, 2.0, [MaxwellianComponent(1.0, (-0.3, 0, 0), 2.0)], True)
    dts = [0.2, 0.1, 0.05, 0.025, 0.0125]
    res = compare_kinetic_macro(p, SolverState(f1, f2), dts, args.t_end)
    ratios = res.ratios + [float("nan")]
    print(f"gamma = {p.gamma:.6g} (symmetric c)")
    for dt, e, r in zip(res.dts, res.errors, ratios):
        print(f"dt {dt:<8g} deviation {e:.4e}  ratio {r:.3f}")
