"""Picard iteration on a homogeneous 3D problem: distances and contraction ratios."""
from __future__ import annotations

from bgkmix.grid import build_grid
from bgkmix.mixture import MixtureParameters
from bgkmix.solver import (MaxwellianComponent, SolverState, initial_field,
                           picard_contraction_bound, picard_solve)

if __name__ == "__main__":
    p = MixtureParameters(m1=1.0, m2=2.0, epsilon=0.5, alpha=0.5, delta=0.5)
    grid = build_grid(velocity_dim=3, v_max=6.0, n_nodes_per_axis=20)
    f1 = initial_field(grid, 1.0, [MaxwellianComponent(1.0, (0.5, 0, 0), 1.0)], True)
    f2 = initial_field(grid, 2.0, [MaxwellianComponent(1.0, (-0.3, 0, 0), 2.0)], True)
    t_end = 0.5
    _, trace = picard_solve(SolverState(f1, f2), p, t_end=t_end, tol=1e-10, max_iter=40)
    bound = picard_contraction_bound(p, t_end)
    print(f"contraction bound (1 - exp(-Ct))/C = {bound:.4f}")
    ratios = [float("nan")] + trace.ratios
    for i, (dist, r) in enumerate(zip(trace.distances, ratios), 1):
        print(f"iterate {i:>2}  distance {dist:.3e}  ratio {r:.4f}")
