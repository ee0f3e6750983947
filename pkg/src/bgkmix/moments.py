"""Macroscopic moments, weighted sup-norms, entropy and the weighted L1 distance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DimensionError, ZeroDensityError
from .grid import PhaseGrid, compensated_sum, quad_integrate


@dataclass(frozen=True)
class SpeciesMoments:
    """Density, mean velocity and temperature of one species in one cell."""

    n: float
    u: np.ndarray
    T: float

    def __post_init__(self):
        object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, dtype=float)))


@dataclass
class DistributionField:
    """Nodal values ``f_k(x_i, v_j)`` stored as ``(n_cells, n_nodes)``."""

    values: np.ndarray
    mass: float
    grid: PhaseGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[None, :]
        if self.values.shape != (self.grid.n_cells, self.grid.n_nodes):
            raise DimensionError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.grid.n_cells}, {self.grid.n_nodes})")
        if not self.mass > 0:
            raise ValueError(f"species mass must be positive, got {self.mass}")

    def copy(self) -> "DistributionField":
        return DistributionField(self.values.copy(), self.mass, self.grid)

    def with_values(self, values) -> "DistributionField":
        return DistributionField(values, self.mass, self.grid)


@dataclass(frozen=True)
class CellMoments:
    """Vectorized moments over all cells: ``n`` (c,), ``u`` (c, d), ``T`` (c,)."""

    n: np.ndarray
    u: np.ndarray
    T: np.ndarray

    def cell(self, i: int) -> SpeciesMoments:
        return SpeciesMoments(float(self.n[i]), self.u[i].copy(), float(self.T[i]))


def _check_grid(f: DistributionField, grid: PhaseGrid | None):
    if grid is not None and not f.grid.same_as(grid):
        raise DimensionError("distribution field lives on a different grid")


def cell_moments(f: DistributionField) -> CellMoments:
    """Moments of every cell. Cells with ``n = 0`` get ``u = 0``, ``T = 0``."""
    grid = f.grid
    d = grid.velocity_dim
    vals = f.values
    n = quad_integrate(vals, grid)
    n = np.atleast_1d(n)
    wv = vals[:, :, None] * grid.nodes[None, :, :] * grid.weights[None, :, None]
    flux = np.atleast_2d(compensated_sum(wv, axis=1))
    safe = np.where(n > 0, n, 1.0)
    u = np.where(n[:, None] > 0, flux / safe[:, None], 0.0)
    c = grid.nodes[None, :, :] - u[:, None, :]
    c2 = np.einsum("cjk,cjk->cj", c, c)
    second = np.atleast_1d(quad_integrate(c2 * vals, grid))
    T = np.where(n > 0, f.mass * second / (d * safe), 0.0)
    return CellMoments(n=n, u=u, T=T)


def compute_moments(f: DistributionField, grid: PhaseGrid | None = None, cell: int = 0) -> SpeciesMoments:
    """(n, u, T) of ``f`` at ``cell`` with ``T = m/(d n) * int |v-u|^2 f dv``."""
    _check_grid(f, grid)
    g = f.grid
    vals = f.values[cell]
    n = quad_integrate(vals, g)
    if not n > 0:
        raise ZeroDensityError(f"zero density in cell {cell}; u and T undefined")
    u = np.array([quad_integrate(vals * g.nodes[:, k], g) for k in range(g.velocity_dim)]) / n
    c = g.nodes - u
    second = quad_integrate(np.einsum("ij,ij->i", c, c) * vals, g)
    return SpeciesMoments(n=n, u=u, T=f.mass * second / (g.velocity_dim * n))


def weighted_sup_Nq(f: DistributionField, q: float, cell: int | None = 0) -> float:
    """``max_j |v_j|^q f(v_j)`` on the lattice; ``cell=None`` takes the sup over x too."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    weight = f.grid.speed ** q
    vals = f.values if cell is None else f.values[cell]
    return float(np.max(weight * vals))


def cell_sup_Nq(f: DistributionField, q: float) -> np.ndarray:
    """Per-cell ``N_q``."""
    return np.max(f.grid.speed[None, :] ** q * f.values, axis=1)


def entropy_functional(f1: DistributionField, f2: DistributionField) -> float:
    """``sum_k int int f_k ln f_k dv dx`` with ``0 ln 0 = 0``."""
    total = 0.0
    for f in (f1, f2):
        per_cell = np.atleast_1d(quad_integrate(xlogy(f.values, f.values), f.grid))
        total += compensated_sum(per_cell) * f.grid.dx
    return float(total)


def weighted_L1_distance(f: DistributionField, g: DistributionField) -> float:
    """``int int (1 + |v|^2) |f - g| dv dx``."""
    if not f.grid.same_as(g.grid):
        raise DimensionError("fields live on different grids")
    grid = f.grid
    per_cell = np.atleast_1d(quad_integrate((1.0 + grid.speed2) * np.abs(f.values - g.values), grid))
    return float(compensated_sum(per_cell) * grid.dx)


def species_totals(f: DistributionField) -> tuple[float, np.ndarray, float]:
    """Domain totals: particle number, momentum ``m int v f`` and energy ``m/2 int |v|^2 f``."""
    grid = f.grid
    vals = f.values
    number = compensated_sum(np.atleast_1d(quad_integrate(vals, grid))) * grid.dx
    mom = np.array([
        compensated_sum(np.atleast_1d(quad_integrate(vals * grid.nodes[:, k], grid)))
        for k in range(grid.velocity_dim)
    ]) * grid.dx * f.mass
    energy = compensated_sum(np.atleast_1d(quad_integrate(vals * grid.speed2, grid))) * grid.dx
    return float(number), mom, 0.5 * f.mass * float(energy)
