"""Time stepping for the two-species BGK system and the Picard fixed-point driver.

One step is Strang split: half a transport step, a full exponential
relaxation step with Maxwellian parameters frozen at its start, and another
half transport step. Transport is semi-Lagrangian with linear interpolation
and periodic wrap, so it is a convex combination of neighbouring cells and
preserves positivity.

With ``conservative=True`` the relaxation targets are moment-matched lattice
Maxwellians and the interspecies targets are rate-matched: the exponential
integrator gives species k an effective rate ``phi_k = (1 - e^{-A_k dt})/A_k``,
and when ``phi_1 != phi_2`` the exchanged momentum and energy no longer
balance. Each interspecies target is therefore pulled back towards the own
moments by ``lambda_k = min(phi_1, phi_2)/phi_k``, in velocity and in total
energy, which restores exact exchange balance and keeps its temperature
positive.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AdmissibilityError, ConfigurationError, NonConvergenceError
from .grid import PhaseGrid, compensated_sum
from .mixture import (SINGLE_TERM, MixtureParameters, aap_closure, aap_positivity_ratios,
                      collision_frequencies, maxwellian_cells, mixture_temperatures,
                      mixture_velocities)
from .moments import (CellMoments, DistributionField, cell_moments, cell_sup_Nq,
                      entropy_functional, species_totals, weighted_L1_distance)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaxwellianComponent:
    """One Maxwellian bump of an initial condition.

    The density profile is ``n (1 + amplitude sin(2 pi wavenumber x / L))``.
    """

    n: float
    u: tuple = (0.0,)
    T: float = 1.0
    amplitude: float = 0.0
    wavenumber: int = 1


def initial_field(grid: PhaseGrid, mass: float, components: Sequence[MaxwellianComponent],
                  conservative: bool = False) -> DistributionField:
    """Superpose spatially modulated Maxwellians into a :class:`DistributionField`."""
    d = grid.velocity_dim
    x = grid.cell_centers
    values = np.zeros((grid.n_cells, grid.n_nodes))
    for comp in components:
        if abs(comp.amplitude) >= 1:
            raise ConfigurationError("modulation must satisfy |amplitude| < 1", key="amplitude")
        u = np.zeros(d)
        given = np.atleast_1d(np.asarray(comp.u, float))
        u[: min(d, given.size)] = given[:d]
        profile = comp.n * (1.0 + comp.amplitude * np.sin(2 * np.pi * comp.wavenumber * x
                                                           / grid.domain_length))
        shape = maxwellian_cells([1.0], u[None, :], [comp.T], mass, grid, conservative)[0]
        values += profile[:, None] * shape[None, :]
    return DistributionField(values, mass, grid)


@dataclass
class StepDiagnostics:
    clipped_mass: float = 0.0
    min_f1: float = math.nan
    min_f2: float = math.nan


@dataclass
class SolverState:
    f1: DistributionField
    f2: DistributionField
    t: float = 0.0
    diagnostics: StepDiagnostics = field(default_factory=StepDiagnostics)

    @property
    def grid(self) -> PhaseGrid:
        return self.f1.grid

    def copy(self) -> "SolverState":
        return SolverState(self.f1.copy(), self.f2.copy(), self.t,
                           StepDiagnostics(**self.diagnostics.__dict__))


# --------------------------------------------------------------------------- relaxation

def _rate_match(m, u, T, u_t, T_t, lam, d):
    """Move a target (u_t, T_t) back towards (u, T) by the factor ``lam`` in
    velocity and specific total energy."""
    e = 0.5 * m * (u * u).sum(-1) + 0.5 * d * T
    e_t = 0.5 * m * (u_t * u_t).sum(-1) + 0.5 * d * T_t
    u_s = u + lam[:, None] * (u_t - u)
    e_s = e + lam * (e_t - e)
    T_s = 2.0 / d * (e_s - 0.5 * m * (u_s * u_s).sum(-1))
    return u_s, np.maximum(T_s, 0.0)


@dataclass(frozen=True)
class RelaxationCoefficients:
    """Frozen-coefficient relaxation ``f_k <- decay_k f_k + source_k`` for one step."""

    decay1: np.ndarray
    decay2: np.ndarray
    source1: np.ndarray
    source2: np.ndarray


def relaxation_coefficients(p: MixtureParameters, f1: DistributionField, f2: DistributionField,
                            dt: float, conservative: bool = True,
                            mom: Optional[tuple[CellMoments, CellMoments]] = None
                            ) -> RelaxationCoefficients:
    """Decay factors and Maxwellian sources of the exponential relaxation step."""
    grid = f1.grid
    d = grid.velocity_dim
    c1, c2 = mom if mom is not None else (cell_moments(f1), cell_moments(f2))
    n1, n2 = c1.n, c2.n
    a11, a12, a21, a22 = collision_frequencies(p, n1, n2)
    A1 = np.asarray(a11 + a12, float)
    A2 = np.asarray(a22 + a21, float)
    e1, e2 = np.exp(-A1 * dt), np.exp(-A2 * dt)
    phi1, phi2 = -np.expm1(-A1 * dt) / A1, -np.expm1(-A2 * dt) / A2
    lam1 = lam2 = np.ones_like(A1)
    if conservative:
        theta = np.minimum(phi1, phi2)
        lam1, lam2 = theta / phi1, theta / phi2
    m1, m2 = p.m1, p.m2

    if p.model_variant == SINGLE_TERM:
        r1, r2 = aap_positivity_ratios(p, n1, n2)
        if np.any(r1 > 1) or np.any(r2 > 1):
            raise AdmissibilityError("single-term positivity condition violated "
                                     f"(max ratios {np.max(r1):.6g}, {np.max(r2):.6g} > 1)",
                                     key="chi12")
        uA, uB, TA, TB = aap_closure(p, n1, n2, c1.u, c2.u, c1.T, c2.T, d, nu1=A1, nu2=A2)
        if conservative:
            uA, TA = _rate_match(m1, c1.u, c1.T, uA, TA, lam1, d)
            uB, TB = _rate_match(m2, c2.u, c2.T, uB, TB, lam2, d)
        M = maxwellian_cells(np.concatenate([n1, n2]), np.concatenate([uA, uB]),
                             np.concatenate([TA, TB]),
                             np.repeat([m1, m2], n1.size), grid, conservative)
        k = n1.size
        s1 = (phi1 * A1)[:, None] * M[:k]
        s2 = (phi2 * A2)[:, None] * M[k:]
        return RelaxationCoefficients(e1, e2, s1, s2)

    du = c1.u - c2.u
    u12, u21 = mixture_velocities(p, c1.u, c2.u)
    T12, T21 = mixture_temperatures(p, c1.T, c2.T, (du * du).sum(-1), d)
    if conservative:
        u12, T12 = _rate_match(m1, c1.u, c1.T, u12, T12, lam1, d)
        u21, T21 = _rate_match(m2, c2.u, c2.T, u21, T21, lam2, d)
    k = n1.size
    M = maxwellian_cells(np.concatenate([n1, n2, n1, n2]),
                         np.concatenate([c1.u, c2.u, u12, u21]),
                         np.concatenate([c1.T, c2.T, T12, T21]),
                         np.repeat([m1, m2, m1, m2], k), grid, conservative)
    s1 = phi1[:, None] * (a11[:, None] * M[:k] + a12[:, None] * M[2 * k:3 * k])
    s2 = phi2[:, None] * (a22[:, None] * M[k:2 * k] + a21[:, None] * M[3 * k:])
    return RelaxationCoefficients(e1, e2, s1, s2)


def relax(p: MixtureParameters, f1: DistributionField, f2: DistributionField, dt: float,
          conservative: bool = True):
    """Exponential relaxation substep; returns new value arrays."""
    rc = relaxation_coefficients(p, f1, f2, dt, conservative)
    return (rc.decay1[:, None] * f1.values + rc.source1,
            rc.decay2[:, None] * f2.values + rc.source2)


# --------------------------------------------------------------------------- transport

class Transport:
    """Semi-Lagrangian periodic advection along ``x``; index tables cached per dt."""

    def __init__(self, grid: PhaseGrid):
        self.grid = grid
        self._cache: dict[float, tuple] = {}

    def _tables(self, dt: float):
        tab = self._cache.get(dt)
        if tab is None:
            g = self.grid
            shift = g.nodes[:, 0] * dt / g.dx
            k = np.floor(shift)
            theta = shift - k
            cells = np.arange(g.n_cells)[:, None]
            idx0 = np.mod(cells - k[None, :].astype(np.int64), g.n_cells)
            idx1 = np.mod(idx0 - 1, g.n_cells)
            tab = (idx0, idx1, theta)
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[dt] = tab
        return tab

    def __call__(self, values: np.ndarray, dt: float):
        """Advect; returns (new values, clipped mass)."""
        if self.grid.n_cells == 1 or dt == 0:
            return values, 0.0
        idx0, idx1, theta = self._tables(dt)
        out = ((1.0 - theta)[None, :] * np.take_along_axis(values, idx0, axis=0)
               + theta[None, :] * np.take_along_axis(values, idx1, axis=0))
        neg = out < 0
        clipped = 0.0
        if np.any(neg):
            clipped = float(-(out[neg] * np.broadcast_to(self.grid.weights, out.shape)[neg]).sum()
                            * self.grid.dx)
            out[neg] = 0.0
            log.warning("transport clipped mass %.3e", clipped)
        return out, clipped


_transports: dict[tuple, Transport] = {}


def _transport_for(grid: PhaseGrid) -> Transport:
    tr = _transports.get(grid.key())
    if tr is None:
        if len(_transports) > 16:
            _transports.clear()
        tr = _transports[grid.key()] = Transport(grid)
    return tr


def step(state: SolverState, p: MixtureParameters, grid: PhaseGrid | None = None,
         dt: float = 0.01, conservative: bool = True) -> SolverState:
    """Advance one Strang-split step of length ``dt``."""
    if not dt > 0:
        raise ConfigurationError(f"must be positive, got {dt}", key="dt")
    grid = state.grid if grid is None else grid
    tr = _transport_for(grid)
    v1, c1 = tr(state.f1.values, 0.5 * dt)
    v2, c2 = tr(state.f2.values, 0.5 * dt)
    f1, f2 = state.f1.with_values(v1), state.f2.with_values(v2)
    v1, v2 = relax(p, f1, f2, dt, conservative)
    v1, c3 = tr(v1, 0.5 * dt)
    v2, c4 = tr(v2, 0.5 * dt)
    diag = StepDiagnostics(clipped_mass=c1 + c2 + c3 + c4,
                           min_f1=float(v1.min()), min_f2=float(v2.min()))
    return SolverState(f1.with_values(v1), f2.with_values(v2), state.t + dt, diag)


# --------------------------------------------------------------------------- runs

@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 0.01
    t_end: float = 1.0
    cadence: int = 1
    conservative: bool = True
    nq_orders: tuple = ()


@dataclass
class TickRecord:
    """Diagnostics at one cadence tick.

    Scalars are domain averages (``u`` from total momentum, ``T`` from total
    energy minus bulk kinetic energy); per-cell arrays feed the envelope checks.
    """

    t: float
    n: np.ndarray
    u: np.ndarray
    T: np.ndarray
    p_total: np.ndarray
    E_total: float
    entropy: float
    min_f1: float
    min_f2: float
    clipped_mass: float
    cell_n: np.ndarray
    cell_u: np.ndarray
    cell_T: np.ndarray
    Nq: dict = field(default_factory=dict)


def record(state: SolverState, nq_orders=(), clipped: float = 0.0) -> TickRecord:
    g = state.grid
    d = g.velocity_dim
    L = g.domain_length
    moms, ns, us, Ts, ps, Es = [], [], [], [], [], []
    for f in (state.f1, state.f2):
        number, mom, energy = species_totals(f)
        n = number / L
        u = mom / (f.mass * number) if number > 0 else np.zeros(d)
        T = 2.0 / (d * number) * (energy - 0.5 * f.mass * number * (u @ u)) if number > 0 else 0.0
        ns.append(n), us.append(u), Ts.append(T), ps.append(mom), Es.append(energy)
        moms.append(cell_moments(f))
    nq = {}
    for q in nq_orders:
        nq[q] = np.array([cell_sup_Nq(state.f1, q).max(), cell_sup_Nq(state.f2, q).max()])
    return TickRecord(
        t=state.t, n=np.array(ns), u=np.array(us), T=np.array(Ts),
        p_total=ps[0] + ps[1], E_total=Es[0] + Es[1],
        entropy=entropy_functional(state.f1, state.f2),
        min_f1=float(state.f1.values.min()), min_f2=float(state.f2.values.min()),
        clipped_mass=clipped,
        cell_n=np.stack([moms[0].n, moms[1].n]), cell_u=np.stack([moms[0].u, moms[1].u]),
        cell_T=np.stack([moms[0].T, moms[1].T]), Nq=nq)


@dataclass
class SimulationResult:
    ticks: list
    final: SolverState
    max_clipped_per_step: float = 0.0
    min_positive: float = math.inf


def time_steps(dt: float, t_end: float) -> list[float]:
    """Step lengths covering [0, t_end]; the last step is shortened if needed."""
    if t_end < 0:
        raise ConfigurationError("must be nonnegative", key="t_end")
    if t_end == 0:
        return []
    n = max(1, math.ceil(t_end / dt - 1e-9))
    steps = [dt] * n
    steps[-1] = t_end - dt * (n - 1)
    if steps[-1] <= 1e-14 * dt:
        steps.pop()
    return steps


def run_simulation(state: SolverState, p: MixtureParameters, config: SimulationConfig,
                   callback=None) -> SimulationResult:
    """Advance to ``t_end`` recording a :class:`TickRecord` every ``cadence`` steps."""
    if config.cadence < 1:
        raise ConfigurationError("must be >= 1", key="cadence")
    ticks = [record(state, config.nq_orders)]
    steps = time_steps(config.dt, config.t_end)
    worst_clip = 0.0
    min_pos = min(float(state.f1.values.min()), float(state.f2.values.min()))
    t0 = state.t
    for i, h in enumerate(steps, 1):
        state = step(state, p, dt=h, conservative=config.conservative)
        # avoid accumulating round-off in the clock
        state.t = t0 + (i * config.dt if i < len(steps) else config.t_end)
        dg = state.diagnostics
        worst_clip = max(worst_clip, dg.clipped_mass)
        min_pos = min(min_pos, dg.min_f1, dg.min_f2)
        if i % config.cadence == 0 or i == len(steps):
            ticks.append(record(state, config.nq_orders, dg.clipped_mass))
        if callback is not None:
            callback(i, state)
    return SimulationResult(ticks, state, worst_clip, min_pos)


def suggest_v_max(u_max: float, T_max: float, m_min: float, k: float = 7.0) -> float:
    """Lattice half-width ``|u| + k sqrt(T/m)`` keeping Maxwellian tails below ~1e-10."""
    return float(abs(u_max) + k * math.sqrt(T_max / m_min))


# --------------------------------------------------------------------------- Picard

@dataclass
class PicardTrace:
    distances: list = field(default_factory=list)
    path: Optional[tuple] = field(default=None, repr=False)

    @property
    def iterations(self) -> int:
        return len(self.distances)

    @property
    def ratios(self) -> list:
        d = self.distances
        return [d[i] / d[i - 1] if d[i - 1] > 0 else 0.0 for i in range(1, len(d))]


def _sweep(p, grid, f1_0, f2_0, prev, times, conservative):
    """One Picard sweep: coefficients frozen from ``prev`` at each time level."""
    tr = _transport_for(grid)
    m1, m2 = f1_0.mass, f2_0.mass
    out1, out2 = [f1_0.values], [f2_0.values]
    cur1, cur2 = f1_0.values, f2_0.values
    for i, h in enumerate(times):
        g1 = DistributionField(prev[0][i], m1, grid)
        g2 = DistributionField(prev[1][i], m2, grid)
        rc = relaxation_coefficients(p, g1, g2, h, conservative)
        cur1, _ = tr(rc.decay1[:, None] * cur1 + rc.source1, h)
        cur2, _ = tr(rc.decay2[:, None] * cur2 + rc.source2, h)
        out1.append(cur1)
        out2.append(cur2)
    return out1, out2


def _path_distance(a, b, grid, m1, m2):
    best = 0.0
    for (x1, x2), (y1, y2) in zip(zip(*a), zip(*b)):
        dist = (weighted_L1_distance(DistributionField(x1, m1, grid), DistributionField(y1, m1, grid))
                + weighted_L1_distance(DistributionField(x2, m2, grid),
                                       DistributionField(y2, m2, grid)))
        best = max(best, dist)
    return best


def picard_solve(initial: SolverState, p: MixtureParameters, grid: PhaseGrid | None = None,
                 t_end: float = 0.5, tol: float = 1e-8, max_iter: int = 30, dt: float = 0.01,
                 conservative: bool = False):
    """Picard iteration of the frozen-coefficient mild formulation.

    Iterate 0 is the initial data held constant in time. Iterate n solves the
    linear transport-relaxation problem whose densities and Maxwellians come
    from iterate n-1 at each time level. The distance between iterates is
    ``sup_t (||f1^n - f1^{n-1}|| + ||f2^n - f2^{n-1}||)`` in the weighted L1 norm.
    Returns the final state and the :class:`PicardTrace`.
    """
    if not tol > 0:
        raise ConfigurationError("must be positive", key="tol")
    grid = initial.grid if grid is None else grid
    times = time_steps(dt, t_end)
    m1, m2 = initial.f1.mass, initial.f2.mass
    prev = ([initial.f1.values] * (len(times) + 1), [initial.f2.values] * (len(times) + 1))
    trace = PicardTrace()
    for _ in range(max_iter):
        new = _sweep(p, grid, initial.f1, initial.f2, prev, times, conservative)
        dist = _path_distance(new, prev, grid, m1, m2)
        trace.distances.append(dist)
        prev = new
        if dist < tol:
            final = SolverState(initial.f1.with_values(new[0][-1]),
                                initial.f2.with_values(new[1][-1]), initial.t + t_end)
            trace.path = new
            return final, trace
    raise NonConvergenceError(f"Picard iteration did not reach {tol:g} in {max_iter} iterations",
                              trace=trace)


def picard_contraction_bound(p: MixtureParameters, t_end: float) -> float:
    """``(1 - e^{-C t})/C`` with ``C = max`` of the collision constants."""
    C = max(p.frequency_constants())
    return -math.expm1(-C * t_end) / C


def total_budget(state: SolverState):
    """(number1, number2, total momentum, total energy) of a state."""
    n1, p1, e1 = species_totals(state.f1)
    n2, p2, e2 = species_totals(state.f2)
    return n1, n2, p1 + p2, e1 + e2
