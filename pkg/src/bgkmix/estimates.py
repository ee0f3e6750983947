"""Executable versions of the macroscopic estimates and the Gronwall envelopes.

Every constant is explicit. Each is obtained by replaying the corresponding
split-integral or power-mean argument with general mass ``m`` and velocity
dimension ``d``; the derivation is summarised next to each constant.

Interspecies targets are handled through :class:`TargetClosure`: any target
velocity ``c1 u1 + c2 u2`` and temperature ``w1 T1 + w2 T2 + g |u1 - u2|^2``
owned by one species. The two-term closures (u12, T12), (u21, T21) and the
single-term closures (u^(k), T^(k)) all have this shape, which is what lets
the same checkers cover both models.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConstantDegenerateError, DiagnosticError, PreconditionError
from .grid import GridConfig, PhaseGrid, build_grid
from .mixture import (AAP_PHYSICAL, SINGLE_TERM, MixtureParameters, collision_frequencies,
                      delta_bounds, gamma_upper_bound, maxwellian_cells,
                      t21_velocity_coefficient)
from .moments import DistributionField, SpeciesMoments, compute_moments, weighted_sup_Nq

SLACK = 1e-12


# --------------------------------------------------------------------------- reports

@dataclass(frozen=True)
class EstimateRow:
    name: str
    lhs: float
    rhs: float
    constant: float
    passed: bool
    margin: float

    @classmethod
    def compare(cls, name, lhs, rhs, constant=math.nan) -> "EstimateRow":
        lhs, rhs = float(lhs), float(rhs)
        return cls(name, lhs, rhs, float(constant), bool(lhs <= rhs + SLACK), rhs - lhs)


CSV_FIELDS = ("check", "lhs", "rhs", "constant", "passed", "margin")


@dataclass
class EstimateReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]

    def add(self, name, lhs, rhs, constant=math.nan) -> EstimateRow:
        row = EstimateRow.compare(name, lhs, rhs, constant)
        self.rows.append(row)
        return row

    def extend(self, other: "EstimateReport") -> "EstimateReport":
        self.rows.extend(other.rows)
        return self

    def __getitem__(self, name: str) -> EstimateRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def csv_rows(self) -> list[list[str]]:
        return [[r.name, repr(r.lhs), repr(r.rhs), repr(r.constant), str(int(r.passed)),
                 repr(r.margin)] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        w.writerows(self.csv_rows())
        return buf.getvalue()


# --------------------------------------------------------------------------- closures

@dataclass(frozen=True)
class TargetClosure:
    """Target ``u* = c1 u1 + c2 u2``, ``T* = w1 T1 + w2 T2 + g |u1 - u2|^2`` of species ``owner``."""

    label: str
    owner: int
    c: tuple
    w: tuple
    g: float

    def velocity(self, u1, u2):
        return self.c[0] * np.asarray(u1) + self.c[1] * np.asarray(u2)

    def temperature(self, T1, T2, u1, u2):
        du = np.asarray(u1) - np.asarray(u2)
        return self.w[0] * T1 + self.w[1] * T2 + self.g * float(du @ du)


def two_term_closures(p: MixtureParameters, d: int) -> tuple[TargetClosure, TargetClosure]:
    a, dl, eps, r = p.alpha, p.delta, p.epsilon, p.mass_ratio
    c12 = TargetClosure("12", 1, (dl, 1.0 - dl), (a, 1.0 - a), p.gamma)
    k = r * (1.0 - dl)
    c21 = TargetClosure("21", 2, (k, 1.0 - k), (eps * (1.0 - a), 1.0 - eps * (1.0 - a)),
                        t21_velocity_coefficient(p, d))
    return c12, c21


def aap_closures(p: MixtureParameters, n1: float, n2: float, d: int
                 ) -> tuple[TargetClosure, TargetClosure]:
    """Single-term closures with the energy-conserving sign convention.

    With ``rho_k = chi_kj n_j / nu_k`` and ``M = m1 + m2``:
    ``u^(k) = (1 - c_k) u_k + c_k u_j`` with ``c_k = 2 m_j rho_k / M``,
    temperature weights ``(1 - beta_k, beta_k)`` with ``beta_k = 4 m_k m_j rho_k / M^2``
    and ``g_k = 4 m_k m_j^2 rho_k (1 - rho_k) / (d M^2)``.
    """
    if p.aap_sign != AAP_PHYSICAL:
        raise PreconditionError("starred estimates need the energy-conserving single-term sign")
    a11, a12, a21, a22 = collision_frequencies(p, n1, n2)
    M = p.m1 + p.m2
    out = []
    for k, (mk, mj, chi, nj, nuk) in enumerate(((p.m1, p.m2, p.chi12, n2, a11 + a12),
                                                (p.m2, p.m1, p.chi21, n1, a22 + a21)), 1):
        rho = chi * nj / nuk
        ck = 2.0 * mj * rho / M
        beta = 4.0 * mk * mj * rho / M ** 2
        g = 4.0 * mk * mj ** 2 * rho * (1.0 - rho) / (d * M ** 2)
        if k == 1:
            out.append(TargetClosure("1*", 1, (1.0 - ck, ck), (1.0 - beta, beta), g))
        else:
            out.append(TargetClosure("2*", 2, (ck, 1.0 - ck), (beta, 1.0 - beta), g))
    return tuple(out)


def closures_for(p: MixtureParameters, d: int, n1=None, n2=None, starred=False):
    if starred:
        return aap_closures(p, n1, n2, d)
    return two_term_closures(p, d)


# --------------------------------------------------------------------------- constants

def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_area(d: int) -> float:
    return d * unit_ball_volume(d)


def c_density(m: float, d: int) -> float:
    """(i.1): ``2 w_d (2d/m)^{d/2}``.

    Chebyshev puts at least half the mass in the ball ``|v - u|^2 <= 2dT/m``,
    where ``f <= N_0``.
    """
    return 2.0 * unit_ball_volume(d) * (2.0 * d / m) ** (d / 2)


def c_density_target(cl: TargetClosure, masses, d: int) -> float:
    """(i.2)/(i.3): ``T* >= w_own T_own`` gives ``c_density / w_own^{d/2}``."""
    w = cl.w[cl.owner - 1]
    if not w > 0:
        raise ConstantDegenerateError(
            f"closure {cl.label}: own temperature weight is {w}; bound is vacuous")
    return c_density(masses[cl.owner - 1], d) / w ** (d / 2)


def _require_tail_q(q, d):
    if not q > d + 2:
        raise PreconditionError(f"q must exceed d + 2 = {d + 2}, got {q}")


def _tail_constant(B_sum: float, B_max: float, d: int, q: float) -> float:
    # X <= a R^{-p} + B R^2 with a = d w_d Q/(p n); R^2 = p X/((p + 2) B) is optimal.
    p = q - d - 2
    return (sphere_area(d) / 2.0 * (1.0 + 2.0 / p) ** ((q - d) / 2)
            * B_sum ** (p / 2) * B_max)


def c_tail_single(m: float, d: int, q: float) -> float:
    """(ii.1): ``T + |u|^2 <= max(m, 1)(dT/m + |u|^2)``, then the split at R."""
    _require_tail_q(q, d)
    A = max(m, 1.0)
    return _tail_constant(A, A, d, q)


def tail_weights(cl: TargetClosure, masses, d: int) -> tuple[float, float]:
    """Weights (B1, B2) with ``dT* + |u*|^2 <= B1 (dT1/m1 + |u1|^2) + B2 (dT2/m2 + |u2|^2)``."""
    c1, c2 = cl.c
    cross = abs(c1 * c2 - d * cl.g)
    B1 = max(cl.w[0] * masses[0], c1 * c1 + d * cl.g + cross)
    B2 = max(cl.w[1] * masses[1], c2 * c2 + d * cl.g + cross)
    return B1, B2


def c_tail_target(cl: TargetClosure, masses, d: int, q: float) -> float:
    """(ii.2)/(ii.3) constant."""
    _require_tail_q(q, d)
    B1, B2 = tail_weights(cl, masses, d)
    return _tail_constant(B1 + B2, max(B1, B2), d, q)


def c_velocity_single(m: float, d: int, q: float) -> float:
    """(iii.1): max of the two cases.

    Case ``|u|^2 >= 8dT/m``: half the mass sits where ``|v| >= |u|/2``, giving
    ``2^{q+1} w_d (2d/m)^{d/2}``. Case ``|u|^2 < 8dT/m``: bound
    ``n|u| <= int |v| f`` split at ``|u|/3`` (and, for ``q <= d + 1``, at
    ``27 dT/(m |u|)`` using the second moment), then trade powers of ``|u|``
    for powers of ``T``.
    """
    if not q > 1:
        raise PreconditionError(f"q must exceed 1, got {q}")
    wd, sd = unit_ball_volume(d), sphere_area(d)
    case_a = 2.0 ** (q + 1) * wd * (2.0 * d / m) ** (d / 2)
    if q > d + 1:
        case_b = 3.0 ** (q - d) * sd / (q - d - 1) * (8.0 * d / m) ** (d / 2)
    elif q < d + 1:
        e = d + 1 - q
        case_b = 3.0 * sd * 3.0 ** e / e * (9.0 * d / m) ** e * (8.0 * d / m) ** (q - 1)
    else:
        case_b = 18.0 * sd * (9.0 * d / m) ** 0.5 * (8.0 * d / m) ** (d - 0.5)
    return max(case_a, case_b)


def lemma_velocity_constant(c: Sequence[float], q: float) -> float:
    """``|c1 u1 + c2 u2|^q <= A (|u1|^q + |u2|^q)`` with ``A = max(1, (|c1| + |c2|)^q)``."""
    return max(1.0, (abs(c[0]) + abs(c[1])) ** q)


def lemma_temperature_constant(w: Sequence[float], g: float, q: float) -> float:
    """Power-mean bound: ``3^{max(q-1, 0)} max(w1, w2, g)^q``."""
    return 3.0 ** max(q - 1.0, 0.0) * max(w[0], w[1], g) ** q


def c_velocity_target(cl: TargetClosure, d: int, q: float) -> float:
    """(iii.2)/(iii.3): ``(|c1| + |c2|)^q max_{c_i != 0} w_i^{-d/2}``."""
    if not q > 1:
        raise PreconditionError(f"q must exceed 1, got {q}")
    K = (abs(cl.c[0]) + abs(cl.c[1])) ** q
    worst = 0.0
    for ci, wi in zip(cl.c, cl.w):
        if ci == 0:
            continue
        if not wi > 0:
            raise ConstantDegenerateError(
                f"closure {cl.label}: velocity weight {ci} with zero temperature weight")
        worst = max(worst, wi ** (-d / 2))
    return K * worst


def c_speed_temperature(m: float, d: int, q: float) -> float:
    """``n |u|^q / T^{d/2} <= C N_q`` for one species (q > d + 2)."""
    a = 2.0 ** (q + 1) * unit_ball_volume(d) * (2.0 * d / m) ** (d / 2)
    b = (8.0 * d / m) ** (q / 2) * c_tail_single(m, d, q)
    return max(a, b)


def _peak_factor(m, d, q):
    # sup |v - u|^q M = n (2 pi T/m)^{-d/2} (q T/(m e))^{q/2}
    return (2.0 * math.pi / m) ** (-d / 2) * (q / (m * math.e)) ** (q / 2)


def c_sup_single(m: float, d: int, q: float) -> float:
    """(iv.1): ``|v|^q <= 2^{q-1}(|v-u|^q + |u|^q)`` then (ii.1) and the speed bound."""
    if q == 0:
        return (2.0 * math.pi / m) ** (-d / 2) * c_density(m, d)
    _require_tail_q(q, d)
    return 2.0 ** (q - 1) * (_peak_factor(m, d, q) * c_tail_single(m, d, q)
                             + (2.0 * math.pi / m) ** (-d / 2) * c_speed_temperature(m, d, q))


def c_sup_target(cl: TargetClosure, masses, d: int, q: float) -> float:
    """(iv.2)/(iv.3): chain (ii.2), (iii.2) and the single-species speed bound."""
    m = masses[cl.owner - 1]
    if q == 0:
        return (2.0 * math.pi / m) ** (-d / 2) * c_density_target(cl, masses, d)
    _require_tail_q(q, d)
    cuT = max(c_speed_temperature(masses[0], d, q), c_speed_temperature(masses[1], d, q))
    return 2.0 ** (q - 1) * (_peak_factor(m, d, q) * c_tail_target(cl, masses, d, q)
                             + (2.0 * math.pi / m) ** (-d / 2) * c_velocity_target(cl, d, q) * cuT)


def gronwall_constant(p: MixtureParameters, d: int, q: float, closures=None) -> float:
    """``C_q = 2 max(nu~) max`` of the four (iv) constants."""
    masses = (p.m1, p.m2)
    cls = closures if closures is not None else two_term_closures(p, d)
    cs = [c_sup_single(p.m1, d, q), c_sup_single(p.m2, d, q)]
    cs += [c_sup_target(cl, masses, d, q) for cl in cls]
    return 2.0 * max(p.frequency_constants()) * max(cs)


def constant_table(p: MixtureParameters, d: int, qs: Iterable[float]) -> list[dict]:
    """Constants of every estimate for each q (two-term closures)."""
    masses = (p.m1, p.m2)
    c12, c21 = two_term_closures(p, d)
    rows = []
    for q in qs:
        row = {"q": q, "i.1": max(c_density(p.m1, d), c_density(p.m2, d))}
        for name, fn in (("i.2", lambda: c_density_target(c12, masses, d)),
                         ("i.3", lambda: c_density_target(c21, masses, d))):
            try:
                row[name] = fn()
            except ConstantDegenerateError:
                row[name] = math.inf
        if q > d + 2:
            row["ii.1"] = max(c_tail_single(p.m1, d, q), c_tail_single(p.m2, d, q))
            row["ii.2"] = c_tail_target(c12, masses, d, q)
            row["ii.3"] = c_tail_target(c21, masses, d, q)
        if q > 1:
            row["iii.1"] = max(c_velocity_single(p.m1, d, q), c_velocity_single(p.m2, d, q))
        if q > d + 2 or q == 0:
            row["iv.1"] = max(c_sup_single(p.m1, d, q), c_sup_single(p.m2, d, q))
            row["iv.2"] = c_sup_target(c12, masses, d, q)
            row["iv.3"] = c_sup_target(c21, masses, d, q)
            row["gronwall"] = gronwall_constant(p, d, q)
        rows.append(row)
    return rows


# --------------------------------------------------------------------------- checkers

@dataclass(frozen=True)
class PairState:
    """Moments of both species in one cell plus lattice access for N_q."""

    f1: DistributionField
    f2: DistributionField
    m1: SpeciesMoments
    m2: SpeciesMoments
    cell: int

    @classmethod
    def of(cls, f1: DistributionField, f2: DistributionField, cell: int = 0) -> "PairState":
        return cls(f1, f2, compute_moments(f1, cell=cell), compute_moments(f2, cell=cell), cell)

    @property
    def d(self) -> int:
        return self.f1.grid.velocity_dim

    @property
    def masses(self):
        return (self.f1.mass, self.f2.mass)

    def n(self, k):
        return (self.m1, self.m2)[k - 1].n

    def Nq(self, k, q):
        return weighted_sup_Nq((self.f1, self.f2)[k - 1], q, self.cell)

    def target(self, cl: TargetClosure):
        u = cl.velocity(self.m1.u, self.m2.u)
        T = cl.temperature(self.m1.T, self.m2.T, self.m1.u, self.m2.u)
        return u, T


def _pair(f1, f2, cell):
    return f1 if isinstance(f1, PairState) else PairState.of(f1, f2, cell)


def _other(k):
    return 2 if k == 1 else 1


def check_density_temperature(f1, f2=None, p: Optional[MixtureParameters] = None,
                              d: Optional[int] = None, cell: int = 0,
                              starred: bool = False) -> EstimateReport:
    """(i.1)-(i.3): ``n_k / T^{d/2} <= C N_0(f_k)`` for own and target temperatures."""
    s = _pair(f1, f2, cell)
    d = s.d if d is None else d
    rep = EstimateReport()
    for k, mom in ((1, s.m1), (2, s.m2)):
        C = c_density(s.masses[k - 1], d)
        rep.add(f"i.1[{k}]", mom.n / mom.T ** (d / 2), C * s.Nq(k, 0), C)
    if p is None:
        return rep
    for cl in closures_for(p, d, s.m1.n, s.m2.n, starred):
        _, T = s.target(cl)
        C = c_density_target(cl, s.masses, d)
        k = cl.owner
        name = {"12": "i.2", "21": "i.3"}.get(cl.label, f"i.{k + 1}*")
        rep.add(name, s.n(k) / T ** (d / 2), C * s.Nq(k, 0), C)
    return rep


def check_tail_moments(f1, f2=None, q: float = 6.0, p: Optional[MixtureParameters] = None,
                       d: Optional[int] = None, cell: int = 0,
                       starred: bool = False) -> EstimateReport:
    """(ii.1)-(ii.3): ``n (T + |u|^2)^{(q-d)/2} <= C_q (N_q(f_own) + n_own/n_other N_q(f_other))``."""
    s = _pair(f1, f2, cell)
    d = s.d if d is None else d
    _require_tail_q(q, d)
    e = (q - d) / 2
    rep = EstimateReport()
    for k, mom in ((1, s.m1), (2, s.m2)):
        C = c_tail_single(s.masses[k - 1], d, q)
        rep.add(f"ii.1[{k}]", mom.n * (mom.T + mom.u @ mom.u) ** e, C * s.Nq(k, q), C)
    if p is None:
        return rep
    for cl in closures_for(p, d, s.m1.n, s.m2.n, starred):
        u, T = s.target(cl)
        k, j = cl.owner, _other(cl.owner)
        C = c_tail_target(cl, s.masses, d, q)
        name = {"12": "ii.2", "21": "ii.3"}.get(cl.label, f"ii.{k + 1}*")
        rhs = C * (s.Nq(k, q) + s.n(k) / s.n(j) * s.Nq(j, q))
        rep.add(name, s.n(k) * (T + u @ u) ** e, rhs, C)
    return rep


def _valid_lemma_q(q):
    return q > 0 and (float(q).is_integer() or float(q - 0.5).is_integer())


def check_combination_bound(u1, u2, T1: float, T2: float, p: MixtureParameters, q: float,
                            closure: Optional[TargetClosure] = None) -> EstimateReport:
    """Both power-mean inequalities for a convex-type velocity/temperature combination."""
    if not _valid_lemma_q(q):
        raise PreconditionError(f"q must be a positive integer or half-integer, got {q}")
    u1 = np.atleast_1d(np.asarray(u1, float))
    u2 = np.atleast_1d(np.asarray(u2, float))
    if closure is None:
        c, w, g, tag = (p.delta, 1.0 - p.delta), (p.alpha, 1.0 - p.alpha), p.gamma, ""
    else:
        c, w, g, tag = closure.c, closure.w, closure.g, f"[{closure.label}]"
    rep = EstimateReport()
    Av = lemma_velocity_constant(c, q)
    uc = c[0] * u1 + c[1] * u2
    rep.add(f"lemma.velocity{tag}", np.linalg.norm(uc) ** q,
            Av * (np.linalg.norm(u1) ** q + np.linalg.norm(u2) ** q), Av)
    At = lemma_temperature_constant(w, g, q)
    du2 = float((u1 - u2) @ (u1 - u2))
    rep.add(f"lemma.temperature{tag}", (w[0] * T1 + w[1] * T2 + g * du2) ** q,
            At * (T1 ** q + T2 ** q + du2 ** q), At)
    return rep


def check_velocity_ratio(f1, f2=None, q: float = 2.0, p: Optional[MixtureParameters] = None,
                         d: Optional[int] = None, cell: int = 0,
                         starred: bool = False) -> EstimateReport:
    """(iii.1)-(iii.3)."""
    s = _pair(f1, f2, cell)
    d = s.d if d is None else d
    if not q > 1:
        raise PreconditionError(f"q must exceed 1, got {q}")
    rep = EstimateReport()
    for k, mom in ((1, s.m1), (2, s.m2)):
        C = c_velocity_single(s.masses[k - 1], d, q)
        sp = float(np.linalg.norm(mom.u))
        lhs = mom.n * sp ** (d + q) / ((mom.T + sp * sp) * mom.T) ** (d / 2)
        rep.add(f"iii.1[{k}]", lhs, C * s.Nq(k, q), C)
    if p is None:
        return rep
    base = (np.linalg.norm(s.m1.u) ** q / s.m1.T ** (d / 2)
            + np.linalg.norm(s.m2.u) ** q / s.m2.T ** (d / 2))
    for cl in closures_for(p, d, s.m1.n, s.m2.n, starred):
        u, T = s.target(cl)
        k = cl.owner
        C = c_velocity_target(cl, d, q)
        name = {"12": "iii.2", "21": "iii.3"}.get(cl.label, f"iii.{k + 1}*")
        rep.add(name, s.n(k) * np.linalg.norm(u) ** q / T ** (d / 2), s.n(k) * C * base, C)
    return rep


def maxwellian_weighted_sup(n: float, u, T: float, m: float, q: float,
                            grid: Optional[PhaseGrid] = None) -> float:
    """``sup_v |v|^q M(v)``: exact value on the ray through ``u``, maxed with the lattice sup.

    For fixed ``|v| = t`` the Maxwellian is largest along ``u``, so the sup is
    attained at ``t = (|u| + sqrt(|u|^2 + 4 q T/m))/2``.
    """
    u = np.atleast_1d(np.asarray(u, float))
    d = u.size
    a = float(np.linalg.norm(u))
    th = T / m
    peak = n / (2.0 * math.pi * th) ** (d / 2)
    if q == 0:
        best = peak
    else:
        t = 0.5 * (a + math.sqrt(a * a + 4.0 * q * th))
        best = t ** q * peak * math.exp(-(t - a) ** 2 / (2.0 * th))
    if grid is not None:
        M = maxwellian_cells([n], u[None, :], [T], m, grid)[0]
        best = max(best, float(np.max(grid.speed ** q * M)))
    return best


def check_maxwellian_sup(f1, f2=None, q: float = 6.0, p: Optional[MixtureParameters] = None,
                         d: Optional[int] = None, cell: int = 0,
                         starred: bool = False) -> EstimateReport:
    """(iv.1)-(iv.3) for q > d + 2 or q = 0."""
    s = _pair(f1, f2, cell)
    d = s.d if d is None else d
    if not (q == 0 or q > d + 2):
        raise PreconditionError(f"q must be 0 or exceed d + 2 = {d + 2}, got {q}")
    grid = s.f1.grid
    rep = EstimateReport()
    for k, mom in ((1, s.m1), (2, s.m2)):
        m = s.masses[k - 1]
        C = c_sup_single(m, d, q)
        lhs = maxwellian_weighted_sup(mom.n, mom.u, mom.T, m, q, grid)
        rep.add(f"iv.1[{k}]", lhs, C * s.Nq(k, q), C)
    if p is None:
        return rep
    for cl in closures_for(p, d, s.m1.n, s.m2.n, starred):
        u, T = s.target(cl)
        k, j = cl.owner, _other(cl.owner)
        C = c_sup_target(cl, s.masses, d, q)
        lhs = maxwellian_weighted_sup(s.n(k), u, T, s.masses[k - 1], q, grid)
        name = {"12": "iv.2", "21": "iv.3"}.get(cl.label, f"iv.{k + 1}*")
        if q == 0:
            rhs = C * s.Nq(k, 0)
        else:
            rhs = C * (s.Nq(k, q) + s.n(k) / s.n(j) * s.Nq(j, q))
        rep.add(name, lhs, rhs, C)
    return rep


# --------------------------------------------------------------------------- envelopes

def _log_or_inf(x):
    return math.log(x) if x > 0 else -math.inf


def _safe_exp(x):
    return math.exp(x) if x < 700 else math.inf


def check_envelopes(trace: Sequence, p: MixtureParameters, d: int, q: float,
                    starred: bool = False) -> EstimateReport:
    """Gronwall, density-floor, temperature-floor and (T + |u|^2)-cap envelopes.

    ``trace`` is a sequence of tick records carrying ``t``, ``cell_n``,
    ``cell_u``, ``cell_T`` and ``Nq`` (sup over x and v) for orders ``q`` and 0.
    Each envelope contributes one row: its worst tick.
    """
    if not trace:
        raise DiagnosticError("empty trace")
    for name in ("t", "cell_n", "cell_u", "cell_T", "Nq"):
        if not hasattr(trace[0], name):
            raise DiagnosticError(f"trace records lack field '{name}'")
    if q not in trace[0].Nq or 0 not in trace[0].Nq:
        raise DiagnosticError(f"trace records lack N_q for q={q} and q=0")
    _require_tail_q(q, d)
    masses = (p.m1, p.m2)
    nu = p.frequency_constants()
    rates = (nu[0] + nu[1], nu[3] + nu[2])
    first = trace[0]
    A0 = float(np.sum(first.Nq[q]))
    A00 = float(np.sum(first.Nq[0]))
    C0 = first.cell_n.min(axis=1)
    cls = None if starred else two_term_closures(p, d)
    worst: dict[str, EstimateRow] = {}

    def keep(row):
        cur = worst.get(row.name)
        if cur is None or (row.passed, row.margin) < (cur.passed, cur.margin):
            worst[row.name] = row

    for tk in trace:
        t = tk.t
        ncl = tk.cell_n
        if starred:
            cls_t = [aap_closures(p, ncl[0, i], ncl[1, i], d) for i in range(ncl.shape[1])]
            Cq = max(gronwall_constant(p, d, q, c) for c in cls_t)
            C00 = max(gronwall_constant(p, d, 0, c) for c in cls_t)
        else:
            Cq = gronwall_constant(p, d, q, cls)
            C00 = gronwall_constant(p, d, 0, cls)
        keep(EstimateRow.compare("gronwall.Nq", float(np.sum(tk.Nq[q])),
                                 _safe_exp(_log_or_inf(A0) + Cq * t), Cq))
        floors = [C0[k] * math.exp(-rates[k] * t) for k in (0, 1)]
        for k in (0, 1):
            # floor <= measured, written as lhs <= rhs
            keep(EstimateRow.compare(f"density.floor[{k + 1}]", floors[k],
                                     float(ncl[k].min()), rates[k]))
        nmin_floor = min(floors)
        nq_env = _safe_exp(_log_or_inf(A0) + Cq * t)
        n0_env = _safe_exp(_log_or_inf(A00) + C00 * t)
        for i in range(ncl.shape[1]):
            n1, n2 = ncl[0, i], ncl[1, i]
            u1, u2 = tk.cell_u[0, i], tk.cell_u[1, i]
            T1, T2 = tk.cell_T[0, i], tk.cell_T[1, i]
            items = [(f"[{k + 1}]", k + 1, (u1, u2)[k], (T1, T2)[k],
                      c_density(masses[k], d), c_tail_single(masses[k], d, q)) for k in (0, 1)]
            for cl in (cls_t[i] if starred else cls):
                items.append((f"[{cl.label}]", cl.owner, cl.velocity(u1, u2),
                              cl.temperature(T1, T2, u1, u2),
                              c_density_target(cl, masses, d), c_tail_target(cl, masses, d, q)))
            for tag, k, u, T, Ci, Cii in items:
                own_floor = floors[k - 1]
                Tfloor = (own_floor / (Ci * n0_env)) ** (2.0 / d) if n0_env < math.inf else 0.0
                keep(EstimateRow.compare(f"temperature.floor{tag}", Tfloor, T, Ci))
                cap = (Cii * nq_env / nmin_floor) ** (2.0 / (q - d)) if nq_env < math.inf else math.inf
                keep(EstimateRow.compare(f"velocity.cap{tag}", T + float(u @ u), cap, Cii))
    return EstimateReport(list(worst.values()))


# --------------------------------------------------------------------------- random suite

@dataclass(frozen=True)
class SuiteConfig:
    master_seed: int = 20240607
    samples: int = 1000
    max_components: int = 5
    lemma_qs: tuple = (1.0, 1.5, 2.0, 3.0)


_SUITE_GRIDS = {1: GridConfig(velocity_dim=1, v_max=10.0, n_nodes_per_axis=128),
                2: GridConfig(velocity_dim=2, v_max=8.0, n_nodes_per_axis=48),
                3: GridConfig(velocity_dim=3, v_max=7.0, n_nodes_per_axis=28)}


def random_parameters(rng: np.random.Generator, d: int, single_term: bool = False
                      ) -> MixtureParameters:
    """Admissible parameters drawn uniformly inside the (delta, gamma) region.

    ``alpha`` stays away from 0 and 1 so every derived constant is finite.
    """
    m1, m2 = np.exp(rng.uniform(np.log(0.5), np.log(2.0), 2))
    eps = rng.uniform(0.2, 1.0)
    lo, hi = delta_bounds(m1, m2, eps)
    delta = rng.uniform(lo, hi - 0.02 * (hi - lo))
    gmax = gamma_upper_bound(m1, m2, eps, delta, d)
    nu11, nu12, nu22 = rng.uniform(0.5, 2.0, 3)
    base = dict(m1=m1, m2=m2, epsilon=eps, delta=delta, gamma=rng.uniform(0, 1) * gmax,
                alpha=rng.uniform(0.05, 0.95), nu11t=nu11, nu12t=nu12, nu22t=nu22)
    if single_term:
        base.update(model_variant=SINGLE_TERM, aap_sign=AAP_PHYSICAL)
    return MixtureParameters(**{k: float(v) if not isinstance(v, str) else v
                                for k, v in base.items()})


def random_mixture(rng: np.random.Generator, grid: PhaseGrid, mass: float,
                   max_components: int = 5) -> DistributionField:
    """Positive sum of 1..max_components isotropic Gaussians, resolved on the lattice."""
    d = grid.velocity_dim
    k = int(rng.integers(1, max_components + 1))
    h = grid.dv
    sig_lo = 1.5 * h
    sig_hi = grid.v_max / 4.5
    vals = np.zeros(grid.n_nodes)
    for _ in range(k):
        sig = rng.uniform(sig_lo, sig_hi)
        reach = grid.v_max - 4.5 * sig
        u = rng.uniform(-1, 1, d) * max(reach, 0.0) / math.sqrt(d)
        n = rng.uniform(0.1, 2.0)
        vals += maxwellian_cells([n], u[None, :], [mass * sig * sig], mass, grid)[0]
    return DistributionField(vals, mass, grid)


def _sample_chi(rng, p: MixtureParameters, n1, n2):
    a11, a12, a21, a22 = collision_frequencies(p, n1, n2)
    chi = rng.uniform(0.0, 1.0) * min((a11 + a12) / n2, (a22 + a21) / n1)
    return p.replace(chi12=float(chi), chi21=float(chi))


def run_sample(seed: np.random.SeedSequence, d: int, cfg: SuiteConfig = SuiteConfig(),
               grids: Optional[dict] = None) -> EstimateReport:
    """All checkers on one random pair; starred rows use the single-term closures."""
    rng = np.random.default_rng(seed)
    grid = (grids or {}).get(d) or build_grid(_SUITE_GRIDS[d])
    p = random_parameters(rng, d)
    f1 = random_mixture(rng, grid, p.m1, cfg.max_components)
    f2 = random_mixture(rng, grid, p.m2, cfg.max_components)
    s = PairState.of(f1, f2)
    ps = _sample_chi(rng, random_parameters(rng, d, single_term=True).replace(m1=p.m1, m2=p.m2),
                     s.m1.n, s.m2.n)
    qt = d + 3
    rep = EstimateReport()
    rep.extend(check_density_temperature(s, p=p))
    rep.extend(check_tail_moments(s, q=qt, p=p))
    for q in (1.5, float(d + 1), float(qt)):
        rep.extend(check_velocity_ratio(s, q=q, p=p))
    for q in (0, qt):
        rep.extend(check_maxwellian_sup(s, q=q, p=p))
    for q in cfg.lemma_qs:
        rep.extend(check_combination_bound(s.m1.u, s.m2.u, s.m1.T, s.m2.T, p, q))
    # starred analogues
    rep.extend(EstimateReport([r for r in check_density_temperature(s, p=ps, starred=True).rows
                               if "*" in r.name]))
    rep.extend(EstimateReport([r for r in check_tail_moments(s, q=qt, p=ps, starred=True).rows
                               if "*" in r.name]))
    rep.extend(EstimateReport([r for r in check_velocity_ratio(s, q=2.0, p=ps, starred=True).rows
                               if "*" in r.name]))
    for q in (0, qt):
        rep.extend(EstimateReport([r for r in check_maxwellian_sup(s, q=q, p=ps, starred=True).rows
                                   if "*" in r.name]))
    for cl in aap_closures(ps, s.m1.n, s.m2.n, d):
        for q in cfg.lemma_qs:
            rep.extend(check_combination_bound(s.m1.u, s.m2.u, s.m1.T, s.m2.T, ps, q, closure=cl))
    return rep


@dataclass
class SuiteResult:
    report: EstimateReport
    samples: int
    per_sample_ok: list


def run_suite(cfg: SuiteConfig = SuiteConfig()) -> SuiteResult:
    """Randomized estimate suite; sample i uses ``d = 1 + i % 3`` and its own spawned seed."""
    seeds = np.random.SeedSequence(cfg.master_seed).spawn(cfg.samples)
    grids = {d: build_grid(g) for d, g in _SUITE_GRIDS.items()}
    total = EstimateReport()
    oks = []
    for i, sd in enumerate(seeds):
        d = 1 + i % 3
        rep = run_sample(sd, d, cfg, grids)
        oks.append(rep.ok)
        for r in rep.rows:
            total.rows.append(EstimateRow(f"s{i}:d{d}:{r.name}", r.lhs, r.rhs, r.constant,
                                          r.passed, r.margin))
    return SuiteResult(total, cfg.samples, oks)
