"""Space-homogeneous two-fluid relaxation system and its bridge to the kinetic model.

Energy convention: ``m_k n_k E_k = m_k n_k |u_k|^2 / 2 + (d/2) n_k T_k``, so
``T_k = (2 m_k / d)(E_k - |u_k|^2 / 2)``; with ``d = 3`` this is the
``(3/2) n T`` internal energy of a monatomic gas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AdmissibilityError, StateDegenerateError
from .mixture import MixtureParameters, delta_bounds, validate_params
from .moments import SpeciesMoments


@dataclass(frozen=True)
class MacroState:
    n1: float
    n2: float
    u1: np.ndarray
    u2: np.ndarray
    E1: float
    E2: float
    m1: float = 1.0
    m2: float = 1.0

    def __post_init__(self):
        for name in ("u1", "u2"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))

    @property
    def d(self) -> int:
        return self.u1.size

    @property
    def T1(self) -> float:
        return 2.0 * self.m1 / self.d * (self.E1 - 0.5 * float(self.u1 @ self.u1))

    @property
    def T2(self) -> float:
        return 2.0 * self.m2 / self.d * (self.E2 - 0.5 * float(self.u2 @ self.u2))

    @classmethod
    def from_moments(cls, mom1: SpeciesMoments, mom2: SpeciesMoments, m1: float, m2: float
                     ) -> "MacroState":
        d = mom1.u.size
        E1 = 0.5 * float(mom1.u @ mom1.u) + d / (2.0 * m1) * mom1.T
        E2 = 0.5 * float(mom2.u @ mom2.u) + d / (2.0 * m2) * mom2.T
        return cls(mom1.n, mom2.n, mom1.u, mom2.u, E1, E2, m1, m2)

    def totals(self):
        """(total momentum, total energy)."""
        p = self.m1 * self.n1 * self.u1 + self.m2 * self.n2 * self.u2
        return p, self.m1 * self.n1 * self.E1 + self.m2 * self.n2 * self.E2


@dataclass(frozen=True)
class BridgeParameters:
    """Relaxation rates and the U-function constant. ``V_perp`` maps (u1, u2) to a vector."""

    lambda_u: float
    lambda_T: float
    c: float = 0.0
    V_perp: Optional[Callable] = field(default=None, compare=False)

    def check(self, p: MixtureParameters, delta: Optional[float] = None):
        """Raise if ``c`` lies outside ``[-delta/2, 1/2 - (m1 eps/m2)(1 - delta)/2]``."""
        lo, hi = c_range(p, p.delta if delta is None else delta)
        if not (lo - 1e-14 <= self.c <= hi + 1e-14):
            raise AdmissibilityError(
                f"c = {self.c:.6g} outside the range -delta/2 <= c <= "
                f"1/2 - (m1*eps/m2)(1-delta)/2, bounds [{lo:.6g}, {hi:.6g}]", key="c")
        if self.lambda_u < 0 or self.lambda_T < 0:
            raise AdmissibilityError("relaxation parameters must be nonnegative", key="lambda_u")


def exchange_terms(p: MixtureParameters, mom1: SpeciesMoments, mom2: SpeciesMoments,
                   d: int = 3) -> tuple[np.ndarray, float]:
    """Momentum and energy exchanged into species 1 by the interspecies relaxation.

    ``F_m = m1 nu12 n1 n2 (1 - delta)(u2 - u1)`` and
    ``F_E = nu12 n1 n2 [ (m1/2)(delta - 1)(u1 + u2 + delta (u1 - u2)) . (u1 - u2)
    + (d/2) gamma |u1 - u2|^2 + (d/2)(1 - alpha)(T2 - T1) ]``
    with ``nu12 = nu~12 / (n1 + n2)``.
    """
    n1, n2 = mom1.n, mom2.n
    k = p.nu12t / (n1 + n2) * n1 * n2
    u1, u2 = mom1.u, mom2.u
    w = u1 - u2
    Fm = p.m1 * k * (1.0 - p.delta) * (u2 - u1)
    bracket = 0.5 * p.m1 * (p.delta - 1.0) * (u1 + u2 + p.delta * w) + 0.5 * d * p.gamma * w
    FE = k * (float(bracket @ w) + 0.5 * d * (1.0 - p.alpha) * (mom2.T - mom1.T))
    return Fm, float(FE)


def u_function(u1, u2, c: float, V_perp: Optional[Callable] = None) -> np.ndarray:
    """``U = (1/2)[(u1 + u2).(u1 - u2)/|u1 - u2|^2](u1 - u2) - c (u1 - u2) + V_perp``.

    ``V_perp`` is projected onto the orthogonal complement of ``u1 - u2``.
    For ``u1 = u2`` the exchange term vanishes whatever U is; ``u1`` is returned.
    """
    u1 = np.atleast_1d(np.asarray(u1, float))
    u2 = np.atleast_1d(np.asarray(u2, float))
    w = u1 - u2
    ww = float(w @ w)
    if ww == 0.0:
        return u1.copy()
    U = 0.5 * float((u1 + u2) @ w) / ww * w - c * w
    if V_perp is not None:
        v = np.atleast_1d(np.asarray(V_perp(u1, u2), float))
        U = U + v - float(v @ w) / ww * w
    return U


def c_range(p: MixtureParameters, delta: Optional[float] = None) -> tuple[float, float]:
    """``[-delta/2, 1/2 - (1/2)(m1 eps/m2)(1 - delta)]``: the c giving ``0 <= gamma <= gamma_max``."""
    delta = p.delta if delta is None else delta
    return -0.5 * delta, 0.5 - 0.5 * p.mass_ratio * (1.0 - delta)


def c_symmetric(p: MixtureParameters, delta: Optional[float] = None) -> float:
    delta = p.delta if delta is None else delta
    return 0.25 * (1.0 - delta) * (1.0 - p.mass_ratio)


def gamma_of_c(m1: float, delta: float, c: float, d: int = 3) -> float:
    """``gamma = (1/d) m1 (1 - delta) delta + (2/d) m1 (1 - delta) c``."""
    return m1 * (1.0 - delta) * (delta + 2.0 * c) / d


def c_of_gamma(m1: float, delta: float, gamma: float, d: int = 3) -> float:
    if delta == 1.0:
        return 0.0
    return 0.5 * (d * gamma / (m1 * (1.0 - delta)) - delta)


@dataclass(frozen=True)
class BridgeResult:
    delta: float
    c_range: tuple
    c_symmetric: float
    gamma_symmetric: float
    m1: float
    d: int

    def gamma(self, c: float) -> float:
        return gamma_of_c(self.m1, self.delta, c, self.d)


def coupling(p: MixtureParameters, n1: float, n2: float) -> float:
    """``m1 nu12 n1 n2`` with ``nu12 = nu~12/(n1 + n2)``."""
    return p.m1 * p.nu12t * n1 * n2 / (n1 + n2)


def bridge_parameters(p: MixtureParameters, lambda_u: float, n1: float = 1.0, n2: float = 1.0,
                      d: int = 3, m1_nu12_n1_n2: Optional[float] = None) -> BridgeResult:
    """delta from ``lambda_u``, the gamma(c) relation, the admissible c-range and symmetric c."""
    k = coupling(p, n1, n2) if m1_nu12_n1_n2 is None else m1_nu12_n1_n2
    delta = 1.0 - lambda_u / k
    lo, hi = delta_bounds(p.m1, p.m2, p.epsilon)
    if not (lo - 1e-14 <= delta <= hi + 1e-14):
        raise AdmissibilityError(
            f"delta = {delta:.6g} from lambda_u outside the delta admissibility range "
            f"(m1*eps/m2 - 1)/(1 + m1*eps/m2) <= delta <= 1, bounds [{lo:.6g}, {hi:.6g}]",
            key="lambda_u")
    pd = p.replace(delta=delta)
    cs = c_symmetric(pd)
    return BridgeResult(delta, c_range(pd), cs, gamma_of_c(p.m1, delta, cs, d), p.m1, d)


def bridged_rates(p: MixtureParameters, n1: float, n2: float, d: int = 3) -> BridgeParameters:
    """``lambda_u = m1 nu12 n1 n2 (1 - delta)``, ``lambda_T = (d/2) nu12 n1 n2 (1 - alpha)`` and the
    c reproducing the kinetic gamma."""
    k = p.nu12t * n1 * n2 / (n1 + n2)
    return BridgeParameters(p.m1 * k * (1.0 - p.delta), 0.5 * d * k * (1.0 - p.alpha),
                            c_of_gamma(p.m1, p.delta, p.gamma, d))


@dataclass(frozen=True)
class MacroRates:
    """Time derivatives of ``m_k n_k u_k`` and ``m_k n_k E_k``; densities are constant."""

    dmom1: np.ndarray
    dmom2: np.ndarray
    dE1: float
    dE2: float


def moment_rhs(state: MacroState, bridge: BridgeParameters) -> MacroRates:
    du = state.u2 - state.u1
    U = u_function(state.u1, state.u2, bridge.c, bridge.V_perp)
    s = bridge.lambda_T * (state.T2 - state.T1) + bridge.lambda_u * float(U @ du)
    m = bridge.lambda_u * du
    return MacroRates(m, -m, s, -s)


def _pack(state: MacroState):
    return np.concatenate([state.m1 * state.n1 * state.u1, state.m2 * state.n2 * state.u2,
                           [state.m1 * state.n1 * state.E1, state.m2 * state.n2 * state.E2]])


def _unpack(y, ref: MacroState) -> MacroState:
    d = ref.d
    r1, r2 = ref.m1 * ref.n1, ref.m2 * ref.n2
    return MacroState(ref.n1, ref.n2, y[:d] / r1, y[d:2 * d] / r2, y[2 * d] / r1,
                      y[2 * d + 1] / r2, ref.m1, ref.m2)


def _rate_vector(state: MacroState, bridge: BridgeParameters):
    r = moment_rhs(state, bridge)
    return np.concatenate([r.dmom1, r.dmom2, [r.dE1, r.dE2]])


def ode_integrate(state: MacroState, bridge: BridgeParameters, dt: float, t_end: float,
                  every: int = 1) -> list[tuple[float, MacroState]]:
    """Classical RK4 for the homogeneous relaxation ODE; returns ``(t, state)`` samples."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = max(0, math.ceil(t_end / dt - 1e-9))
    out = [(0.0, state)]
    y = _pack(state)
    t = 0.0
    for i in range(1, n + 1):
        h = min(dt, t_end - t)
        f = lambda yy: _rate_vector(_unpack(yy, state), bridge)  # noqa: E731
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = i * dt if i < n else t_end
        cur = _unpack(y, state)
        if not (cur.T1 > 0 and cur.T2 > 0):
            raise StateDegenerateError(f"non-positive temperature at t={t:.6g}")
        if i % every == 0 or i == n:
            out.append((t, cur))
    return out


def identity_residual(p: MixtureParameters, mom1: SpeciesMoments, mom2: SpeciesMoments,
                      d: int = 3) -> tuple[float, float]:
    """Relative mismatch between bridged sources and kinetic exchange terms."""
    Fm, FE = exchange_terms(p, mom1, mom2, d)
    m1 = p.m1
    E1 = 0.5 * float(mom1.u @ mom1.u) + d / (2 * m1) * mom1.T
    E2 = 0.5 * float(mom2.u @ mom2.u) + d / (2 * p.m2) * mom2.T
    state = MacroState(mom1.n, mom2.n, mom1.u, mom2.u, E1, E2, p.m1, p.m2)
    r = moment_rhs(state, bridged_rates(p, mom1.n, mom2.n, d))
    scale_m = max(np.max(np.abs(Fm)), 1e-300)
    k = p.nu12t * mom1.n * mom2.n / (mom1.n + mom2.n)
    w = mom1.u - mom2.u
    scale_E = max(abs(FE), k * (m1 * float(np.abs(mom1.u + mom2.u) @ np.abs(w))
                                + float(w @ w) * (m1 + d * p.gamma) + d * (mom1.T + mom2.T)))
    em = float(np.max(np.abs(r.dmom1 - Fm))) / scale_m if np.any(Fm) else float(np.max(np.abs(r.dmom1)))
    eE = abs(r.dE1 - FE) / scale_E if scale_E > 0 else abs(r.dE1 - FE)
    return em, eE


# --------------------------------------------------------------------------- kinetic comparison

@dataclass
class ComparisonResult:
    dts: list
    errors: list

    @property
    def ratios(self) -> list:
        e = self.errors
        return [e[i] / e[i + 1] for i in range(len(e) - 1)]


def _macro_from_record(tk, m1, m2) -> MacroState:
    d = tk.u.shape[1]
    E1 = 0.5 * float(tk.u[0] @ tk.u[0]) + d / (2 * m1) * tk.T[0]
    E2 = 0.5 * float(tk.u[1] @ tk.u[1]) + d / (2 * m2) * tk.T[1]
    return MacroState(tk.n[0], tk.n[1], tk.u[0], tk.u[1], E1, E2, m1, m2)


def trajectory_deviation(kin_ticks, macro_traj) -> float:
    """Max over common times of the relative deviation in (u1, u2, T1, T2)."""
    lookup = {round(t, 9): s for t, s in macro_traj}
    worst = 0.0
    scale = None
    for tk in kin_ticks:
        s = lookup.get(round(tk.t, 9))
        if s is None:
            continue
        ref = np.concatenate([s.u1, s.u2, [s.T1, s.T2]])
        got = np.concatenate([tk.u[0], tk.u[1], tk.T])
        if scale is None:
            scale = max(float(np.max(np.abs(ref))), 1e-300)
        worst = max(worst, float(np.max(np.abs(got - ref))) / scale)
    return worst


def compare_kinetic_macro(p: MixtureParameters, state, dts, t_end: float,
                          ref_substeps: int = 16, conservative: bool = True) -> ComparisonResult:
    """Homogeneous kinetic runs at each dt against a fine RK4 reference of the bridged ODE."""
    from .solver import SimulationConfig, run_simulation

    d = state.grid.velocity_dim
    first = None
    errors = []
    for dt in dts:
        res = run_simulation(state, p, SimulationConfig(dt=dt, t_end=t_end, cadence=1,
                                                        conservative=conservative))
        if first is None:
            first = res.ticks[0]
            m0 = _macro_from_record(first, p.m1, p.m2)
            bridge = bridged_rates(p, m0.n1, m0.n2, d)
        ref = ode_integrate(m0, bridge, dt / ref_substeps, t_end, every=ref_substeps)
        errors.append(trajectory_deviation(res.ticks, ref))
    return ComparisonResult(list(dts), errors)
