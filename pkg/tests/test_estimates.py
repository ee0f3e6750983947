from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bgkmix.errors import ConstantDegenerateError, DiagnosticError, PreconditionError
from bgkmix.estimates import (CSV_FIELDS, EstimateReport, PairState, SuiteConfig, aap_closures,
                              c_density, check_combination_bound, check_density_temperature,
                              check_envelopes, check_maxwellian_sup, check_tail_moments,
                              check_velocity_ratio, constant_table, lemma_velocity_constant,
                              maxwellian_weighted_sup, run_sample, run_suite, two_term_closures,
                              unit_ball_volume)
from bgkmix.grid import build_grid
from bgkmix.mixture import AAP_PHYSICAL, AAP_PRINTED, SINGLE_TERM, MixtureParameters
from bgkmix.moments import DistributionField
from bgkmix.solver import (MaxwellianComponent, SimulationConfig, SolverState, initial_field,
                           run_simulation)

from conftest import maxwellian_field

SYM = MixtureParameters(m1=1.0, m2=1.0, epsilon=1.0, alpha=0.5, delta=0.5, gamma=0.0)
G3 = build_grid(velocity_dim=3, v_max=7.0, n_nodes_per_axis=33)


@pytest.mark.parametrize("d, vol", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
def test_unit_ball(d, vol):
    assert unit_ball_volume(d) == pytest.approx(vol, rel=1e-15)


def test_density_standard_maxwellian():
    f = maxwellian_field(G3)
    rep = check_density_temperature(f, f)
    row = rep["i.1[1]"]
    assert row.lhs == pytest.approx(1.0, abs=1e-8)
    expected = 2 * (4 * math.pi / 3) * 6 ** 1.5 * (2 * math.pi) ** -1.5
    assert expected == pytest.approx(7.82, abs=5e-3)
    # lattice contains v = 0 so N_0 is the exact peak
    assert row.rhs == pytest.approx(expected, rel=1e-12)
    assert row.constant == pytest.approx(c_density(1.0, 3))
    assert rep.ok


@settings(max_examples=20, deadline=None)
@given(c=st.floats(1e-3, 1e3))
def test_density_homogeneous_scaling(c):
    f = maxwellian_field(G3, T=0.8, u=0.3)
    a = check_density_temperature(f, f, p=SYM)
    b = check_density_temperature(f.with_values(c * f.values), f.with_values(c * f.values), p=SYM)
    for ra, rb in zip(a.rows, b.rows):
        assert rb.lhs / ra.lhs == pytest.approx(c, rel=1e-10)
        assert rb.rhs / ra.rhs == pytest.approx(c, rel=1e-12)


def test_density_degenerate_constant():
    f = maxwellian_field(G3)
    with pytest.raises(ConstantDegenerateError):
        check_density_temperature(f, f, p=SYM.replace(alpha=0.0))


def test_tail_pair_passes_with_margin():
    f = maxwellian_field(G3)
    rep = check_tail_moments(f, f, q=6.0, p=SYM)
    assert rep.ok and all(r.margin > 0 for r in rep.rows)


def test_tail_degenerate_mixture_reduces():
    f = maxwellian_field(G3, T=1.2)
    rep = check_tail_moments(f, f, q=6.0, p=SYM)
    # u1 = u2 = 0, T1 = T2: the target temperature equals T and (ii.2) has the (ii.1) left side
    assert rep["ii.2"].lhs == pytest.approx(rep["ii.1[1]"].lhs, rel=1e-12)
    assert rep.ok


def test_tail_precondition():
    f = maxwellian_field(G3)
    with pytest.raises(PreconditionError):
        check_tail_moments(f, f, q=5.0)


def test_combination_convex_case():
    rep = check_combination_bound([1.0], [-1.0], 1.0, 2.0, SYM, 2)
    assert rep["lemma.velocity"].constant == 1.0 and rep.ok


def test_combination_negative_delta():
    p = MixtureParameters(m1=1.0, m2=3.0, epsilon=1.0, delta=-0.2)
    rep = check_combination_bound([1.0], [-1.0], 1.0, 1.0, p, 2)
    row = rep["lemma.velocity"]
    assert row.constant == pytest.approx(1.96)
    # |-0.2 - 1.2|^2 = 1.96 <= 1.96 * 2
    assert row.lhs == pytest.approx(1.96)
    assert rep.ok


def test_combination_bad_q():
    with pytest.raises(PreconditionError):
        check_combination_bound([1.0], [0.0], 1.0, 1.0, SYM, 1.3)


@settings(max_examples=200, deadline=None)
@given(u=st.lists(st.floats(-10, 10), min_size=6, max_size=6), T=st.tuples(st.floats(0.01, 10), st.floats(0.01, 10)),
       frac=st.floats(0, 1), q=st.sampled_from([1, 1.5, 2, 3]))
def test_combination_random(u, T, frac, q):
    lo = (1 / 3 - 1) / (1 + 1 / 3)
    p = MixtureParameters(m1=1.0, m2=3.0, epsilon=1.0, delta=lo + frac * (1 - lo), alpha=0.3, gamma=0.0)
    assert check_combination_bound(u[:3], u[3:], T[0], T[1], p, q).ok


def test_velocity_ratio_zero_velocity():
    f = maxwellian_field(G3)
    rep = check_velocity_ratio(f, f, q=2.0, p=SYM)
    assert all(r.lhs == 0.0 for r in rep.rows) and rep.ok


def test_velocity_ratio_symmetric_example():
    f1 = maxwellian_field(G3, u=0.0)
    f2 = maxwellian_field(G3, u=np.array([1.0, 0.0, 0.0]))
    rep = check_velocity_ratio(f1, f2, q=2.0, p=SYM)
    assert rep.ok
    # u12 = 1/2 and T12 = 1, so the left side of (iii.2) is n |u12|^2 / T12^{3/2} = 1/4
    assert rep["iii.2"].lhs == pytest.approx(0.25, rel=1e-6)


def test_velocity_ratio_degenerate():
    f = maxwellian_field(G3)
    with pytest.raises(ConstantDegenerateError):
        check_velocity_ratio(f, f, q=2.0, p=SYM.replace(alpha=1.0))


def test_lemma_constant_formula():
    assert lemma_velocity_constant((0.5, 0.5), 3) == 1.0
    assert lemma_velocity_constant((1.5, -0.5), 2) == pytest.approx(4.0)


def test_maxwellian_sup_q0_peak():
    f = maxwellian_field(G3, T=0.9)
    rep = check_maxwellian_sup(f, f, q=0, p=SYM)
    assert rep["iv.2"].lhs == pytest.approx((2 * math.pi * 0.9) ** -1.5, rel=1e-7)
    assert rep.ok


def test_maxwellian_sup_equilibrium_pair():
    f = maxwellian_field(G3, u=np.array([0.3, 0.0, -0.2]), T=1.1)
    rep = check_maxwellian_sup(f, f, q=6.0, p=SYM)
    assert rep.ok
    assert all(r.constant >= 1.0 for r in rep.rows)


def test_maxwellian_sup_precondition():
    f = maxwellian_field(G3)
    with pytest.raises(PreconditionError):
        check_maxwellian_sup(f, f, q=4.0)


@pytest.mark.parametrize("u", [0.0, 0.7, 2.0])
def test_ray_sup_matches_dense_search(u):
    # 1D oracle: dense scan of |v|^q M(v)
    v = np.linspace(-30, 30, 600001)
    M = np.exp(-(v - u) ** 2 / (2 * 0.8 / 1.3)) / math.sqrt(2 * math.pi * 0.8 / 1.3)
    dense = float(np.max(np.abs(v) ** 5 * M))
    assert maxwellian_weighted_sup(1.0, [u], 0.8, 1.3, 5) == pytest.approx(dense, rel=1e-8)


def test_starred_rows_present():
    p = MixtureParameters(m1=1.0, m2=2.0, epsilon=0.5, model_variant=SINGLE_TERM,
                          chi12=0.3, chi21=0.3, aap_sign=AAP_PHYSICAL)
    f1 = maxwellian_field(G3, u=np.array([0.4, 0, 0]))
    f2 = maxwellian_field(G3, m=2.0, T=1.5)
    s = PairState.of(f1, f2)
    names = set()
    for chk, q in ((check_density_temperature, None), (check_tail_moments, 6.0),
                   (check_velocity_ratio, 2.0), (check_maxwellian_sup, 6.0)):
        kw = {} if q is None else {"q": q}
        rep = chk(s, p=p, starred=True, **kw)
        assert rep.ok
        names |= {r.name for r in rep.rows if "*" in r.name}
    assert {"i.2*", "i.3*", "iv.2*", "iv.3*"} <= names


def test_starred_closure_conserves():
    p = MixtureParameters(m1=1.0, m2=2.0, epsilon=0.5, model_variant=SINGLE_TERM,
                          chi12=0.3, chi21=0.2, aap_sign=AAP_PHYSICAL)
    c1, c2 = aap_closures(p, 1.0, 0.7, 3)
    assert sum(c1.c) == pytest.approx(1.0) and sum(c2.w) == pytest.approx(1.0)
    with pytest.raises(PreconditionError):
        aap_closures(p.replace(aap_sign=AAP_PRINTED), 1.0, 0.7, 3)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_composed_constants_monotone_in_q(d):
    p = MixtureParameters(m1=1.0, m2=2.0, epsilon=0.5, alpha=0.4, delta=0.3, gamma=0.01)
    qs = [d + 2.5, d + 3, d + 4, d + 6, d + 8]
    table = constant_table(p, d, qs)
    for key in ("iv.1", "iv.2", "iv.3", "gronwall"):
        vals = [row[key] for row in table]
        assert all(b >= a for a, b in zip(vals, vals[1:])), key


def test_report_csv():
    rep = EstimateReport()
    rep.add("a", 1.0, 2.0, 3.0)
    rep.add("b", 2.0, 1.0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert lines[1].startswith("a,1.0,2.0,3.0,1,")
    assert not rep.ok and [r.name for r in rep.failures] == ["b"]


def test_slack_is_absolute():
    rep = EstimateReport()
    assert rep.add("x", 1.0 + 5e-13, 1.0).passed
    assert not rep.add("y", 1.0 + 5e-12, 1.0).passed


def test_suite_reproducible():
    cfg = SuiteConfig(master_seed=11, samples=6)
    a, b = run_suite(cfg), run_suite(cfg)
    assert a.report.to_csv() == b.report.to_csv()
    assert a.report.ok


def test_sample_covers_every_checker():
    rep = run_sample(np.random.SeedSequence(5), 2)
    prefixes = {r.name.split("[")[0].rstrip("*") for r in rep.rows}
    assert {"i.1", "i.2", "i.3", "ii.1", "ii.2", "ii.3", "iii.1", "iii.2", "iii.3",
            "iv.1", "iv.2", "iv.3", "lemma.velocity", "lemma.temperature"} <= prefixes
    assert any("*" in r.name for r in rep.rows)


P = MixtureParameters(m1=1.0, m2=2.0, epsilon=0.5, alpha=0.5, delta=0.5, gamma=0.02)


def _trace(n_cells, amp, t_end):
    g = build_grid(velocity_dim=1, v_max=8.0, n_nodes_per_axis=64, n_cells=n_cells)
    f1 = initial_field(g, 1.0, [MaxwellianComponent(1.0, (0.4,), 1.0, amplitude=amp)], True)
    f2 = initial_field(g, 2.0, [MaxwellianComponent(0.7, (-0.3,), 1.8, amplitude=-amp)], True)
    cfg = SimulationConfig(dt=0.02, t_end=t_end, cadence=10, nq_orders=(0, 4))
    return run_simulation(SolverState(f1, f2, 0.0), P, cfg).ticks


def test_envelopes_at_t0():
    rep = check_envelopes(_trace(1, 0.0, 0.0), P, 1, 4)
    assert rep.ok
    assert rep["gronwall.Nq"].lhs == pytest.approx(rep["gronwall.Nq"].rhs)


def test_envelopes_homogeneous():
    trace = _trace(1, 0.0, 2.0)
    assert check_envelopes(trace, P, 1, 4).ok
    # densities stay put while the floor decays, so only t = 0 is tight
    later = check_envelopes([trace[0]] + trace[2:], P, 1, 4)
    assert later["density.floor[1]"].margin == 0.0
    n0 = trace[0].n[0]
    assert all(tk.n[0] - n0 * np.exp(-(P.nu11t + P.nu12t) * tk.t) > 0 for tk in trace[1:])


def test_envelopes_transported():
    rep = check_envelopes(_trace(32, 0.2, 2.0), P, 1, 4)
    assert rep.ok, rep.failures


def test_envelopes_missing_fields():
    with pytest.raises(DiagnosticError):
        check_envelopes([], P, 1, 4)
    with pytest.raises(DiagnosticError):
        check_envelopes(_trace(1, 0.0, 0.0), P, 1, 6)
