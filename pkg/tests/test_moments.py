from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bgkmix.errors import DimensionError, ZeroDensityError
from bgkmix.grid import build_grid
from bgkmix.moments import (DistributionField, cell_moments, compute_moments, entropy_functional,
                            weighted_L1_distance, weighted_sup_Nq)

from conftest import maxwellian_field


def test_maxwellian_moments(grid1):
    m = compute_moments(maxwellian_field(grid1), grid1)
    assert m.n == pytest.approx(1.0, abs=1e-8)
    assert abs(m.u[0]) < 1e-8
    assert m.T == pytest.approx(1.0, abs=1e-8)


def test_zero_density(grid1):
    with pytest.raises(ZeroDensityError):
        compute_moments(DistributionField(np.zeros(grid1.n_nodes), 1.0, grid1))


_WIDE = build_grid(velocity_dim=1, v_max=12.0, n_nodes_per_axis=192)


def test_shifted_maxwellian():
    # box respects v_max >= 7 sqrt(T/m) + |u|
    m = compute_moments(maxwellian_field(_WIDE, u=2.0))
    assert m.u[0] == pytest.approx(2.0, abs=1e-8)
    assert m.T == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("mass", [0.5, 2.0])
def test_temperature_carries_mass(mass):
    m = compute_moments(maxwellian_field(_WIDE, T=1.3, m=mass))
    assert m.T == pytest.approx(1.3, abs=1e-8)


def test_cell_moments_match_single_cell():
    g = build_grid(velocity_dim=2, v_max=6.0, n_nodes_per_axis=24, n_cells=3)
    rng = np.random.default_rng(3)
    f = DistributionField(rng.uniform(0.1, 1.0, (3, g.n_nodes)), 1.7, g)
    cm = cell_moments(f)
    for i in range(3):
        m = compute_moments(f, cell=i)
        assert cm.n[i] == pytest.approx(m.n, rel=1e-14)
        np.testing.assert_allclose(cm.u[i], m.u, atol=1e-14)
        assert cm.T[i] == pytest.approx(m.T, rel=1e-13)


def test_nq_zero_is_max(grid1):
    f = maxwellian_field(grid1)
    assert weighted_sup_Nq(f, 0) == f.values.max()


def test_nq_closed_form():
    g = build_grid(velocity_dim=3, v_max=8.0, n_nodes_per_axis=64)
    f = maxwellian_field(g)
    expected = 6 ** 3 * math.exp(-3) * (2 * math.pi) ** -1.5
    assert expected == pytest.approx(0.6828, abs=1e-4)
    assert weighted_sup_Nq(f, 6) == pytest.approx(expected, rel=0.02)


def test_nq_zero_field(grid1):
    assert weighted_sup_Nq(DistributionField(np.zeros(grid1.n_nodes), 1.0, grid1), 4) == 0.0


def test_entropy_conventions(grid1):
    z = DistributionField(np.zeros(grid1.n_nodes), 1.0, grid1)
    assert entropy_functional(z, z) == 0.0
    ind = np.where(np.abs(grid1.nodes[:, 0]) < 1.0, 1.0, 0.0)
    u = DistributionField(ind, 1.0, grid1)
    assert entropy_functional(u, u) == 0.0


def test_entropy_gaussian(grid1):
    f = maxwellian_field(grid1)
    expected = 2 * (-0.5 * math.log(2 * math.pi) - 0.5)
    assert entropy_functional(f, f) == pytest.approx(expected, abs=1e-3)
    assert expected == pytest.approx(-2.8379, abs=1e-4)


def test_l1_identity_and_single_node(grid1):
    f = maxwellian_field(grid1)
    assert weighted_L1_distance(f, f) == 0.0
    j, eps = 77, 1e-3
    g = f.copy()
    g.values[0, j] += eps
    v2 = float(grid1.nodes[j] @ grid1.nodes[j])
    expected = eps * grid1.weights[j] * (1 + v2) * grid1.dx
    assert weighted_L1_distance(f, g) == pytest.approx(expected, rel=1e-10)


def test_l1_two_densities(grid1):
    # int (1 + v^2) M dv = n (1 + T/m) for d = 1
    d = weighted_L1_distance(maxwellian_field(grid1, n=1.0), maxwellian_field(grid1, n=2.0))
    assert d == pytest.approx(2.0, abs=1e-6)


def test_l1_grid_mismatch(grid1):
    other = build_grid(velocity_dim=1, v_max=8.0, n_nodes_per_axis=64)
    with pytest.raises(DimensionError):
        weighted_L1_distance(maxwellian_field(grid1), maxwellian_field(other))


_G2 = build_grid(velocity_dim=2, v_max=5.0, n_nodes_per_axis=20)


def _rand_field(seed, grid=_G2, mass=1.0):
    rng = np.random.default_rng(seed)
    return DistributionField(rng.uniform(0.0, 1.0, grid.n_nodes) ** 3, mass, grid)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(1e-3, 1e3))
def test_scaling_leaves_u_T(seed, c):
    f = _rand_field(seed)
    a = compute_moments(f)
    b = compute_moments(f.with_values(c * f.values))
    assert b.n == pytest.approx(c * a.n, rel=1e-13)
    np.testing.assert_allclose(b.u, a.u, rtol=1e-12, atol=1e-13)
    assert b.T == pytest.approx(a.T, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(shift=st.integers(-4, 4), axis=st.integers(0, 1))
def test_galilean_shift(shift, axis):
    g = build_grid(velocity_dim=2, v_max=10.0, n_nodes_per_axis=80)
    f = maxwellian_field(g, u=0.0, T=0.8)
    grid_vals = f.values[0].reshape(80, 80)
    moved = np.roll(grid_vals, shift, axis=axis).ravel()
    a, b = compute_moments(f), compute_moments(f.with_values(moved))
    expected = a.u.copy()
    expected[axis] += shift * g.dv
    np.testing.assert_allclose(b.u, expected, atol=1e-8)
    assert b.T == pytest.approx(a.T, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(s=st.tuples(*[st.integers(0, 2 ** 32 - 1)] * 3))
def test_l1_is_metric(s):
    f, g, h = (_rand_field(x) for x in s)
    assert weighted_L1_distance(f, g) == weighted_L1_distance(g, f)
    assert weighted_L1_distance(f, h) <= weighted_L1_distance(f, g) + weighted_L1_distance(g, h) + 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), q=st.floats(0, 8))
def test_nq_monotone(seed, q):
    f = _rand_field(seed)
    bump = np.random.default_rng(seed + 1).uniform(0, 1, _G2.n_nodes)
    assert weighted_sup_Nq(f, q) <= weighted_sup_Nq(f.with_values(f.values + bump), q)
