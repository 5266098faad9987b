import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fixedtime_etc.rbf import (
    SQUARED,
    RbfNetwork,
    basis,
    lattice_centers,
    phi_hat_equilibrium,
    phi_hat_rate,
)


def test_basis_at_center_and_one_width_away():
    net = RbfNetwork(np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), 2.0)
    om = net.basis([0.0, 0.0, 0.0])
    assert om[0] == 1.0
    assert om[1] == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_squared_kind():
    net = RbfNetwork(np.array([[3.0, 4.0]]), 5.0, SQUARED)
    assert net.basis([0.0, 0.0])[0] == pytest.approx(math.exp(-1.0), rel=1e-15)
    net_u = RbfNetwork(np.array([[3.0, 4.0]]), 5.0)
    assert net_u.basis([0.0, 0.0])[0] == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert RbfNetwork(np.array([[1.0]]), 1.0, SQUARED).basis([3.0])[0] == pytest.approx(math.exp(-4.0))


def test_energy_is_sum_of_squares():
    c = lattice_centers(3)
    net = RbfNetwork(c, 2.0)
    W = np.array([0.3, -0.7, 1.1])
    brute = sum(math.exp(-math.dist(W, ci) / 2.0) ** 2 for ci in c)
    assert net.energy(W) == pytest.approx(brute, rel=1e-12)


@pytest.mark.parametrize("dim,count,per_axis", [(1, 7, 7), (2, 49, 7), (3, 343, 7), (5, 243, 3)])
def test_lattice_sizes(dim, count, per_axis):
    c = lattice_centers(dim)
    assert c.shape == (count, dim)
    assert len(np.unique(c[:, 0])) == per_axis
    assert c.min() == -3.0 and c.max() == 3.0


def test_lattice_single_axis_point():
    c = lattice_centers(2, per_dim=1)
    assert c.tolist() == [[0.0, 0.0]]


def test_shape_mismatch_rejected():
    net = RbfNetwork(lattice_centers(3), 2.0)
    with pytest.raises(ValueError):
        basis([0.0, 1.0], net)


@pytest.mark.parametrize("kw", [{"width": 0.0}, {"width": -1.0}, {"kind": "cubic"}])
def test_bad_network(kw):
    args = {"centers": np.zeros((2, 2)), "width": 1.0, **kw}
    with pytest.raises(ValueError):
        RbfNetwork(**args)


def test_centers_are_frozen():
    net = RbfNetwork(lattice_centers(2), 2.0)
    with pytest.raises(ValueError):
        net.centers[0, 0] = 5.0


@given(arrays(float, 3, elements=st.floats(-50, 50)))
def test_basis_bounded(W):
    om = basis(W, RbfNetwork(lattice_centers(3), 2.0))
    assert np.all(om >= 0)
    assert np.all(om <= 1.0)


def test_adaptive_rate_values():
    eps = 12 / 11
    assert phi_hat_rate(0.0, 5.0, eps, 1.0, 10.0, 0.0) == 0.0
    assert phi_hat_rate(0.0, 5.0, eps, 1.0, 10.0, 0.2) == pytest.approx(-2.0)
    assert phi_hat_rate(2.0, 3.0, eps, 1.0, 10.0, 0.0) == pytest.approx(eps / 2 * 4 * 3)


@given(st.floats(-5, 5), st.floats(0, 50), st.floats(1.01, 5), st.floats(0.1, 3), st.floats(0.1, 20))
def test_equilibrium_zeroes_rate(z, energy, eps, u, tau):
    ph = phi_hat_equilibrium(z, energy, eps, u, tau)
    assert ph >= 0
    assert phi_hat_rate(z, energy, eps, u, tau, ph) == pytest.approx(0.0, abs=1e-9 * max(1.0, tau * ph))
