import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kghlab.initial_data import gaussian_bump, plane_wave, random_smooth
from kghlab.nonlinearity import HartreeParams, apply_f, energy, hartree_potential, momentum, potential_energy
from kghlab.propagators import State, free_flow
from kghlab.spectral import make_grid, riesz_multiplier

from oracles import periodic_riesz_sum_2d

P1 = HartreeParams(gamma=1.0)


def test_zero_field():
    g = make_grid(2, 16, 8.0)
    z = np.zeros(g.shape)
    assert np.all(hartree_potential(g, z, P1) == 0)
    assert np.all(apply_f(g, z, P1) == 0)
    assert energy(State.zeros(g), P1) == 0
    assert np.all(momentum(State.zeros(g)) == 0)


def test_rejects_gamma_at_dimension():
    g = make_grid(2, 8, 1.0)
    with pytest.raises(ValueError, match="gamma"):
        hartree_potential(g, np.ones(g.shape), HartreeParams(gamma=2.0))


def test_disabled_potential_is_zero():
    g = make_grid(2, 8, 4.0)
    u = np.random.default_rng(0).standard_normal(g.shape)
    assert np.all(hartree_potential(g, u, HartreeParams(enabled=False)) == 0)


def test_potential_real_zero_mean():
    g = make_grid(3, 16, 8.0)
    u = random_smooth(g, 3).u
    rho = hartree_potential(g, u, HartreeParams(gamma=2.0))
    assert rho.dtype == float
    assert abs(rho.mean()) < 1e-12 * np.max(np.abs(rho))


def test_single_harmonic_diagonal():
    # u^2 = 1/2 + 1/2 cos(2 k.x), so rho is the cos(2k.x) half scaled by the symbol
    g = make_grid(2, 16, 2 * np.pi)
    x, y = g.coords()
    u = np.cos(2 * x + y)
    rho = hartree_potential(g, u, P1)
    expected = 0.5 * riesz_multiplier(g, 1.0).values[4, 2] * np.cos(4 * x + 2 * y)
    assert np.max(np.abs(rho - expected)) < 1e-12 * np.max(np.abs(expected))


def test_potential_matches_periodic_sum_oracle():
    sigma, length, n = 1.5, 16.0, 16
    g = make_grid(2, n, length)
    x, y = g.coords()
    u = np.exp(-(x**2 + y**2) / (2 * sigma**2))
    oracle = periodic_riesz_sum_2d(lambda a, b: np.exp(-(a**2 + b**2) / sigma**2), n, length, refine=4)
    rho = hartree_potential(g, u, P1)
    assert np.linalg.norm(rho - oracle) / np.linalg.norm(oracle) <= 2e-2


class TestApplyF:
    def test_odd(self):
        g = make_grid(2, 16, 8.0)
        u = random_smooth(g, 1).u
        assert np.array_equal(apply_f(g, -u, P1), -apply_f(g, u, P1))

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-4, 4).filter(lambda v: abs(v) > 1e-3), st.integers(0, 1000))
    def test_cubic(self, lam, seed):
        g = make_grid(2, 16, 8.0)
        u = random_smooth(g, seed).u
        a = apply_f(g, lam * u, P1)
        b = lam**3 * apply_f(g, u, P1)
        assert np.max(np.abs(a - b)) <= 1e-12 * max(np.max(np.abs(b)), 1e-300) * 10


class TestEnergy:
    @pytest.mark.parametrize("dim,mode", [(1, (2,)), (2, (1, 3)), (3, (1, 1, -2))])
    def test_free_plane_wave(self, dim, mode):
        g = make_grid(dim, 16, 5.0)
        s = plane_wave(g, mode)
        k = 2 * np.pi * np.asarray(mode, float) / g.length
        w2 = 1 + k @ k
        e = energy(s, HartreeParams(gamma=0.5, enabled=False))
        assert e == pytest.approx(g.volume * w2 / 2, rel=1e-12)
        # direct grid sum: u_t^2 + |grad u|^2 + u^2 with the analytic gradient
        arg = sum(kj * x for kj, x in zip(k, g.coords()))
        dens = w2 * np.sin(arg) ** 2 + (k @ k) * np.sin(arg) ** 2 + np.cos(arg) ** 2
        assert e == pytest.approx(0.5 * g.cell_volume * dens.sum(), rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.3, 1.9))
    def test_quartic_nonnegative(self, seed, gamma):
        g = make_grid(2, 16, 8.0)
        u = np.random.default_rng(seed).standard_normal(g.shape)
        assert potential_energy(g, u, HartreeParams(gamma=gamma)) >= -1e-10

    def test_gradient_matches_force(self):
        g = make_grid(2, 16, 8.0)
        u = random_smooth(g, 7).u
        w = random_smooth(g, 8).u
        h = 1e-4
        fd = (potential_energy(g, u + h * w, P1) - potential_energy(g, u - h * w, P1)) / (2 * h)
        # the mass part of the energy, 1/2 int u^2, contributes int u w
        fd += g.integrate(u * w)
        exact = g.integrate((apply_f(g, u, P1) + u) * w)
        assert fd == pytest.approx(exact, rel=1e-6)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 1000), st.integers(-8, 8), st.integers(-8, 8))
    def test_translation_invariant(self, seed, s1, s2):
        g = make_grid(2, 16, 8.0)
        s = random_smooth(g, seed)
        t = State(g, np.roll(s.u, (s1, s2), (0, 1)), np.roll(s.ut, (s1, s2), (0, 1)))
        assert energy(t, P1) == pytest.approx(energy(s, P1), rel=1e-12)


class TestMomentum:
    def test_static(self):
        g = make_grid(2, 16, 8.0)
        s = State(g, random_smooth(g, 1).u, np.zeros(g.shape))
        assert np.max(np.abs(momentum(s))) < 1e-14

    def test_conserved_by_free_flow(self):
        g = make_grid(2, 32, 16.0)
        s = gaussian_bump(g, sigma=1.2, boost=(0.5, -0.2))
        p0 = momentum(s)
        for _ in range(200):
            s = free_flow(s, 0.25)
        assert np.max(np.abs(momentum(s) - p0)) <= 1e-10 * np.max(np.abs(p0))

    def test_boost_direction(self):
        g = make_grid(2, 32, 16.0)
        p = momentum(gaussian_bump(g, sigma=1.2, boost=(0.5, 0.0)))
        # u_t = -b d_1 u gives P_1 = -b int (d_1 u)^2 < 0
        assert p[0] < 0 and abs(p[1]) < 1e-12
