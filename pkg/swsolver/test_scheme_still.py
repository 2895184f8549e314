import numpy as np
import pytest

from .config import GRAVITY, N_GHOST
from .core import Bathymetry, BottomProfile, ConservedState, Grid, cell_averages, quadrature_average
from .scheme_still import (StillWaterScheme, lf_flux, max_wave_speed, physical_flux, reconstruct_still, rhs_still,
                           source_still)
from .timestepping import BoundarySpec


def lake_state(bathymetry, surface):
    h = surface - bathymetry.b_averages
    return ConservedState(h, np.zeros_like(h))


def c_property_tolerance(surface, dx):
    return 1e-13 * max(1.0, GRAVITY * surface ** 2) / dx


class TestLakeAtRest:

    @pytest.mark.parametrize("n_cells", [25, 100, 1000])
    def test_rhs_vanishes(self, n_cells):
        grid = Grid(0.0, 25.0, n_cells)
        bathymetry = Bathymetry(BottomProfile.bump(), grid)
        state = lake_state(bathymetry, 1.0)
        rate = rhs_still(state, bathymetry, BoundarySpec(0.0, 1.0).fill)
        assert np.max(np.abs(rate)) <= c_property_tolerance(1.0, grid.dx)

    @pytest.mark.parametrize("surface", [0.5, 1.0, 3.0])
    def test_any_surface_level(self, surface):
        grid = Grid(0.0, 25.0, 100)
        bathymetry = Bathymetry(BottomProfile.bump(), grid)
        rate = rhs_still(lake_state(bathymetry, surface), bathymetry, BoundarySpec(0.0, surface).fill)
        assert np.max(np.abs(rate)) <= c_property_tolerance(surface, grid.dx)

    def test_local_alpha(self):
        grid = Grid(0.0, 25.0, 100)
        bathymetry = Bathymetry(BottomProfile.bump(), grid)
        scheme = StillWaterScheme(bathymetry, local_alpha=True)
        rate = scheme.rhs(lake_state(bathymetry, 1.0), BoundarySpec(0.0, 1.0).fill)
        assert np.max(np.abs(rate)) <= c_property_tolerance(1.0, grid.dx)
        assert scheme.diagnostics['rhs_evaluations'] == 1

    def test_gaussian_bottom(self):
        grid = Grid(0.0, 25.0, 100)
        bathymetry = Bathymetry(BottomProfile.gaussian(), grid)
        rate = rhs_still(lake_state(bathymetry, 1.0), bathymetry, BoundarySpec(0.0, 1.0).fill)
        assert np.max(np.abs(rate)) <= c_property_tolerance(1.0, grid.dx)


def test_uniform_flow_on_flat_bottom():
    grid = Grid(0.0, 25.0, 50)
    bathymetry = Bathymetry(BottomProfile.flat(), grid)
    state = ConservedState(np.full(50, 1.3), np.full(50, 0.9))
    rate = rhs_still(state, bathymetry, BoundarySpec(0.9, 1.3).fill)
    np.testing.assert_allclose(rate, 0.0, atol=1e-12)


def test_mass_balance_matches_boundary_flux():
    grid = Grid(0.0, 25.0, 100)
    bathymetry = Bathymetry(BottomProfile.bump(), grid)
    rng = np.random.default_rng(5)
    h = 2.0 - bathymetry.b_averages + 0.01 * rng.uniform(size=100)
    state = ConservedState(h, 4.42 + 0.01 * rng.uniform(size=100))

    scheme = StillWaterScheme(bathymetry)
    rate = scheme.rhs(state, BoundarySpec(4.42, 2.0).fill)
    left, right = scheme.last_boundary_flux
    assert np.sum(rate[0]) * grid.dx == pytest.approx(left - right, abs=1e-12)


class TestFlux:

    def test_consistency(self):
        u = np.array([[1.2], [0.7]])
        flux = lf_flux(u, u, np.array([1.3]), np.array([1.3]), 5.0)
        np.testing.assert_allclose(flux, physical_flux(u[0], u[1]))

    def test_dissipation_acts_on_surface(self):
        u_minus = np.array([[1.0], [0.0]])
        u_plus = np.array([[0.8], [0.0]])
        # same surface on both sides: no mass dissipation
        flux = lf_flux(u_minus, u_plus, np.array([1.0]), np.array([1.0]), 10.0)
        assert flux[0, 0] == 0.0

    def test_max_wave_speed(self):
        state = ConservedState(np.array([1.0, 4.0]), np.array([1.0, 0.0]))
        assert max_wave_speed(state) == pytest.approx(np.sqrt(GRAVITY * 4.0))


def test_source_converges_to_bottom_integral():
    bottom = BottomProfile.gaussian()

    def surface(x):
        return 2.0 + 0.1 * np.sin(0.5 * x)

    def depth(x):
        return surface(x) - bottom.elevation(x)

    errors = []
    for n_cells in (50, 100, 200):
        grid = Grid(0.0, 25.0, n_cells)
        bathymetry = Bathymetry(bottom, grid, interface_mode='sampled')
        h_ext = cell_averages(depth, grid, N_GHOST)
        state_ext = np.stack([h_ext, np.zeros_like(h_ext)])

        interfaces, cells = reconstruct_still(state_ext, bathymetry)
        source = source_still(interfaces, cells, bathymetry)

        x = grid.quadrature_points(n_points=10)
        exact = -GRAVITY * grid.dx * quadrature_average(depth(x) * bottom.slope(x))
        assert np.all(source[0] == 0.0)
        errors.append(np.max(np.abs(source[1] - exact)))

    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 4.0), errors
