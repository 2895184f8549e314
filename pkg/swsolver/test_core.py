"""
Tests for grids, bathymetry sampling, quadrature averages and perturbations.
"""

import numpy as np
import pytest

from .core import (Bathymetry, BottomProfile, CaseSpec, ConservedState, Grid, apply_perturbation,
                   bump_elevation, cell_average, cell_averages, total_mass)
from .utils import ConfigError, PositivityError, gauss_nodes


@pytest.fixture
def grid():
    return Grid(0.0, 25.0, 100)


def bump_mean(a, c):
    # closed-form average of 0.2 - 0.05 (x - 10)^2 over [a, c] inside the bump
    return 0.2 - 0.05 * ((c - 10.0) ** 3 - (a - 10.0) ** 3) / (3.0 * (c - a))


class TestBump:

    def test_crest_and_edges(self):
        assert bump_elevation(10.0) == pytest.approx(0.2)
        assert bump_elevation(8.0) == pytest.approx(0.0, abs=1e-15)
        assert bump_elevation(12.0) == pytest.approx(0.0, abs=1e-15)
        assert bump_elevation(7.0) == 0.0
        assert bump_elevation(20.0) == 0.0

    def test_scalar_in_scalar_out(self):
        assert isinstance(bump_elevation(9.0), float)
        assert bump_elevation(np.array([9.0, 11.0])).shape == (2,)

    def test_symmetric_about_crest(self):
        x = np.linspace(8.0, 10.0, 17)
        np.testing.assert_allclose(bump_elevation(x), bump_elevation(20.0 - x), rtol=0, atol=1e-15)


class TestGrid:

    def test_geometry(self, grid):
        assert grid.dx == pytest.approx(0.25)
        assert grid.centers[0] == pytest.approx(0.125)
        assert grid.interfaces.size == 101
        assert grid.extended_centers(3).size == 106
        assert grid.extended_interfaces(3).size == 107
        assert grid.quadrature_points().shape == (100, 5)

    def test_quadrature_points_stay_inside_cells(self, grid):
        points = grid.quadrature_points()
        assert np.all(points > grid.interfaces[:-1, None])
        assert np.all(points < grid.interfaces[1:, None])

    def test_rejects_empty_grids(self):
        with pytest.raises(ConfigError):
            Grid(0.0, 25.0, 0)
        with pytest.raises(ConfigError):
            Grid(5.0, 5.0, 10)

    def test_same_as(self, grid):
        assert grid.same_as(Grid(0.0, 25.0, 100))
        assert not grid.same_as(Grid(0.0, 25.0, 200))


def test_gauss_weights_sum_to_one():
    offsets, weights = gauss_nodes(5)
    assert weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.abs(offsets) < 0.5)


class TestCellAverage:

    def test_constant_and_linear(self, grid):
        assert cell_average(lambda x: 3.0, 7, grid) == pytest.approx(3.0, rel=1e-15)
        assert cell_average(lambda x: 2.0 * x, 7, grid) == pytest.approx(2.0 * grid.centers[7], rel=1e-14)

    def test_bump_cell_matches_closed_form(self):
        grid = Grid(0.0, 25.0, 100)
        # cell 39 is [9.75, 10.0], cell 40 is [10.0, 10.25]
        for cell in (36, 39, 40, 44):
            a, c = grid.interfaces[cell], grid.interfaces[cell + 1]
            assert cell_average(bump_elevation, cell, grid) == pytest.approx(bump_mean(a, c), abs=1e-14)

    def test_crest_straddling_cell(self):
        # shifting the grid by half a cell puts a center on the crest: [9.875, 10.125]
        shifted = Grid(-0.125, 24.875, 100)
        assert shifted.centers[40] == pytest.approx(10.0)
        assert cell_average(bump_elevation, 40, shifted) == pytest.approx(bump_mean(9.875, 10.125), abs=1e-14)

    def test_vectorized_matches_scalar(self, grid):
        averages = cell_averages(bump_elevation, grid)
        scalar = np.array([cell_average(bump_elevation, i, grid) for i in range(grid.n_cells)])
        np.testing.assert_allclose(averages, scalar, rtol=0, atol=1e-16)


class TestBathymetry:

    def test_extended_shapes(self, grid):
        bathymetry = Bathymetry(BottomProfile.bump(), grid)
        assert bathymetry.b_averages_ext.shape == (106,)
        assert bathymetry.b_interfaces_ext.shape == (107,)
        assert bathymetry.b_quad.shape == (106, 5)
        assert bathymetry.b_interfaces.shape == (101,)

    def test_interior_averages_match_cell_averages(self, grid):
        bathymetry = Bathymetry(BottomProfile.bump(), grid)
        np.testing.assert_allclose(bathymetry.b_averages, cell_averages(bump_elevation, grid),
                                   rtol=0, atol=1e-16)

    def test_ghost_cells_are_flat(self, grid):
        bathymetry = Bathymetry(BottomProfile.bump(), grid)
        assert np.all(bathymetry.b_averages_ext[:3] == 0.0)
        assert np.all(bathymetry.b_averages_ext[-3:] == 0.0)

    def test_gaussian_slope_matches_finite_difference(self):
        profile = BottomProfile.gaussian()
        x = np.linspace(6.0, 14.0, 9)
        step = 1e-6
        numeric = (profile.elevation(x + step) - profile.elevation(x - step)) / (2 * step)
        np.testing.assert_allclose(profile.slope(x), numeric, atol=1e-8)

    def test_unknown_names(self, grid):
        with pytest.raises(ConfigError):
            BottomProfile.by_name('staircase')
        with pytest.raises(ConfigError):
            Bathymetry(BottomProfile.bump(), grid, interface_mode='averaged')


class TestConservedState:

    def test_rejects_dry_cells_naming_the_cell(self):
        with pytest.raises(PositivityError) as info:
            ConservedState(np.array([1.0, 0.0, 1.0]), np.zeros(3))
        assert info.value.cell == 1

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ConservedState(np.ones(3), np.zeros(4))

    def test_total_mass(self, grid):
        state = ConservedState(np.full(100, 2.0), np.zeros(100))
        assert total_mass(state, grid) == pytest.approx(50.0)


class TestPerturbation:

    def background(self, n):
        return ConservedState(np.full(n, 1.5), np.full(n, 4.42))

    @pytest.mark.parametrize("n_cells, touched", [(100, 2), (1000, 20)])
    def test_box_touches_cells_with_centers_inside(self, n_cells, touched):
        grid = Grid(0.0, 25.0, n_cells)
        base = self.background(n_cells)
        perturbed = apply_perturbation(base, grid, (5.75, 6.25), 0.05)

        changed = np.flatnonzero(perturbed.h != base.h)
        assert changed.size == touched
        assert np.all((grid.centers[changed] >= 5.75) & (grid.centers[changed] <= 6.25))
        np.testing.assert_allclose(perturbed.h[changed] - base.h[changed], 0.05, rtol=1e-14)
        np.testing.assert_array_equal(perturbed.hu, base.hu)

    def test_discharge_component(self, grid):
        base = self.background(100)
        perturbed = apply_perturbation(base, grid, (5.75, 6.25), 0.01, component='hu')
        np.testing.assert_array_equal(perturbed.h, base.h)
        assert np.count_nonzero(perturbed.hu != base.hu) == 2

    def test_smooth_shape_carries_gaussian_mass(self):
        grid = Grid(0.0, 25.0, 400)
        base = self.background(400)
        perturbed = apply_perturbation(base, grid, (5.0, 7.0), 0.01, shape='smooth')
        added = np.sum(perturbed.h - base.h) * grid.dx
        assert added == pytest.approx(0.01 * np.sqrt(np.pi), rel=1e-8)
        assert grid.centers[np.argmax(perturbed.h)] == pytest.approx(6.0, abs=grid.dx)

    def test_invalid_requests(self, grid):
        base = self.background(100)
        with pytest.raises(ConfigError):
            apply_perturbation(base, grid, (24.0, 26.0), 0.05)
        with pytest.raises(ConfigError):
            apply_perturbation(base, grid, (5.75, 6.25), 0.05, shape='triangle')
        with pytest.raises(ConfigError):
            apply_perturbation(base, Grid(0.0, 25.0, 50), (5.75, 6.25), 0.05)


class TestCaseSpec:

    def test_validation(self):
        with pytest.raises(ConfigError):
            CaseSpec(tag='x', regime='laminar')
        with pytest.raises(ConfigError):
            CaseSpec(tag='x', regime='shock')
        with pytest.raises(ConfigError):
            CaseSpec(tag='x', cfl=1.5)
        with pytest.raises(ConfigError):
            CaseSpec(tag='x', perturbation_interval=(30.0, 31.0))

    def test_overrides_skip_none(self):
        case = CaseSpec(tag='x', n_cells=100)
        changed = case.with_overrides(n_cells=200, t_end=None)
        assert changed.n_cells == 200
        assert changed.t_end == case.t_end
