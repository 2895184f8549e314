import numpy as np
import pytest

from .cases import get_case
from .config import GRAVITY
from .core import ConservedState, Grid
from .equilibrium import steady_profile
from .harness import initial_state, make_scheme
from .timestepping import BoundarySpec, apply_boundary, compute_dt, integrate, rk3_step
from .utils import ConfigError, PositivityError, SolverError


class TestBoundary:

    def test_subcritical_outflow_imposes_depth(self):
        values = np.stack([np.linspace(1.0, 1.5, 30), np.full(30, 2.0)])
        ext = apply_boundary(values, BoundarySpec(m_in=2.5, h_out=1.7))
        assert ext.shape == (2, 36)
        np.testing.assert_array_equal(ext[0, :3], 1.0)
        np.testing.assert_array_equal(ext[1, :3], 2.5)
        np.testing.assert_array_equal(ext[0, -3:], 1.7)
        np.testing.assert_array_equal(ext[1, -3:], 2.0)
        np.testing.assert_array_equal(ext[:, 3:33], values)

    def test_supercritical_outflow_extrapolates(self):
        values = np.stack([np.full(30, 0.3), np.full(30, 1.53)])
        ext = apply_boundary(values, BoundarySpec(m_in=1.53, h_out=0.66))
        np.testing.assert_array_equal(ext[0, -3:], 0.3)

    def test_equilibrium_ghosts_stay_on_equilibrium(self):
        case = get_case('a')
        state = steady_profile(case).cell_averages(case.grid())
        ext = apply_boundary(state, BoundarySpec.from_case(case))
        assert ext[0, 0] == state.h[0]
        assert ext[0, -1] == pytest.approx(state.h[-1], rel=1e-14)
        assert np.all(ext[1] == 4.42)

    def test_too_few_cells(self):
        with pytest.raises(ConfigError):
            apply_boundary(np.ones((2, 2)), BoundarySpec(1.0, 1.0))


class TestTimeStep:

    def test_cfl_step(self):
        grid = Grid(0.0, 25.0, 100)
        state = ConservedState(np.ones(100), np.zeros(100))
        assert compute_dt(state, grid, 0.6) == pytest.approx(0.6 * 0.25 / np.sqrt(GRAVITY))

    def test_last_step_lands_on_t_end(self):
        grid = Grid(0.0, 25.0, 100)
        # wave speed 3 gives a raw step of 0.05
        state = ConservedState(np.full(100, 9.0 / GRAVITY), np.zeros(100))
        assert compute_dt(state, grid, 0.6, t=1.0, t_end=1.5) == pytest.approx(0.05)
        assert compute_dt(state, grid, 0.6, t=1.49, t_end=1.5) == pytest.approx(0.01)

    def test_refinement_exponent(self):
        grid = Grid(0.0, 25.0, 200)
        state = ConservedState(np.ones(200), np.zeros(200))
        plain = compute_dt(state, grid, 0.6)
        scaled = compute_dt(state, grid, 0.6, dx_power=5.0 / 3.0, dx_reference=0.25)
        assert scaled == pytest.approx(plain * 0.5 ** (2.0 / 3.0))

    def test_invalid_cfl(self):
        grid = Grid(0.0, 25.0, 10)
        with pytest.raises(ConfigError):
            compute_dt(ConservedState(np.ones(10), np.zeros(10)), grid, 0.0)


class TestRK3:

    def test_zero_rhs_is_a_fixed_point(self):
        u = np.stack([np.linspace(1.0, 2.0, 8), np.linspace(-1.0, 1.0, 8)])
        out = rk3_step(u, lambda v: np.zeros_like(v), 0.3)
        np.testing.assert_array_equal(out, u)

    def test_third_order_polynomial_of_linear_problem(self):
        rate, dt = -0.7, 0.2
        u = np.ones((2, 3))
        out = rk3_step(u, lambda v: rate * v, dt)
        z = rate * dt
        np.testing.assert_allclose(out, 1.0 + z + z ** 2 / 2 + z ** 3 / 6, rtol=1e-14)

    def test_returns_conserved_state_for_conserved_state(self):
        state = ConservedState(np.ones(4), np.zeros(4))
        assert isinstance(rk3_step(state, lambda v: np.zeros_like(v), 0.1), ConservedState)

    def test_negative_depth_names_the_stage(self):
        u = np.ones((2, 4))

        def drain(v):
            rate = np.zeros_like(v)
            rate[0, 2] = -100.0
            return rate

        with pytest.raises(PositivityError) as info:
            rk3_step(u, drain, 0.1)
        assert info.value.stage == 1
        assert info.value.cell == 2


class TestIntegrate:

    def test_lake_at_rest_does_not_drift(self):
        case = get_case('lake', n_cells=25, amplitude=0.0, t_end=0.5)
        grid = case.grid()
        profile = steady_profile(case, grid)
        state = initial_state(case, profile, grid)
        final, log = integrate(state, case, make_scheme('still', case, grid, profile))
        assert log.t_final == 0.5
        assert np.max(np.abs(final.h - state.h)) <= 1e-12
        assert np.max(np.abs(final.hu)) <= 1e-12

    def test_moving_equilibrium_does_not_drift(self):
        case = get_case('a', n_cells=50, amplitude=0.0, t_end=0.5)
        grid = case.grid()
        profile = steady_profile(case, grid)
        state = initial_state(case, profile, grid)
        final, log = integrate(state, case, make_scheme('moving', case, grid, profile))
        assert log.steps > 0
        assert np.max(np.abs(final.h - state.h)) <= 1e-11
        assert np.max(np.abs(final.hu - state.hu)) <= 1e-11

    def test_mass_is_accounted_for_by_boundary_fluxes(self):
        case = get_case('a', n_cells=50, t_end=0.3)
        grid = case.grid()
        profile = steady_profile(case, grid)
        state = initial_state(case, profile, grid)
        _, log = integrate(state, case, make_scheme('still', case, grid, profile))
        assert log.mass_defect == pytest.approx(0.0, abs=1e-11)
        assert set(log.summary()) >= {'steps', 't_final', 'min_depth', 'mass_defect'}

    def test_observer_history(self):
        case = get_case('a', n_cells=50, t_end=0.1)
        grid = case.grid()
        profile = steady_profile(case, grid)
        state = initial_state(case, profile, grid)
        _, log = integrate(state, case, make_scheme('oracle1', case, grid, profile),
                           observer=lambda t, values: float(values[0].max()))
        assert len(log.history) == log.steps
        assert log.history[-1][0] == 0.1

    def test_step_limit(self):
        case = get_case('a', n_cells=50, t_end=1.0)
        grid = case.grid()
        profile = steady_profile(case, grid)
        state = initial_state(case, profile, grid)
        with pytest.raises(SolverError):
            integrate(state, case, make_scheme('oracle1', case, grid, profile), max_steps=2)
