"""
Benchmark reproductions: equilibrium preservation over long runs, the
perturbed-flow comparisons between the two schemes, and order checks.

These take minutes; run them with `pytest -m slow`.
"""

import numpy as np
import pytest

from swsolver.cases import get_case
from swsolver.config import RunConfig
from swsolver.core import Bathymetry, BottomProfile, ConservedState, quadrature_average
from swsolver.equilibrium import minimum_energy, momentum_flux, solve_height_array, steady_profile
from swsolver.harness import convergence_study, initial_state, make_scheme, run_case
from swsolver.scheme_moving import MovingWaterScheme
from swsolver.timestepping import BoundarySpec, integrate

pytestmark = pytest.mark.slow


def spurious(case_tag, scheme, n_cells, amplitude, t_end=None):
    config = RunConfig(case=case_tag, scheme=scheme, n_cells=n_cells, amplitude=amplitude, t_end=t_end)
    return run_case(config.validate()).report


class TestEquilibriumOverTime:

    @pytest.mark.parametrize("n_cells", [25, 100, 1000])
    def test_lake_at_rest(self, n_cells):
        case = get_case('lake', n_cells=n_cells, amplitude=0.0, t_end=1.5)
        grid = case.grid()
        profile = steady_profile(case, grid)
        state = initial_state(case, profile, grid)
        final, log = integrate(state, case, make_scheme('still', case, grid, profile))
        assert log.t_final == 1.5
        assert np.max(np.abs(final.h - state.h)) <= 1e-12
        assert np.max(np.abs(final.hu)) <= 1e-12

    @pytest.mark.parametrize("n_cells", [50, 100])
    def test_random_moving_equilibria(self, n_cells):
        rng = np.random.default_rng(2024)
        bottom = BottomProfile.bump()
        for _ in range(20):
            m = rng.uniform(0.5, 5.0)
            E = float(minimum_energy(m, 0.2)) + rng.uniform(0.5, 5.0)
            supercritical = bool(rng.integers(2))

            case = get_case('a', n_cells=n_cells, amplitude=0.0, t_end=1.5)
            grid = case.grid()
            depth, ok = solve_height_array(m, E, bottom.elevation(grid.quadrature_points()), supercritical)
            assert ok.all()
            state = ConservedState(quadrature_average(depth), np.full(n_cells, m))

            scheme = MovingWaterScheme(Bathymetry(bottom, grid, interface_mode='sampled'),
                                       np.full(n_cells, supercritical), case.gravity)
            boundary = BoundarySpec(m_in=m, h_out=float(state.h[-1]))
            final, _ = integrate(state, case, scheme, boundary)

            scale = max(1.0, float(np.max(momentum_flux(state.h, state.hu))))
            assert np.max(np.abs(final.h - state.h)) <= 1e-11 * scale, (m, E, supercritical)
            assert np.max(np.abs(final.hu - state.hu)) <= 1e-11 * scale, (m, E, supercritical)


class TestPerturbedSubcriticalFlow:

    def test_moving_scheme_has_no_spurious_waves(self):
        still = spurious('a', 'still', 100, 0.05)
        moving = spurious('a', 'moving', 100, 0.05)
        assert moving.spurious <= 1e-8
        assert still.spurious >= 10.0 * moving.spurious

    def test_both_schemes_capture_the_pulse_when_refined(self):
        coarse = spurious('a', 'still', 100, 0.05)
        still = spurious('a', 'still', 1000, 0.05)
        moving = spurious('a', 'moving', 1000, 0.05)
        assert still.spurious * 20.0 <= coarse.spurious
        assert still.max_probe == pytest.approx(moving.max_probe, rel=0.1)

    def test_small_pulse(self):
        amplitude = 0.001
        still = spurious('a', 'still', 100, amplitude)
        moving = spurious('a', 'moving', 100, amplitude)
        assert moving.spurious / amplitude <= 1e-4
        # measured 0.185 of the amplitude
        assert still.spurious / amplitude >= 0.1
        assert still.spurious >= 100.0 * moving.spurious

        still_fine = spurious('a', 'still', 200, amplitude)
        moving_fine = spurious('a', 'moving', 200, amplitude)
        assert still_fine.spurious < still.spurious
        assert still_fine.spurious >= 10.0 * moving_fine.spurious


class TestShockCase:

    def test_shock_position(self):
        assert steady_profile(get_case('c')).shock == pytest.approx(11.665504281554291, abs=1e-6)

    @pytest.mark.parametrize("scheme", ['still', 'moving'])
    def test_pulse_displaces_the_shock(self, scheme):
        report = spurious('c', scheme, 200, 0.05)
        assert report.x[np.argmax(np.abs(report.dh))] == pytest.approx(11.7, abs=0.3)


@pytest.mark.parametrize("case_tag", ['a', 'b', 'c'])
def test_pulse_splits_into_two_waves(case_tag):
    config = RunConfig(case=case_tag, scheme='moving', n_cells=400, amplitude=0.05, t_end=0.2)
    report = run_case(config.validate(), probe_window=(0.0, 8.0)).report
    lobes = report.lobes((0.0, 8.0))
    assert len(lobes) == 2
    left, right = lobes
    assert left[1] < right[0]
    assert 0.5 * (left[0] + left[1]) < 6.0 < 0.5 * (right[0] + right[1])


class TestOrder:

    @pytest.mark.parametrize("scheme", ['still', 'moving'])
    def test_high_order_schemes(self, scheme):
        frame = convergence_study('smooth', scheme, (50, 100, 200, 400), reference_cells=3200)
        assert frame.attrs['order'] >= 3.0

    def test_first_order_reference_scheme(self):
        frame = convergence_study('smooth', 'oracle1', (50, 100, 200, 400), reference_cells=3200,
                                  dx_power=1.0)
        assert frame.attrs['order'] == pytest.approx(1.0, abs=0.3)


def test_schemes_agree_under_refinement():
    distances = {}
    for n_cells in (400, 1600):
        case = get_case('a', n_cells=n_cells).with_overrides(perturbation_shape='smooth')
        grid = case.grid()
        profile = steady_profile(case, grid)
        state = initial_state(case, profile, grid)
        solutions = {name: integrate(state, case, make_scheme(name, case, grid, profile))[0].h
                     for name in ('oracle1', 'still', 'moving')}
        distances[n_cells] = {
            pair: float(np.sum(np.abs(solutions[pair[0]] - solutions[pair[1]])) * grid.dx)
            for pair in (('oracle1', 'still'), ('oracle1', 'moving'), ('still', 'moving'))}

    for pair, coarse in distances[400].items():
        assert distances[1600][pair] * 2.0 <= coarse, pair
    assert distances[1600][('still', 'moving')] < distances[1600][('oracle1', 'still')]
