"""
Benchmark orchestration: background profiles, perturbed runs, deviation
metrics against the background equilibrium, refinement studies and sweeps.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from tqdm import tqdm

from .cases import get_case
from .config import N_GHOST, RunConfig
from .core import Bathymetry, CaseSpec, ConservedState, Grid, apply_perturbation, as_stack
from .equilibrium import SteadyProfile, steady_profile
from .oracle import FirstOrderScheme
from .scheme_moving import MovingWaterScheme
from .scheme_still import StillWaterScheme
from .timestepping import BoundarySpec, StepLog, integrate
from .utils import ConfigError, GridMismatchError, SolverError, write_csv

logger = logging.getLogger(__name__)

Window = Tuple[float, float]


@dataclass
class DeviationReport:
    """Per-cell differences from the background state plus scalar summaries."""
    x: np.ndarray
    h: np.ndarray
    hu: np.ndarray
    b: np.ndarray
    dh: np.ndarray
    dm: np.ndarray
    dx: float
    probe_window: Window
    excluded_window: Optional[Window] = None

    def _cells_in(self, window: Window) -> np.ndarray:
        return (self.x >= window[0]) & (self.x <= window[1])

    @property
    def max_probe(self) -> float:
        inside = self._cells_in(self.probe_window)
        return float(np.max(np.abs(self.dh[inside]))) if inside.any() else 0.0

    @property
    def spurious(self) -> float:
        """max |dh| over the cells the physical pulse cannot have reached."""
        outside = np.ones(self.x.size, dtype=bool)
        if self.excluded_window is not None:
            outside = ~self._cells_in(self.excluded_window)
        return float(np.max(np.abs(self.dh[outside]))) if outside.any() else 0.0

    @property
    def spurious_momentum(self) -> float:
        outside = np.ones(self.x.size, dtype=bool)
        if self.excluded_window is not None:
            outside = ~self._cells_in(self.excluded_window)
        return float(np.max(np.abs(self.dm[outside]))) if outside.any() else 0.0

    @property
    def l1_h(self) -> float:
        return float(np.sum(np.abs(self.dh)) * self.dx)

    @property
    def l1_m(self) -> float:
        return float(np.sum(np.abs(self.dm)) * self.dx)

    @property
    def n_cells(self) -> int:
        return self.x.size

    def scalars(self) -> Dict[str, Any]:
        return {'max_probe_dh': self.max_probe, 'spurious_dh': self.spurious,
                'spurious_dm': self.spurious_momentum, 'l1_dh': self.l1_h, 'l1_dm': self.l1_m,
                'probe_window': list(self.probe_window),
                'excluded_window': list(self.excluded_window) if self.excluded_window else None}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'x': self.x, 'h': self.h, 'hu': self.hu, 'b': self.b,
                             'surface': self.h + self.b, 'dh': self.dh, 'dm': self.dm})

    def lobes(self, window: Window, fraction: float = 0.2) -> List[Window]:
        """
        Disjoint runs of cells inside `window` where |dh| exceeds `fraction`
        of its maximum there.
        """
        inside = self._cells_in(window)
        magnitude = np.abs(self.dh)
        peak = magnitude[inside].max() if inside.any() else 0.0
        if peak == 0.0:
            return []

        marked = inside & (magnitude >= fraction * peak)
        runs = []
        start = None
        for k, flag in enumerate(marked):
            if flag and start is None:
                start = k
            elif not flag and start is not None:
                runs.append((float(self.x[start]), float(self.x[k - 1])))
                start = None
        if start is not None:
            runs.append((float(self.x[start]), float(self.x[-1])))
        return runs


def deviation(state, profile: SteadyProfile, grid: Grid, probe_window: Optional[Window] = None,
              excluded_window: Optional[Window] = None) -> DeviationReport:
    """Compare cell averages with the quadrature averages of the background profile."""
    h, hu = as_stack(state)
    if h.size != grid.n_cells:
        raise GridMismatchError(f"State has {h.size} cells, grid has {grid.n_cells}")

    reference = profile.cell_averages(grid)
    return DeviationReport(
        x=grid.centers, h=h.copy(), hu=hu.copy(), b=np.asarray(profile.bottom.elevation(grid.centers)),
        dh=h - reference.h, dm=hu - reference.hu, dx=grid.dx,
        probe_window=probe_window or (grid.x_min, grid.x_max), excluded_window=excluded_window)


def pulse_window(case: CaseSpec, profile: SteadyProfile, t: float, grid: Optional[Grid] = None) -> Window:
    """
    Region the initial perturbation can have reached by time t.

    The left end follows the u - c characteristic of the background flow
    from the left end of the perturbation, the right end follows u + c
    from its right end; the result is padded by max(0.5, 12 dx).
    """
    grid = grid or case.grid()
    lo, hi = case.perturbation_interval
    pad = max(0.5, 12.0 * grid.dx)
    if t <= 0.0:
        return lo - pad, hi + pad

    g = case.gravity

    def speed(x, sign):
        x_c = float(np.clip(x, grid.x_min, grid.x_max))
        h = float(profile.depth(np.array([x_c]))[0])
        return profile.discharge / h + sign * np.sqrt(g * h)

    left = solve_ivp(lambda _, x: [speed(x[0], -1.0)], (0.0, t), [lo], max_step=0.05, rtol=1e-8)
    right = solve_ivp(lambda _, x: [speed(x[0], 1.0)], (0.0, t), [hi], max_step=0.05, rtol=1e-8)
    x_left = min(lo, float(left.y[0, -1]))
    x_right = max(hi, float(right.y[0, -1]))
    return x_left - pad, x_right + pad


def make_scheme(name: str, case: CaseSpec, grid: Grid, profile: SteadyProfile,
                n_ghost: int = N_GHOST):
    """Scheme object for `name` bound to the case bathymetry."""
    bottom = case.bottom()
    if name == 'still':
        return StillWaterScheme(Bathymetry(bottom, grid, n_ghost, 'reconstructed'), case.gravity)
    if name == 'moving':
        branches = profile.cell_branches(grid)
        return MovingWaterScheme(Bathymetry(bottom, grid, n_ghost, 'sampled'), branches, case.gravity)
    if name == 'oracle1':
        return FirstOrderScheme(Bathymetry(bottom, grid, n_ghost, 'sampled'), case.gravity)
    raise ConfigError(f"Unknown scheme '{name}'")


def initial_state(case: CaseSpec, profile: SteadyProfile, grid: Grid) -> ConservedState:
    background = profile.cell_averages(grid)
    if case.perturbation_amplitude == 0.0:
        return background
    return apply_perturbation(background, grid, case.perturbation_interval, case.perturbation_amplitude,
                              case.perturbation_shape)


def reference_frame(profile: SteadyProfile, grid: Grid) -> pd.DataFrame:
    """Background profile per cell: averages, bottom, energy and branch."""
    averages = profile.cell_averages(grid)
    return pd.DataFrame({
        'x': grid.centers, 'h': averages.h, 'hu': averages.hu,
        'b': np.asarray(profile.bottom.elevation(grid.centers)),
        'E': profile.cell_energies(grid),
        'branch': np.where(profile.cell_branches(grid), 'supercritical', 'subcritical'),
    })


@dataclass
class RunResult:
    config: RunConfig
    case: CaseSpec
    report: DeviationReport
    log: StepLog
    diagnostics: Dict[str, int]
    paths: List[Path] = field(default_factory=list)


def case_for(config: RunConfig) -> CaseSpec:
    return get_case(config.case, n_cells=config.n_cells, amplitude=config.amplitude,
                    t_end=config.t_end, cfl=config.cfl)


def run_case(config: RunConfig, progress: bool = False, probe_window: Optional[Window] = None) -> RunResult:
    """
    One benchmark run: background profile, perturbation, integration,
    deviation report and (optionally) CSV output.
    """
    config.validate()
    case = case_for(config)
    grid = case.grid()

    try:
        profile = steady_profile(case, grid)
    except SolverError as e:
        logger.error(f"Case {case.tag}: cannot build the background state: {e}")
        raise

    state = initial_state(case, profile, grid)
    scheme = make_scheme(config.scheme, case, grid, profile)
    final, log = integrate(state, case, scheme, BoundarySpec.from_case(case), progress=progress)

    window = pulse_window(case, profile, log.t_final, grid) if case.perturbation_amplitude != 0.0 else None
    report = deviation(final, profile, grid, probe_window, window)
    result = RunResult(config, case, report, log, dict(scheme.diagnostics))

    logger.info(f"Case {case.tag}/{config.scheme}: spurious |dh| {report.spurious:.3e}, "
                f"L1(dh) {report.l1_h:.3e}")

    if config.out:
        header = {**config.describe(), 'regime': case.regime, 'discharge': case.discharge,
                  'm_in': case.m_in, 'h_out': case.h_out, 't_final': log.t_final, 'steps': log.steps,
                  **report.scalars(), **{f'diag_{k}': v for k, v in scheme.diagnostics.items()}}
        if profile.shock is not None:
            header['shock_position'] = repr(profile.shock)
        result.paths.append(write_csv(config.out, report.to_frame(), header))

        if config.emit_reference:
            reference_path = Path(config.out).with_suffix('.reference.csv')
            result.paths.append(write_csv(str(reference_path), reference_frame(profile, grid),
                                          {'case': case.tag, 'n_cells': grid.n_cells,
                                           'discharge': profile.discharge}))
    return result


def equilibrium_residual(case_tag: str, scheme_name: str, n_cells: int) -> Dict[str, float]:
    """Right-hand side of a scheme evaluated on the unperturbed background state."""
    case = get_case(case_tag, n_cells=n_cells, amplitude=0.0)
    grid = case.grid()
    profile = steady_profile(case, grid)
    state = profile.cell_averages(grid)
    scheme = make_scheme(scheme_name, case, grid, profile)
    rate = scheme.rhs(state, BoundarySpec.from_case(case).fill)
    return {'case': case_tag, 'scheme': scheme_name, 'n_cells': n_cells,
            'max_rhs_h': float(np.max(np.abs(rate[0]))), 'max_rhs_hu': float(np.max(np.abs(rate[1]))),
            'fallbacks': sum(v for k, v in scheme.diagnostics.items() if k != 'rhs_evaluations')}


def _solve_on(case: CaseSpec, scheme_name: str, n_cells: int, dx_reference: float,
              dx_power: float) -> np.ndarray:
    case = case.with_overrides(n_cells=n_cells)
    grid = case.grid()
    profile = steady_profile(case, grid)
    scheme = make_scheme(scheme_name, case, grid, profile)
    final, _ = integrate(initial_state(case, profile, grid), case, scheme,
                         dx_power=dx_power, dx_reference=dx_reference)
    return final.stack()


def block_average(values: np.ndarray, n_cells: int) -> np.ndarray:
    """Average a fine-grid (…, N_fine) array onto n_cells coarse cells."""
    n_fine = values.shape[-1]
    if n_fine % n_cells:
        raise GridMismatchError(f"{n_fine} cells cannot be averaged onto {n_cells}")
    return values.reshape(values.shape[:-1] + (n_cells, n_fine // n_cells)).mean(axis=-1)


def convergence_study(case_tag: str = 'smooth', scheme_name: str = 'still',
                      n_list: Sequence[int] = (50, 100, 200, 400), reference_cells: int = 3200,
                      t_end: Optional[float] = None, dx_power: float = 5.0 / 3.0,
                      progress: bool = False) -> pd.DataFrame:
    """
    Self-convergence of a scheme against a fine-grid run.

    The time step shrinks like dx^dx_power (relative to the coarsest grid)
    so temporal error stays below the spatial one.

    Returns:
        DataFrame with n_cells, dx, l1_error and the pairwise order; the
        least-squares slope of log(error) against log(dx) is stored in
        frame.attrs['order']
    """
    n_list = sorted(n_list)
    if len(n_list) < 4:
        raise ConfigError("A convergence study needs at least 4 resolutions")
    if reference_cells <= n_list[-1]:
        raise ConfigError("The reference grid must be finer than every studied grid")

    case = get_case(case_tag, t_end=t_end)
    dx_reference = (case.x_max - case.x_min) / n_list[0]

    logger.info(f"Convergence study: {scheme_name} on case {case_tag}, N={list(n_list)}, "
                f"reference N={reference_cells}")
    reference = _solve_on(case, scheme_name, reference_cells, dx_reference, dx_power)

    rows = []
    for n in tqdm(n_list, desc=f"convergence {scheme_name}", disable=not progress):
        solution = _solve_on(case, scheme_name, n, dx_reference, dx_power)
        dx = (case.x_max - case.x_min) / n
        error = float(np.sum(np.abs(solution[0] - block_average(reference[0], n))) * dx)
        rows.append({'n_cells': n, 'dx': dx, 'l1_error': error})

    frame = pd.DataFrame(rows)
    frame['order'] = np.log(frame['l1_error'].shift(1) / frame['l1_error']) / np.log(2.0)
    slope, _ = np.polyfit(np.log(frame['dx']), np.log(frame['l1_error']), 1)
    frame.attrs['order'] = float(slope)
    frame.attrs['scheme'] = scheme_name
    logger.info(f"Measured order for {scheme_name}: {slope:.2f}")
    return frame


def wellbalance_sweep(cases: Sequence[str] = ('lake', 'a', 'b'), schemes: Sequence[str] = ('still', 'moving'),
                      n_list: Sequence[int] = (50, 100), progress: bool = False) -> pd.DataFrame:
    rows = [equilibrium_residual(case, scheme, n)
            for case in cases for scheme in schemes for n in tqdm(n_list, disable=not progress,
                                                                   desc=f"{case}/{scheme}")]
    return pd.DataFrame(rows)


# (case, n_cells, amplitude) combinations run by the figures sweep
FIGURE_RUNS = (
    ('a', 100, 0.05), ('a', 1000, 0.05), ('b', 100, 0.05), ('b', 1000, 0.05),
    ('c', 200, 0.05), ('c', 1000, 0.05),
    ('a', 100, 0.001), ('a', 200, 0.001), ('a', 1000, 0.001), ('a', 100, 0.01),
)


def figure_sweep(out_dir: str, schemes: Sequence[str] = ('still', 'moving'),
                 runs: Sequence[Tuple[str, int, float]] = FIGURE_RUNS,
                 progress: bool = False) -> pd.DataFrame:
    """Run every figure configuration with each scheme, one CSV per run."""
    rows = []
    for case_tag, n_cells, amplitude in tqdm(runs, desc='figure runs', disable=not progress):
        for scheme_name in schemes:
            out = Path(out_dir) / f"case_{case_tag}_{scheme_name}_N{n_cells}_amp{amplitude:g}.csv"
            config = RunConfig(case=case_tag, scheme=scheme_name, n_cells=n_cells, amplitude=amplitude,
                               out=str(out)).validate()
            result = run_case(config)
            rows.append({'case': case_tag, 'scheme': scheme_name, 'n_cells': n_cells,
                         'amplitude': amplitude, 'spurious_dh': result.report.spurious,
                         'l1_dh': result.report.l1_h, 'steps': result.log.steps, 'file': str(out)})
    return pd.DataFrame(rows)
