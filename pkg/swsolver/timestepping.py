"""
Time integration: ghost-cell boundaries, CFL step size and TVD-RK3.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple
import logging

import numpy as np
from tqdm import tqdm

from .config import DEFAULT_CFL, GRAVITY, N_GHOST
from .core import CaseSpec, ConservedState, Grid, as_stack, total_mass
from .scheme_still import max_wave_speed
from .utils import ConfigError, SolverError, check_positive_depth

logger = logging.getLogger(__name__)

RhsOperator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BoundarySpec:
    """
    Inflow/outflow ghost-cell rule.

    Upstream: discharge m_in imposed, depth extrapolated. Downstream: depth
    h_out imposed while the last interior cell is subcritical, otherwise
    both components extrapolated.
    """
    m_in: float
    h_out: float
    n_ghost: int = N_GHOST
    gravity: float = GRAVITY

    @classmethod
    def from_case(cls, case: CaseSpec, n_ghost: int = N_GHOST) -> 'BoundarySpec':
        return cls(case.m_in, case.h_out, n_ghost, case.gravity)

    def fill(self, values: np.ndarray) -> np.ndarray:
        return apply_boundary(values, self)


def apply_boundary(state, spec: BoundarySpec) -> np.ndarray:
    """
    Interior values extended by `spec.n_ghost` ghost cells per side.

    Args:
        state: ConservedState or (2, N) array

    Returns:
        (2, N + 2*n_ghost) array
    """
    values = as_stack(state)
    ng = spec.n_ghost
    n = values.shape[1]
    if n < ng:
        raise ConfigError(f"Boundary fill needs at least {ng} interior cells, got {n}")

    h, hu = values
    ext = np.empty((2, n + 2 * ng))
    ext[:, ng:ng + n] = values

    ext[0, :ng] = h[0]
    ext[1, :ng] = spec.m_in

    last_froude = abs(hu[-1]) / (h[-1] * np.sqrt(spec.gravity * h[-1]))
    if last_froude < 1.0:
        ext[0, ng + n:] = spec.h_out
        ext[1, ng + n:] = hu[-1]
    else:
        ext[0, ng + n:] = h[-1]
        ext[1, ng + n:] = hu[-1]

    check_positive_depth(ext[0], what='ghost depth', offset=-ng)
    return ext


def compute_dt(state, grid: Grid, cfl: float = DEFAULT_CFL, t: float = 0.0,
               t_end: Optional[float] = None, g: float = GRAVITY, dx_power: float = 1.0,
               dx_reference: Optional[float] = None) -> float:
    """
    CFL time step cfl*dx/max(|u| + sqrt(g h)), clipped to land on t_end.

    With `dx_reference` the step is further scaled by
    (dx/dx_reference)^(dx_power - 1), so refinement studies can shrink dt
    faster than dx.
    """
    if cfl <= 0.0:
        raise ConfigError(f"CFL number must be positive, got {cfl}")

    speed = max_wave_speed(state, g=g)
    if not speed > 0.0:
        raise SolverError(f"Maximum wave speed is {speed}, cannot choose a time step")

    dt = cfl * grid.dx / speed
    if dx_reference is not None and dx_power != 1.0:
        dt *= (grid.dx / dx_reference) ** (dx_power - 1.0)
    if t_end is not None:
        dt = min(dt, t_end - t)
    return dt


def rk3_step(state, rhs_operator: RhsOperator, dt: float, check_depth: bool = True):
    """
    One third-order TVD Runge-Kutta step.

    Stages follow the Shu-Osher scheme
        u1 = u + dt L(u)
        u2 = 3/4 u + 1/4 (u1 + dt L(u1))
        u  = 1/3 u + 2/3 (u2 + dt L(u2))
    written in increment form so a zero right-hand side returns the state
    unchanged bit for bit.
    """
    u0 = as_stack(state)

    l0 = rhs_operator(u0)
    u1 = u0 + dt * l0
    if check_depth:
        check_positive_depth(u1[0], stage=1)

    l1 = rhs_operator(u1)
    u2 = u0 + (0.25 * dt) * (l0 + l1)
    if check_depth:
        check_positive_depth(u2[0], stage=2)

    l2 = rhs_operator(u2)
    u_new = u0 + (dt / 6.0) * (l0 + l1 + 4.0 * l2)
    if check_depth:
        check_positive_depth(u_new[0], stage=3)

    if isinstance(state, ConservedState):
        return ConservedState.from_stack(u_new)
    return u_new


@dataclass
class StepLog:
    steps: int = 0
    t_final: float = 0.0
    min_depth: float = float('inf')
    max_cfl: float = 0.0
    dt_min: float = float('inf')
    dt_max: float = 0.0
    initial_mass: float = 0.0
    final_mass: float = 0.0
    boundary_mass_inflow: float = 0.0       # time integral of F_left - F_right
    history: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def mass_defect(self) -> float:
        """Mass change not accounted for by the boundary fluxes."""
        return self.final_mass - self.initial_mass - self.boundary_mass_inflow

    def summary(self) -> dict:
        return {'steps': self.steps, 't_final': self.t_final, 'min_depth': self.min_depth,
                'max_cfl': self.max_cfl, 'dt_min': self.dt_min, 'dt_max': self.dt_max,
                'mass_defect': self.mass_defect}


def integrate(state: ConservedState, case: CaseSpec, scheme, boundary: Optional[BoundarySpec] = None,
              t_end: Optional[float] = None, cfl: Optional[float] = None,
              dx_power: float = 1.0, dx_reference: Optional[float] = None,
              observer: Optional[Callable[[float, np.ndarray], Optional[float]]] = None,
              progress: bool = False, max_steps: int = 10_000_000) -> Tuple[ConservedState, StepLog]:
    """
    Advance `state` to t_end with TVD-RK3.

    Args:
        state: initial cell averages
        case: supplies grid, boundary data, default t_end and CFL number
        scheme: object with rhs(values, boundary_fill), max_speed(values) and
            last_boundary_flux (mass flux through both ends after each rhs)
        observer: called as observer(t, values) after every step; a returned
            float is recorded in the log history
        progress: show a tqdm bar over simulated time

    Returns:
        (final state, StepLog)
    """
    grid = case.grid()
    boundary = boundary or BoundarySpec.from_case(case)
    t_end = case.t_end if t_end is None else t_end
    cfl = case.cfl if cfl is None else cfl
    g = case.gravity

    values = as_stack(state).copy()
    log = StepLog(initial_mass=total_mass(state, grid), min_depth=float(np.min(values[0])))

    stage_fluxes = []

    def operator(u):
        rate = scheme.rhs(u, boundary.fill)
        stage_fluxes.append(np.array(scheme.last_boundary_flux, dtype=float))
        return rate

    t = 0.0
    logger.info(f"Integrating case {case.tag} with the {scheme.name} scheme on {grid.n_cells} cells "
                f"to t={t_end}")

    with tqdm(total=t_end, disable=not progress, desc=f"case {case.tag}/{scheme.name}", unit='s') as bar:
        while t < t_end:
            if log.steps >= max_steps:
                raise SolverError(f"Case {case.tag}: exceeded {max_steps} steps before t_end={t_end}")

            dt = compute_dt(values, grid, cfl, t, t_end, g, dx_power, dx_reference)
            if dt <= 0.0:
                break
            speed = scheme.max_speed(values)

            stage_fluxes.clear()
            try:
                values = rk3_step(values, operator, dt)
            except SolverError as e:
                raise type(e)(f"Case {case.tag}, t={t:.6g}: {e}", *_error_context(e)) from e

            f0, f1, f2 = stage_fluxes
            net = (f0 + f1 + 4.0 * f2) / 6.0
            log.boundary_mass_inflow += dt * float(net[0] - net[1])

            t = t + dt if t + dt < t_end else t_end
            log.steps += 1
            log.min_depth = min(log.min_depth, float(np.min(values[0])))
            log.max_cfl = max(log.max_cfl, dt * speed / grid.dx)
            log.dt_min = min(log.dt_min, dt)
            log.dt_max = max(log.dt_max, dt)

            if observer is not None:
                record = observer(t, values)
                if record is not None:
                    log.history.append((t, float(record)))
            bar.update(dt)

    final = ConservedState.from_stack(values)
    log.t_final = t
    log.final_mass = total_mass(final, grid)
    logger.info(f"Case {case.tag}: {log.steps} steps, min depth {log.min_depth:.6g}, "
                f"mass defect {log.mass_defect:.3e}")
    return final, log


def _error_context(error: SolverError) -> tuple:
    # keep the structured fields of the diagnostic when re-raising with case context
    if hasattr(error, 'cell'):
        return (error.cell, error.stage)
    if hasattr(error, 'deficit'):
        return (error.deficit, error.branch)
    return ()
