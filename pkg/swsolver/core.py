"""
Grid, state containers, bathymetry, quadrature and perturbation utilities
shared by every scheme.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple
import logging

import numpy as np

from .config import GRAVITY, DEFAULT_CFL, N_GHOST, QUADRATURE_POINTS
from .utils import ConfigError, check_positive_depth, gauss_nodes

logger = logging.getLogger(__name__)


def bump_elevation(x):
    """Parabolic bump 0.2 - 0.05 (x - 10)^2 on [8, 12], zero elsewhere."""
    x_arr = np.asarray(x, dtype=float)
    b = np.where((x_arr >= 8.0) & (x_arr <= 12.0), 0.2 - 0.05 * (x_arr - 10.0) ** 2, 0.0)
    return float(b) if b.ndim == 0 else b


def bump_slope(x):
    x_arr = np.asarray(x, dtype=float)
    bx = np.where((x_arr > 8.0) & (x_arr < 12.0), -0.1 * (x_arr - 10.0), 0.0)
    return float(bx) if bx.ndim == 0 else bx


def quadrature_average(values: np.ndarray) -> np.ndarray:
    """
    Weighted sum over the last axis (one entry per Gauss point).

    Accumulates in a fixed order so every caller averaging the same point
    values gets bitwise the same cell average.
    """
    _, weights = gauss_nodes(values.shape[-1])
    total = weights[0] * values[..., 0]
    for q in range(1, values.shape[-1]):
        total = total + weights[q] * values[..., q]
    return total


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 1:
            raise ConfigError(f"Grid needs at least one cell, got {self.n_cells}")
        if not self.x_max > self.x_min:
            raise ConfigError(f"Empty domain [{self.x_min}, {self.x_max}]")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def interfaces(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(self.n_cells) + 0.5)

    def extended_centers(self, n_ghost: int = N_GHOST) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(-n_ghost, self.n_cells + n_ghost) + 0.5)

    def extended_interfaces(self, n_ghost: int = N_GHOST) -> np.ndarray:
        return self.x_min + self.dx * np.arange(-n_ghost, self.n_cells + n_ghost + 1)

    def quadrature_points(self, n_ghost: int = 0, n_points: int = QUADRATURE_POINTS) -> np.ndarray:
        """Gauss points of every cell, shape (cells, n_points)."""
        offsets, _ = gauss_nodes(n_points)
        return self.extended_centers(n_ghost)[:, None] + self.dx * offsets[None, :]

    def interior(self, n_ghost: int = N_GHOST) -> slice:
        return slice(n_ghost, n_ghost + self.n_cells)

    def same_as(self, other: 'Grid') -> bool:
        return (self.n_cells == other.n_cells and np.isclose(self.x_min, other.x_min)
                and np.isclose(self.x_max, other.x_max))


@dataclass
class ConservedState:
    """Cell averages of depth h and discharge hu."""
    h: np.ndarray
    hu: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.hu = np.asarray(self.hu, dtype=float)
        if self.h.shape != self.hu.shape:
            raise ValueError(f"h and hu shapes differ: {self.h.shape} vs {self.hu.shape}")
        check_positive_depth(self.h)

    @property
    def n_cells(self) -> int:
        return self.h.size

    def stack(self) -> np.ndarray:
        return np.stack([self.h, self.hu])

    @classmethod
    def from_stack(cls, values: np.ndarray) -> 'ConservedState':
        return cls(values[0].copy(), values[1].copy())

    def copy(self) -> 'ConservedState':
        return ConservedState(self.h.copy(), self.hu.copy())


def as_stack(state) -> np.ndarray:
    """(2, n) array view of a ConservedState or of an already stacked array."""
    if isinstance(state, ConservedState):
        return state.stack()
    return np.asarray(state, dtype=float)


def total_mass(state: ConservedState, grid: Grid) -> float:
    return float(np.sum(state.h) * grid.dx)


@dataclass(frozen=True)
class BottomProfile:
    """Analytic bottom elevation b(x) with its slope b_x."""
    name: str
    elevation: Callable
    slope: Callable
    crest: Optional[float] = None

    @classmethod
    def bump(cls) -> 'BottomProfile':
        return cls('bump', bump_elevation, bump_slope, crest=10.0)

    @classmethod
    def flat(cls) -> 'BottomProfile':
        return cls('flat', lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                   lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    @classmethod
    def gaussian(cls, height: float = 0.2, centre: float = 10.0, width: float = 0.4) -> 'BottomProfile':
        # b = height * exp(-width (x - centre)^2)
        def elevation(x):
            return height * np.exp(-width * (np.asarray(x, dtype=float) - centre) ** 2)

        def slope(x):
            xc = np.asarray(x, dtype=float) - centre
            return -2.0 * width * xc * height * np.exp(-width * xc ** 2)

        return cls('gaussian', elevation, slope, crest=centre)

    @classmethod
    def by_name(cls, name: str) -> 'BottomProfile':
        factories = {'bump': cls.bump, 'flat': cls.flat, 'gaussian': cls.gaussian}
        if name not in factories:
            raise ConfigError(f"Unknown bathymetry '{name}'")
        return factories[name]()


class Bathymetry:
    """
    Bottom topography sampled on a grid extended by ghost cells.

    Arrays ending in `_ext` cover the N + 2*n_ghost extended cells (or the
    N + 2*n_ghost + 1 extended interfaces); `b_quad`/`slope_quad` hold the
    values at every Gauss point of every extended cell.
    """

    def __init__(self, profile: BottomProfile, grid: Grid, n_ghost: int = N_GHOST,
                 interface_mode: str = 'reconstructed'):
        if interface_mode not in ('sampled', 'reconstructed'):
            raise ConfigError(f"Unknown interface mode '{interface_mode}'")

        self.profile = profile
        self.grid = grid
        self.n_ghost = n_ghost
        self.interface_mode = interface_mode

        self.x_quad = grid.quadrature_points(n_ghost)
        self.b_quad = np.asarray(profile.elevation(self.x_quad), dtype=float)
        self.slope_quad = np.asarray(profile.slope(self.x_quad), dtype=float)

        self.b_centers_ext = np.asarray(profile.elevation(grid.extended_centers(n_ghost)), dtype=float)
        self.b_interfaces_ext = np.asarray(profile.elevation(grid.extended_interfaces(n_ghost)), dtype=float)
        self.b_averages_ext = quadrature_average(self.b_quad)

    @property
    def b_centers(self) -> np.ndarray:
        return self.b_centers_ext[self.grid.interior(self.n_ghost)]

    @property
    def b_averages(self) -> np.ndarray:
        return self.b_averages_ext[self.grid.interior(self.n_ghost)]

    @property
    def b_interfaces(self) -> np.ndarray:
        g = self.n_ghost
        return self.b_interfaces_ext[g:g + self.grid.n_cells + 1]


def cell_average(f: Callable[[float], float], cell: int, grid: Grid,
                 n_points: int = QUADRATURE_POINTS) -> float:
    """Gauss-Legendre average of a scalar function over one cell."""
    offsets, weights = gauss_nodes(n_points)
    center = grid.x_min + grid.dx * (cell + 0.5)
    values = np.array([f(float(center + grid.dx * s)) for s in offsets])
    return float(quadrature_average(values))


def cell_averages(f: Callable, grid: Grid, n_ghost: int = 0,
                  n_points: int = QUADRATURE_POINTS) -> np.ndarray:
    """Vectorized cell_average over every (extended) cell; f must accept arrays."""
    values = np.asarray(f(grid.quadrature_points(n_ghost, n_points)), dtype=float)
    return quadrature_average(values)


def perturbation_profile(grid: Grid, interval: Tuple[float, float], amplitude: float,
                         shape: str = 'box') -> np.ndarray:

    lo, hi = interval
    if shape == 'box':
        centers = grid.centers
        inside = (centers >= lo) & (centers <= hi)
        return np.where(inside, amplitude, 0.0)

    if shape == 'smooth':
        middle = 0.5 * (lo + hi)
        width = 0.5 * (hi - lo)
        return cell_averages(lambda x: amplitude * np.exp(-((x - middle) / width) ** 2), grid)

    raise ConfigError(f"Unknown perturbation shape '{shape}'")


def apply_perturbation(state: ConservedState, grid: Grid, interval: Tuple[float, float],
                       amplitude: float, shape: str = 'box', component: str = 'h') -> ConservedState:
    """
    Add a perturbation to the cell averages of one component.

    Box perturbations raise every cell whose center lies in the closed
    interval by exactly `amplitude`; the other component is left untouched.
    """
    if state.n_cells != grid.n_cells:
        raise ConfigError(f"State has {state.n_cells} cells, grid has {grid.n_cells}")

    lo, hi = interval
    if not (grid.x_min <= lo <= hi <= grid.x_max):
        raise ConfigError(f"Perturbation interval [{lo}, {hi}] is not inside the domain")

    bump = perturbation_profile(grid, interval, amplitude, shape)

    h, hu = state.h.copy(), state.hu.copy()
    if component == 'h':
        h = h + bump
    elif component == 'hu':
        hu = hu + bump
    else:
        raise ConfigError(f"Unknown perturbed component '{component}'")

    touched = int(np.count_nonzero(bump))
    logger.debug(f"Perturbation of {amplitude} applied to {touched} cells ({shape})")
    return ConservedState(h, hu)


@dataclass(frozen=True)
class CaseSpec:
    """Full description of one benchmark configuration."""
    tag: str
    x_min: float = 0.0
    x_max: float = 25.0
    n_cells: int = 100
    bathymetry: str = 'bump'
    regime: str = 'subcritical'        # subcritical | transcritical | shock
    discharge: float = 0.0
    energy_upstream: float = 0.0
    energy_downstream: Optional[float] = None
    perturbation_amplitude: float = 0.05
    perturbation_interval: Tuple[float, float] = (5.75, 6.25)
    perturbation_shape: str = 'box'
    m_in: float = 0.0
    h_out: float = 1.0
    t_end: float = 1.5
    cfl: float = DEFAULT_CFL
    gravity: float = GRAVITY

    def __post_init__(self):
        lo, hi = self.perturbation_interval
        if not (self.x_min <= lo <= hi <= self.x_max):
            raise ConfigError(f"Case {self.tag}: perturbation interval outside the domain")
        if self.regime not in ('subcritical', 'transcritical', 'shock'):
            raise ConfigError(f"Case {self.tag}: unknown flow regime '{self.regime}'")
        if self.regime == 'shock' and self.energy_downstream is None:
            raise ConfigError(f"Case {self.tag}: a shock case needs a downstream energy")
        if self.gravity <= 0.0:
            raise ConfigError(f"Case {self.tag}: gravity must be positive")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"Case {self.tag}: CFL number must lie in (0, 1]")

    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.n_cells)

    def bottom(self) -> BottomProfile:
        return BottomProfile.by_name(self.bathymetry)

    def with_overrides(self, **changes) -> 'CaseSpec':
        return replace(self, **{k: v for k, v in changes.items() if v is not None})
