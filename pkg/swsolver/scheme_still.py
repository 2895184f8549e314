"""
Still-water well-balanced WENO scheme.

The surface h + b is reconstructed with WENO5 and the same frozen
coefficients are applied to the bottom averages, so a lake at rest gives a
flat reconstructed surface. Dissipation in the Lax-Friedrichs flux acts on
(h + b, hu) and the bottom source is split so that it cancels the flux
divergence exactly at still water.
"""

from dataclasses import dataclass
from typing import Callable, Optional
import logging

import numpy as np

from .config import GRAVITY
from .core import Bathymetry, as_stack, quadrature_average
from .utils import check_positive_depth
from .weno import apply_frozen, cell_windows, frozen_weights, point_value_matrix, weno5_reconstruct

logger = logging.getLogger(__name__)

BoundaryFill = Callable[[np.ndarray], np.ndarray]


def physical_flux(h, hu, g: float = GRAVITY) -> np.ndarray:
    return np.stack([hu, hu * hu / h + 0.5 * g * h * h])


def wave_speed(h, hu, g: float = GRAVITY):
    return np.abs(hu / h) + np.sqrt(g * h)


def max_wave_speed(state, bathymetry: Optional[Bathymetry] = None, g: float = GRAVITY) -> float:
    """Largest |u| + sqrt(g h) over the cells of `state`."""
    h, hu = as_stack(state)
    check_positive_depth(h)
    return float(np.max(wave_speed(h, hu, g)))


def lf_flux(u_minus, u_plus, surface_minus, surface_plus, alpha, g: float = GRAVITY) -> np.ndarray:
    """
    Lax-Friedrichs flux with the dissipation applied to (h + b, hu).

    Args:
        u_minus, u_plus: (h, hu) on both sides of the interface(s)
        surface_minus, surface_plus: h + b on both sides
        alpha: global or per-interface dissipation coefficient
    """
    f_minus = physical_flux(u_minus[0], u_minus[1], g)
    f_plus = physical_flux(u_plus[0], u_plus[1], g)
    jump = np.stack([np.asarray(surface_plus) - np.asarray(surface_minus),
                     np.asarray(u_plus[1]) - np.asarray(u_minus[1])])
    return 0.5 * (f_minus + f_plus - alpha * jump)


@dataclass
class InterfaceData:
    """Reconstructed states at the N + 1 interior interfaces."""
    u_minus: np.ndarray         # (2, N+1), value from the left cell
    u_plus: np.ndarray          # (2, N+1), value from the right cell
    b_minus: np.ndarray
    b_plus: np.ndarray
    surface_minus: np.ndarray
    surface_plus: np.ndarray


@dataclass
class _CellData:
    surface_windows: np.ndarray     # (N, 5) surface averages around each interior cell
    surface_bar: np.ndarray


def reconstruct_still(state_ext: np.ndarray, bathymetry: Bathymetry):
    """
    WENO reconstruction on an extended (ghost-filled) state.

    Returns:
        (InterfaceData, cell data for the source quadrature)
    """
    n = bathymetry.grid.n_cells
    ng = bathymetry.n_ghost
    first, last = ng - 1, ng + n + 1

    h_ext, hu_ext = state_ext
    surface = h_ext + bathymetry.b_averages_ext

    surface_windows = cell_windows(surface, first, last)
    weights = frozen_weights(surface_windows)
    s_right, s_left = apply_frozen(weights, surface_windows)

    if bathymetry.interface_mode == 'reconstructed':
        b_right, b_left = apply_frozen(weights, cell_windows(bathymetry.b_averages_ext, first, last))
    else:
        b_right = bathymetry.b_interfaces_ext[first + 1:last + 1]
        b_left = bathymetry.b_interfaces_ext[first:last]

    hu_right, hu_left = weno5_reconstruct(cell_windows(hu_ext, first, last))

    interfaces = InterfaceData(
        u_minus=np.stack([s_right[:-1] - b_right[:-1], hu_right[:-1]]),
        u_plus=np.stack([s_left[1:] - b_left[1:], hu_left[1:]]),
        b_minus=b_right[:-1],
        b_plus=b_left[1:],
        surface_minus=s_right[:-1],
        surface_plus=s_left[1:],
    )
    check_positive_depth(interfaces.u_minus[0], what='reconstructed depth (left of interface)')
    check_positive_depth(interfaces.u_plus[0], what='reconstructed depth (right of interface)')

    cells = _CellData(surface_windows=surface_windows[1:-1], surface_bar=surface[ng:ng + n])
    return interfaces, cells


def source_still(interfaces: InterfaceData, cells: _CellData, bathymetry: Bathymetry,
                 g: float = GRAVITY) -> np.ndarray:
    """
    Split bottom source per cell, shape (2, N).

    Interface averages b_hat = (b- + b+)/2 and b2_hat = ((b-)^2 + (b+)^2)/2
    carry the part that balances the flux; the remainder is the integral of
    g (p - mean surface) b_x over the cell, with p the degree-4 polynomial
    through the surrounding surface averages, by 5-point Gauss quadrature.
    """
    grid = bathymetry.grid
    b_hat = 0.5 * (interfaces.b_minus + interfaces.b_plus)
    b2_hat = 0.5 * (interfaces.b_minus * interfaces.b_minus + interfaces.b_plus * interfaces.b_plus)

    surface_bar = cells.surface_bar
    p_values = cells.surface_windows @ point_value_matrix(bathymetry.b_quad.shape[1]).T
    slope = bathymetry.slope_quad[grid.interior(bathymetry.n_ghost)]
    integral = quadrature_average((p_values - surface_bar[:, None]) * slope) * grid.dx

    momentum = (0.5 * g * (b2_hat[1:] - b2_hat[:-1])
                - g * surface_bar * (b_hat[1:] - b_hat[:-1])
                - g * integral)
    return np.stack([np.zeros_like(momentum), momentum])


def interface_alpha(interfaces: InterfaceData, cell_speed: float, local: bool = False,
                    g: float = GRAVITY):
    speed_minus = wave_speed(interfaces.u_minus[0], interfaces.u_minus[1], g)
    speed_plus = wave_speed(interfaces.u_plus[0], interfaces.u_plus[1], g)
    if local:
        return np.maximum(speed_minus, speed_plus)
    return max(cell_speed, float(np.max(speed_minus)), float(np.max(speed_plus)))


def _assemble_still(state, bathymetry: Bathymetry, boundary_fill: BoundaryFill,
                    local_alpha: bool, g: float):
    values = as_stack(state)
    state_ext = boundary_fill(values)

    interfaces, cells = reconstruct_still(state_ext, bathymetry)
    cell_speed = max_wave_speed(values, g=g)
    alpha = interface_alpha(interfaces, cell_speed, local_alpha, g)

    flux = lf_flux(interfaces.u_minus, interfaces.u_plus,
                   interfaces.surface_minus, interfaces.surface_plus, alpha, g)
    source = source_still(interfaces, cells, bathymetry, g)
    return (-(flux[:, 1:] - flux[:, :-1]) + source) / bathymetry.grid.dx, flux


def rhs_still(state, bathymetry: Bathymetry, boundary_fill: BoundaryFill,
              local_alpha: bool = False, g: float = GRAVITY) -> np.ndarray:
    """
    Semi-discrete right-hand side dU/dt of the still-water scheme.

    Args:
        state: interior cell averages, ConservedState or (2, N) array
        bathymetry: bottom sampled on the ghost-extended grid
        boundary_fill: maps the (2, N) interior values to the (2, N + 2*ghosts)
            extended array
        local_alpha: per-interface dissipation instead of the global maximum

    Returns:
        (2, N) array
    """
    rhs, _ = _assemble_still(state, bathymetry, boundary_fill, local_alpha, g)
    return rhs


class StillWaterScheme:
    """Still-water well-balanced WENO scheme bound to one bathymetry."""

    name = 'still'

    def __init__(self, bathymetry: Bathymetry, gravity: float = GRAVITY, local_alpha: bool = False):
        self.bathymetry = bathymetry
        self.gravity = gravity
        self.local_alpha = local_alpha
        self.diagnostics = {'rhs_evaluations': 0}
        # mass flux through the left and right boundary at the last evaluation
        self.last_boundary_flux = np.zeros(2)
        logger.debug(f"Still-water scheme on {bathymetry.grid.n_cells} cells "
                     f"({'local' if local_alpha else 'global'} alpha, {bathymetry.interface_mode} bottom)")

    def rhs(self, state, boundary_fill: BoundaryFill) -> np.ndarray:
        self.diagnostics['rhs_evaluations'] += 1
        rhs, flux = _assemble_still(state, self.bathymetry, boundary_fill, self.local_alpha, self.gravity)
        self.last_boundary_flux = flux[0, [0, -1]]
        return rhs

    def max_speed(self, state) -> float:
        return max_wave_speed(state, g=self.gravity)
