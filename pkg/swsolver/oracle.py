"""First-order reference scheme used to cross-check the well-balanced schemes."""

import logging

import numpy as np

from .config import GRAVITY
from .core import Bathymetry, as_stack
from .scheme_moving import local_lf_flux
from .scheme_still import BoundaryFill, max_wave_speed

logger = logging.getLogger(__name__)


def _assemble_first_order(state, bathymetry: Bathymetry, boundary_fill: BoundaryFill, g: float):
    n = bathymetry.grid.n_cells
    ng = bathymetry.n_ghost
    dx = bathymetry.grid.dx

    state_ext = boundary_fill(as_stack(state))
    flux = local_lf_flux(state_ext[:, ng - 1:ng + n], state_ext[:, ng:ng + n + 1], g)

    b = bathymetry.b_centers_ext
    source = np.zeros((2, n))
    source[1] = -g * state_ext[0, ng:ng + n] * (b[ng + 1:ng + n + 1] - b[ng - 1:ng + n - 1]) / (2.0 * dx)
    return -(flux[:, 1:] - flux[:, :-1]) / dx + source, flux


def oracle_first_order(state, bathymetry: Bathymetry, boundary_fill: BoundaryFill,
                       g: float = GRAVITY) -> np.ndarray:
    """
    Piecewise-constant states, local Lax-Friedrichs flux and the centered
    source -g h_i (b_{i+1} - b_{i-1}) / (2 dx). Not well balanced.
    """
    rhs, _ = _assemble_first_order(state, bathymetry, boundary_fill, g)
    return rhs


class FirstOrderScheme:

    name = 'oracle1'

    def __init__(self, bathymetry: Bathymetry, gravity: float = GRAVITY):
        self.bathymetry = bathymetry
        self.gravity = gravity
        self.diagnostics = {'rhs_evaluations': 0}
        self.last_boundary_flux = np.zeros(2)

    def rhs(self, state, boundary_fill: BoundaryFill) -> np.ndarray:
        self.diagnostics['rhs_evaluations'] += 1
        rhs, flux = _assemble_first_order(state, self.bathymetry, boundary_fill, self.gravity)
        self.last_boundary_flux = flux[0, [0, -1]]
        return rhs

    def max_speed(self, state) -> float:
        return max_wave_speed(state, g=self.gravity)
