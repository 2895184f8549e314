"""
Moving-water well-balanced scheme.

Cell averages are reconstructed with WENO5, turned into equilibrium
variables V = (m, E) at the interfaces and limited toward the reference
equilibrium of each cell. Interface states are rebuilt from V at the common
bottom min(b-, b+), and the bottom source is assembled from the reference
equilibrium so that flux and source cancel exactly whenever the data lie on
one moving-water steady state.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union
import logging

import numpy as np

from .config import GRAVITY
from .core import Bathymetry, as_stack
from .equilibrium import (EquilibriumVariables, FlowRegimeBranch, branch_from_froude, energy,
                          momentum_flux, reference_equilibrium_array, solve_height_array)
from .scheme_still import BoundaryFill, max_wave_speed, physical_flux, wave_speed
from .utils import check_positive_depth
from .weno import cell_windows, weno5_reconstruct

logger = logging.getLogger(__name__)

BranchLike = Union[FlowRegimeBranch, Tuple[FlowRegimeBranch, FlowRegimeBranch]]


@dataclass
class LimitedReconstruction:
    """
    Limited equilibrium variables of the reconstructed cells.

    Trace arrays (`*_right` at x_{i+1/2}, `*_left` at x_{i-1/2}) cover the
    interior cells plus one ghost on each side; `*_center` covers the
    interior cells. Interface states are filled in for the N + 1 interior
    interfaces once they are computed.
    """
    m_right: np.ndarray
    E_right: np.ndarray
    m_left: np.ndarray
    E_left: np.ndarray
    m_center: np.ndarray
    E_center: np.ndarray
    b_right: np.ndarray
    b_left: np.ndarray
    b_center: np.ndarray
    b_hat: Optional[np.ndarray] = None
    u_hat_minus: Optional[np.ndarray] = None
    u_hat_plus: Optional[np.ndarray] = None


def _clip_toward(values, centre, spread):
    return centre + np.clip(values - centre, -spread, spread)


def _reference_spread(reference: np.ndarray, first: int, last: int):
    centre = reference[first:last]
    spread = np.maximum(np.abs(reference[first + 1:last + 1] - centre),
                        np.abs(centre - reference[first - 1:last - 1]))
    return centre, spread


def limited_equilibrium_reconstruction(state_ext: np.ndarray, bathymetry: Bathymetry,
                                       m_ref: np.ndarray, E_ref: np.ndarray,
                                       limit: bool = True, g: float = GRAVITY) -> LimitedReconstruction:
    """
    Equilibrium variables at cell traces and cell centers, limited toward the
    cell references.

    Each component is clipped to within the larger of the two jumps between
    the cell's reference value and its neighbours', so data lying on one
    equilibrium reproduce that equilibrium exactly.

    Args:
        state_ext: (2, N + 2*ghosts) ghost-filled cell averages
        m_ref, E_ref: reference equilibrium of every extended cell
        limit: False returns the raw transformed reconstruction
    """
    n = bathymetry.grid.n_cells
    ng = bathymetry.n_ghost
    first, last = ng - 1, ng + n + 1
    inner = slice(ng, ng + n)

    h_ext, m_ext = state_ext
    h_right, h_left = weno5_reconstruct(cell_windows(h_ext, first, last))
    m_right, m_left = weno5_reconstruct(cell_windows(m_ext, first, last))
    check_positive_depth(h_right, what='reconstructed depth', offset=first - ng)
    check_positive_depth(h_left, what='reconstructed depth', offset=first - ng)

    b_right = bathymetry.b_interfaces_ext[first + 1:last + 1]
    b_left = bathymetry.b_interfaces_ext[first:last]
    E_right = energy(h_right, m_right, b_right, g)
    E_left = energy(h_left, m_left, b_left, g)

    # fourth-order point value at the cell center
    h_center = (-h_ext[ng - 1:ng + n - 1] + 26.0 * h_ext[inner] - h_ext[ng + 1:ng + n + 1]) / 24.0
    m_center = (-m_ext[ng - 1:ng + n - 1] + 26.0 * m_ext[inner] - m_ext[ng + 1:ng + n + 1]) / 24.0
    check_positive_depth(h_center, what='cell-center depth')
    b_center = bathymetry.b_centers_ext[inner]
    E_center = energy(h_center, m_center, b_center, g)

    if limit:
        m_bar, m_spread = _reference_spread(m_ref, first, last)
        E_bar, E_spread = _reference_spread(E_ref, first, last)
        m_right, m_left = _clip_toward(m_right, m_bar, m_spread), _clip_toward(m_left, m_bar, m_spread)
        E_right, E_left = _clip_toward(E_right, E_bar, E_spread), _clip_toward(E_left, E_bar, E_spread)

        m_bar, m_spread = _reference_spread(m_ref, ng, ng + n)
        E_bar, E_spread = _reference_spread(E_ref, ng, ng + n)
        m_center = _clip_toward(m_center, m_bar, m_spread)
        E_center = _clip_toward(E_center, E_bar, E_spread)

    return LimitedReconstruction(m_right, E_right, m_left, E_left, m_center, E_center,
                                 b_right, b_left, b_center)


def interface_states_array(m_minus, E_minus, m_plus, E_plus, b_minus, b_plus,
                           sup_minus, sup_plus, g: float = GRAVITY):
    """
    Conserved states on both sides of each interface at b_hat = min(b-, b+).

    Sides whose energy is not realizable at b_hat fall back to their own
    bottom value, then to the critical depth.

    Returns:
        (u_hat_minus, u_hat_plus, b_hat, number of fallbacks)
    """
    b_hat = np.minimum(b_minus, b_plus)
    h_minus, ok_minus = solve_height_array(m_minus, E_minus, b_hat, sup_minus, g)
    h_plus, ok_plus = solve_height_array(m_plus, E_plus, b_hat, sup_plus, g)

    fallbacks = int(np.count_nonzero(~ok_minus) + np.count_nonzero(~ok_plus))
    if fallbacks:
        own_minus, _ = solve_height_array(m_minus, E_minus, b_minus, sup_minus, g, clamp=True)
        own_plus, _ = solve_height_array(m_plus, E_plus, b_plus, sup_plus, g, clamp=True)
        h_minus = np.where(ok_minus, h_minus, own_minus)
        h_plus = np.where(ok_plus, h_plus, own_plus)

    check_positive_depth(h_minus, what='interface depth')
    check_positive_depth(h_plus, what='interface depth')
    u_minus = np.stack([h_minus, np.broadcast_to(m_minus, h_minus.shape)])
    u_plus = np.stack([h_plus, np.broadcast_to(m_plus, h_plus.shape)])
    return u_minus, u_plus, b_hat, fallbacks


def interface_states(v_minus: EquilibriumVariables, v_plus: EquilibriumVariables,
                     b_minus: float, b_plus: float, branch: BranchLike,
                     g: float = GRAVITY) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """(U_hat-, U_hat+) for one interface; `branch` may be one branch or a (left, right) pair."""
    branch_minus, branch_plus = branch if isinstance(branch, tuple) else (branch, branch)
    u_minus, u_plus, _, fallbacks = interface_states_array(
        v_minus.m, v_minus.E, v_plus.m, v_plus.E, b_minus, b_plus,
        branch_minus.is_supercritical, branch_plus.is_supercritical, g)
    if fallbacks:
        logger.warning(f"Interface state not realizable at b_hat={min(b_minus, b_plus)}, "
                       f"used the own-side bottom instead")
    return (float(u_minus[0]), float(u_minus[1])), (float(u_plus[0]), float(u_plus[1]))


def source_interior_array(h_left, m_left, h_right, m_right, b_left, b_right,
                          m_ref, E_ref, sup, g: float = GRAVITY):
    """
    Momentum source between two points of one cell.

    Equals -g/2 (h_L + h_R)(b_R - b_L) plus the correction built from the
    reference equilibrium h* = h(m_ref, E_ref, b):
        [f2(U*_R) - f2(U*_L)] + g/2 (h*_L + h*_R)(b_R - b_L)
    which makes the result exactly f2(U_R) - f2(U_L) for data on the
    reference equilibrium.

    Returns:
        (source, number of points where the reference had to be clamped)
    """
    star_left, ok_left = solve_height_array(m_ref, E_ref, b_left, sup, g, clamp=True)
    star_right, ok_right = solve_height_array(m_ref, E_ref, b_right, sup, g, clamp=True)
    clamped = int(np.count_nonzero(~ok_left) + np.count_nonzero(~ok_right))

    source = (momentum_flux(star_right, m_ref, g) - momentum_flux(star_left, m_ref, g)
              - 0.5 * g * ((h_left + h_right) - (star_left + star_right)) * (b_right - b_left))
    return source, clamped


def source_interior(u_left: Tuple[float, float], u_right: Tuple[float, float], b_left: float,
                    b_right: float, v_ref: EquilibriumVariables, branch: FlowRegimeBranch,
                    g: float = GRAVITY) -> float:
    source, _ = source_interior_array(u_left[0], u_left[1], u_right[0], u_right[1], b_left, b_right,
                                      v_ref.m, v_ref.E, branch.is_supercritical, g)
    return float(source)


def local_lf_flux(u_minus: np.ndarray, u_plus: np.ndarray, g: float = GRAVITY) -> np.ndarray:
    alpha = np.maximum(wave_speed(u_minus[0], u_minus[1], g), wave_speed(u_plus[0], u_plus[1], g))
    return 0.5 * (physical_flux(u_minus[0], u_minus[1], g) + physical_flux(u_plus[0], u_plus[1], g)
                  - alpha * (u_plus - u_minus))


@dataclass
class CellTraces:
    """Conserved values U(V~, b) at both traces and the center of each interior cell."""
    h_left: np.ndarray
    m_left: np.ndarray
    h_right: np.ndarray
    m_right: np.ndarray
    h_center: np.ndarray
    m_center: np.ndarray
    clamped: int = 0


def cell_traces(recon: LimitedReconstruction, sup: np.ndarray, g: float = GRAVITY) -> CellTraces:
    n = sup.size
    inner = slice(1, n + 1)

    m_left, m_right = recon.m_left[inner], recon.m_right[inner]
    h_left, ok_left = solve_height_array(m_left, recon.E_left[inner], recon.b_left[inner], sup, g, clamp=True)
    h_right, ok_right = solve_height_array(m_right, recon.E_right[inner], recon.b_right[inner], sup, g,
                                           clamp=True)
    h_center, ok_center = solve_height_array(recon.m_center, recon.E_center, recon.b_center, sup, g,
                                             clamp=True)
    clamped = int(np.count_nonzero(~ok_left) + np.count_nonzero(~ok_right) + np.count_nonzero(~ok_center))
    return CellTraces(h_left, m_left, h_right, m_right, h_center, recon.m_center, clamped)


def source_total(recon: LimitedReconstruction, traces: CellTraces, m_ref: np.ndarray,
                 E_ref: np.ndarray, sup: np.ndarray, g: float = GRAVITY) -> Tuple[np.ndarray, int]:
    """
    Cell source (2, N): Richardson combination (4 S2 - S1)/3 of the whole-cell
    and two-half-cell interior sources, plus the flux corrections
    f(U~+_{i-1/2}) - f(U_hat+_{i-1/2}) + f(U_hat-_{i+1/2}) - f(U~-_{i+1/2})
    that move the interior source from the trace bottoms onto b_hat.
    """
    n = sup.size
    inner = slice(1, n + 1)
    b_left, b_right, b_center = recon.b_left[inner], recon.b_right[inner], recon.b_center

    whole, c1 = source_interior_array(traces.h_left, traces.m_left, traces.h_right, traces.m_right,
                                      b_left, b_right, m_ref, E_ref, sup, g)
    first_half, c2 = source_interior_array(traces.h_left, traces.m_left, traces.h_center, traces.m_center,
                                           b_left, b_center, m_ref, E_ref, sup, g)
    second_half, c3 = source_interior_array(traces.h_center, traces.m_center, traces.h_right,
                                            traces.m_right, b_center, b_right, m_ref, E_ref, sup, g)

    source = np.zeros((2, n))
    source[1] = (4.0 * (first_half + second_half) - whole) / 3.0

    source += (physical_flux(traces.h_left, traces.m_left, g)
               - physical_flux(recon.u_hat_plus[0, :-1], recon.u_hat_plus[1, :-1], g)
               + physical_flux(recon.u_hat_minus[0, 1:], recon.u_hat_minus[1, 1:], g)
               - physical_flux(traces.h_right, traces.m_right, g))
    return source, c1 + c2 + c3


class MovingWaterScheme:
    """
    Moving-water well-balanced scheme bound to one bathymetry.

    Each interior cell carries a flow branch (supercritical flag) that only
    changes when the cell's Froude number leaves a small band around 1;
    ghost cells copy their interior neighbour.
    """

    name = 'moving'

    def __init__(self, bathymetry: Bathymetry, branches: Optional[np.ndarray] = None,
                 gravity: float = GRAVITY):
        n = bathymetry.grid.n_cells
        self.bathymetry = bathymetry
        self.gravity = gravity
        self.branches = np.zeros(n, dtype=bool) if branches is None else np.asarray(branches, dtype=bool).copy()
        if self.branches.shape != (n,):
            raise ValueError(f"Expected {n} branch flags, got shape {self.branches.shape}")

        self.diagnostics = {'rhs_evaluations': 0, 'reference_fallbacks': 0,
                            'interface_fallbacks': 0, 'source_clamps': 0}
        self.last_boundary_flux = np.zeros(2)
        self._warned = set()

    def _note(self, key: str, count: int, message: str):
        if not count:
            return
        self.diagnostics[key] += count
        logger.debug(f"{message}: {count}")
        if key not in self._warned:
            self._warned.add(key)
            logger.warning(f"{message} ({count} this evaluation, further occurrences logged at DEBUG)")

    def extended_branches(self) -> np.ndarray:
        ng = self.bathymetry.n_ghost
        return np.concatenate([np.repeat(self.branches[0], ng), self.branches,
                               np.repeat(self.branches[-1], ng)])

    def reference_states(self, state_ext: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Reference (m, E) of every extended cell, updating the branch flags first."""
        ng = self.bathymetry.n_ghost
        n = self.bathymetry.grid.n_cells
        h_ext, m_ext = state_ext

        inner = slice(ng, ng + n)
        self.branches = branch_from_froude(h_ext[inner], m_ext[inner], self.branches, self.gravity).astype(bool)

        E_ref, ok = reference_equilibrium_array(h_ext, m_ext, self.bathymetry.b_quad, self.extended_branches(),
                                                self.bathymetry.b_centers_ext, self.gravity)
        used = ok[ng - 2:ng + n + 2]
        self._note('reference_fallbacks', int(np.count_nonzero(~used)),
                   "No realizable reference equilibrium, used the pointwise transform")
        return m_ext.copy(), E_ref

    def reconstruct(self, state, boundary_fill: BoundaryFill) -> Tuple[LimitedReconstruction, np.ndarray, np.ndarray]:
        """
        Limited reconstruction with interface states.

        Returns:
            (LimitedReconstruction, m_ref, E_ref) with references on the extended grid
        """
        state_ext = boundary_fill(as_stack(state))
        m_ref, E_ref = self.reference_states(state_ext)
        recon = limited_equilibrium_reconstruction(state_ext, self.bathymetry, m_ref, E_ref, True, self.gravity)

        sup = self.extended_branches()
        ng = self.bathymetry.n_ghost
        n = self.bathymetry.grid.n_cells
        u_minus, u_plus, b_hat, fallbacks = interface_states_array(
            recon.m_right[:-1], recon.E_right[:-1], recon.m_left[1:], recon.E_left[1:],
            recon.b_right[:-1], recon.b_left[1:], sup[ng - 1:ng + n], sup[ng:ng + n + 1], self.gravity)
        self._note('interface_fallbacks', fallbacks, "Interface state not realizable at min(b-, b+)")

        recon.b_hat, recon.u_hat_minus, recon.u_hat_plus = b_hat, u_minus, u_plus
        return recon, m_ref, E_ref

    def rhs(self, state, boundary_fill: BoundaryFill) -> np.ndarray:
        self.diagnostics['rhs_evaluations'] += 1
        ng = self.bathymetry.n_ghost
        n = self.bathymetry.grid.n_cells

        recon, m_ref, E_ref = self.reconstruct(state, boundary_fill)
        flux = local_lf_flux(recon.u_hat_minus, recon.u_hat_plus, self.gravity)

        traces = cell_traces(recon, self.branches, self.gravity)
        inner = slice(ng, ng + n)
        source, clamped = source_total(recon, traces, m_ref[inner], E_ref[inner], self.branches, self.gravity)
        self._note('source_clamps', clamped + traces.clamped,
                   "Equilibrium not realizable inside a cell, clamped to critical depth")

        self.last_boundary_flux = flux[0, [0, -1]]
        return (-(flux[:, 1:] - flux[:, :-1]) + source) / self.bathymetry.grid.dx

    def max_speed(self, state) -> float:
        return max_wave_speed(state, g=self.gravity)


def rhs_moving(state, bathymetry: Bathymetry, boundary_fill: BoundaryFill,
               branches: Optional[np.ndarray] = None, g: float = GRAVITY) -> np.ndarray:
    """
    Semi-discrete right-hand side dU/dt of the moving-water scheme.

    Args:
        state: interior cell averages, ConservedState or (2, N) array
        bathymetry: bottom sampled on the ghost-extended grid
        boundary_fill: maps (2, N) interior values to the extended array
        branches: supercritical flags per cell, all subcritical by default

    Returns:
        (2, N) array
    """
    return MovingWaterScheme(bathymetry, branches, g).rhs(state, boundary_fill)
