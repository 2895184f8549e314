"""
Moving-water equilibrium mathematics.

The equilibrium variables are V = (m, E) with discharge m = hu and specific
energy E = u^2/2 + g(h + b). For fixed (m, E, b) the Bernoulli relation
m^2/(2h^2) + g(h + b) = E has up to two positive roots separated by the
critical depth h_c = (m^2/g)^(1/3): the subcritical (deep) root and the
supercritical (shallow) one.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple
import logging

import numpy as np
from scipy.optimize import brentq

from .config import GRAVITY, CRITICAL_RTOL, FROUDE_TIE, MAX_NEWTON_ITER
from .core import Bathymetry, BottomProfile, CaseSpec, ConservedState, Grid, quadrature_average
from .utils import DomainError, NoRootError, SolverError

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class FlowRegimeBranch(Enum):
    SUBCRITICAL = 'subcritical'
    SUPERCRITICAL = 'supercritical'

    @property
    def is_supercritical(self) -> bool:
        return self is FlowRegimeBranch.SUPERCRITICAL

    @classmethod
    def from_flag(cls, supercritical: bool) -> 'FlowRegimeBranch':
        return cls.SUPERCRITICAL if supercritical else cls.SUBCRITICAL


@dataclass(frozen=True)
class EquilibriumVariables:
    m: float
    E: float

    def realizable(self, b: float, g: float = GRAVITY) -> bool:
        """True when some positive depth satisfies the Bernoulli relation at b."""
        if self.m == 0.0:
            return self.E - g * b > 0.0
        return self.E - minimum_energy(self.m, b, g) >= -CRITICAL_RTOL * max(1.0, abs(self.E))


def _require_positive(h, what: str = 'depth'):
    if np.any(~(np.asarray(h) > 0.0)):
        raise DomainError(f"{what} must be positive, got {h!r}")


def energy(h, m, b, g: float = GRAVITY):
    _require_positive(h)
    return m * m / (2.0 * h * h) + g * (h + b)


def momentum_flux(h, m, g: float = GRAVITY):
    return m * m / h + 0.5 * g * h * h


def froude(h, m, g: float = GRAVITY):
    _require_positive(h)
    return np.abs(m) / (h * np.sqrt(g * h))


def critical_depth(m, g: float = GRAVITY):
    return np.cbrt(np.asarray(m, dtype=float) ** 2 / g)


def minimum_energy(m, b, g: float = GRAVITY):
    """Smallest energy admitting a root at elevation b (reached at h = h_c)."""
    return 1.5 * g * critical_depth(m, g) + g * b


def solve_height_array(m, E, b, supercritical, g: float = GRAVITY,
                       clamp: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Depth on the requested branch for arrays of (m, E, b).

    Newton's method started on the far side of the root (above it on the
    subcritical branch, below it on the supercritical one) converges
    monotonically because the Bernoulli function is convex in h. Every entry
    iterates independently until its own step stalls, so the result for one
    entry never depends on its neighbours in the array.

    Args:
        m, E, b: broadcastable arrays
        supercritical: boolean array selecting the shallow root
        clamp: return h_c instead of NaN where no root exists

    Returns:
        (h, ok) where ok flags entries that have a genuine root
    """
    m, E, b, sup = np.broadcast_arrays(np.asarray(m, dtype=float), np.asarray(E, dtype=float),
                                       np.asarray(b, dtype=float), np.asarray(supercritical, dtype=bool))
    shape = m.shape
    m, E, b, sup = m.ravel(), E.ravel(), b.ravel(), sup.ravel()

    h = np.full(m.size, np.nan)
    ok = np.zeros(m.size, dtype=bool)

    m2 = m * m
    hc = np.cbrt(m2 / g)
    excess = E - (1.5 * g * hc + g * b)
    tol = CRITICAL_RTOL * np.maximum(1.0, np.abs(E))
    finite = np.isfinite(E) & np.isfinite(m) & np.isfinite(b)

    # still water has the single root E/g - b
    still = finite & (m == 0.0)
    still_ok = still & ~sup & (E / g - b > 0.0)
    h[still_ok] = E[still_ok] / g - b[still_ok]
    ok |= still_ok

    moving = finite & (m != 0.0)
    snap = moving & (np.abs(excess) <= tol)
    h[snap] = hc[snap]
    ok |= snap

    newton = moving & (excess > tol)
    idx = np.flatnonzero(newton)
    if idx.size:
        h[idx] = _newton_depth(m2[idx], E[idx], b[idx], hc[idx], sup[idx], g)
        ok[idx] = True

    if clamp:
        missing = ~ok & finite & (m != 0.0)
        h[missing] = hc[missing]

    return h.reshape(shape), ok.reshape(shape)


def _newton_depth(m2, E, b, hc, sup, g):

    # subcritical start: E/g - b lies above the root; supercritical start:
    # |m|/sqrt(2(E - g b)) lies below it
    hh = np.where(sup, np.sqrt(m2 / (2.0 * (E - g * b))), E / g - b)
    active = np.ones(hh.size, dtype=bool)

    for _ in range(MAX_NEWTON_ITER):
        ia = np.flatnonzero(active)
        if ia.size == 0:
            break
        h_a = hh[ia]
        f = m2[ia] / (2.0 * h_a * h_a) + g * (h_a + b[ia]) - E[ia]
        df = g - m2[ia] / (h_a * h_a * h_a)
        h_new = h_a - f / df
        # never cross the critical depth
        h_new = np.where(sup[ia], np.minimum(h_new, hc[ia]), np.maximum(h_new, hc[ia]))
        done = ~(np.abs(h_new - h_a) > 2.0 * _EPS * h_a)
        hh[ia] = h_new
        active[ia[done]] = False
    else:
        logger.warning(f"Depth iteration hit {MAX_NEWTON_ITER} steps on {int(active.sum())} entries")

    return hh


def solve_height(v: EquilibriumVariables, b: float, branch: FlowRegimeBranch,
                 g: float = GRAVITY) -> float:
    """Depth h on `branch` with energy(h, v.m, b) = v.E."""
    if v.m == 0.0 and branch.is_supercritical:
        raise NoRootError("Supercritical branch is undefined for still water (m = 0)",
                          deficit=0.0, branch=branch)

    h, ok = solve_height_array(v.m, v.E, b, branch.is_supercritical, g)
    if not bool(ok):
        floor = g * b if v.m == 0.0 else float(minimum_energy(v.m, b, g))
        deficit = floor - v.E
        raise NoRootError(f"No root on the {branch.value} branch for m={v.m}, E={v.E}, b={b} "
                          f"(energy deficit {deficit:.6g})", deficit=deficit, branch=branch)
    return float(h)


def conservative_from_equilibrium(v: EquilibriumVariables, b: float, branch: FlowRegimeBranch,
                                  g: float = GRAVITY) -> Tuple[float, float]:
    return solve_height(v, b, branch, g), v.m


def equilibrium_from_conservative(u: Tuple[float, float], b: float,
                                  g: float = GRAVITY) -> EquilibriumVariables:
    h, hu = u
    return EquilibriumVariables(float(hu), float(energy(h, hu, b, g)))


def branch_from_froude(h, m, previous, g: float = GRAVITY):
    """
    Supercritical flags from the Froude number of (h, m); entries within the
    tie band around Fr = 1 keep their previous flag.
    """
    fr = np.abs(m) / (h * np.sqrt(g * h))
    return np.where(fr > 1.0 + FROUDE_TIE, True, np.where(fr < 1.0 - FROUDE_TIE, False, previous))


def reference_equilibrium_array(h_bar, m_bar, b_quad, supercritical, b_center,
                                g: float = GRAVITY) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cell-wise energies E such that the quadrature average of the equilibrium
    depth h(m_bar, E, b(x)) reproduces h_bar.

    The discharge needs no solve (the cell average of hu is m itself), so only
    a scalar equation in E remains per cell; it is monotone on a fixed branch
    and solved by bracketed Newton with bisection fallback.

    Args:
        h_bar, m_bar: cell averages, shape (n,)
        b_quad: bottom at the Gauss points, shape (n, q)
        supercritical: branch flags, shape (n,)
        b_center: bottom at the cell centers, used by the fallback

    Returns:
        (E, ok) where ok is False on cells that fell back to the pointwise
        transform energy(h_bar, m_bar, b_center)
    """
    h_bar = np.asarray(h_bar, dtype=float)
    m_bar = np.asarray(m_bar, dtype=float)
    sup = np.asarray(supercritical, dtype=bool)

    E = np.empty(h_bar.size)
    ok = np.zeros(h_bar.size, dtype=bool)

    still = m_bar == 0.0
    if np.any(still):
        E[still] = g * (h_bar[still] + quadrature_average(b_quad[still]))
        ok[still] = ~sup[still]

    idx = np.flatnonzero(~still)
    if idx.size:
        E[idx], ok[idx] = _solve_reference_energy(h_bar[idx], m_bar[idx], b_quad[idx], sup[idx], g)

    failed = ~ok
    if np.any(failed):
        E[failed] = energy(h_bar[failed], m_bar[failed], b_center[failed], g)
    return E, ok


def _solve_reference_energy(h_bar, m, b_quad, sup, g):

    m2 = m * m
    b_top = b_quad.max(axis=1)
    sign = np.where(sup, -1.0, 1.0)

    lo = 1.5 * g * np.cbrt(m2 / g) + g * b_top
    hi = np.maximum(m2 / (2.0 * h_bar * h_bar) + g * (h_bar + b_top), lo)

    def residual(E_cells, rows):
        h_q, _ = solve_height_array(m[rows, None], E_cells[:, None], b_quad[rows], sup[rows, None],
                                    g, clamp=True)
        slope = 1.0 / (g - m2[rows, None] / h_q ** 3)
        return quadrature_average(h_q) - h_bar[rows], quadrature_average(slope)

    # a root exists only if the residual at the lowest admissible energy has the right sign
    rows_all = np.arange(h_bar.size)
    phi_lo, _ = residual(lo, rows_all)
    exists = sign * phi_lo <= 4.0 * _EPS * h_bar

    E = np.clip(m2 / (2.0 * h_bar ** 2) + g * (h_bar + quadrature_average(b_quad)), lo, hi)
    active = exists.copy()

    for _ in range(MAX_NEWTON_ITER):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break

        E_a = E[rows]
        phi, dphi = residual(E_a, rows)
        psi = sign[rows] * phi

        below = psi < 0.0
        lo[rows] = np.where(below, E_a, lo[rows])
        hi[rows] = np.where(below, hi[rows], E_a)

        with np.errstate(divide='ignore', invalid='ignore'):
            E_new = E_a - phi / dphi
        bad = ~np.isfinite(E_new) | (E_new <= lo[rows]) | (E_new >= hi[rows]) | (E_new == E_a)
        E_new = np.where(bad, 0.5 * (lo[rows] + hi[rows]), E_new)

        done = (np.abs(phi) <= 2.0 * _EPS * h_bar[rows]) | \
               (hi[rows] - lo[rows] <= 2.0 * _EPS * np.abs(E_a))
        E[rows] = np.where(done, E_a, E_new)
        active[rows[done]] = False
    else:
        logger.warning(f"Reference-equilibrium iteration hit {MAX_NEWTON_ITER} steps")

    return E, exists


def reference_equilibrium(u_bar: Tuple[float, float], cell: int, bathymetry: Bathymetry,
                          branch_hint: FlowRegimeBranch = FlowRegimeBranch.SUBCRITICAL,
                          g: float = GRAVITY) -> EquilibriumVariables:
    """
    Local equilibrium whose quadrature cell average equals u_bar on `cell`.

    Falls back to the pointwise transform at the cell center (with a logged
    warning) when no energy on the chosen branch is realizable over the cell.
    """
    h_bar, m_bar = (float(u) for u in u_bar)
    _require_positive(h_bar)

    k = cell + bathymetry.n_ghost
    sup = bool(branch_from_froude(h_bar, m_bar, branch_hint.is_supercritical, g))
    E, ok = reference_equilibrium_array(np.array([h_bar]), np.array([m_bar]),
                                        bathymetry.b_quad[k:k + 1], np.array([sup]),
                                        bathymetry.b_centers_ext[k:k + 1], g)
    if not ok[0]:
        logger.warning(f"Cell {cell}: no realizable reference equilibrium on the "
                       f"{FlowRegimeBranch.from_flag(sup).value} branch, using the pointwise transform")
    return EquilibriumVariables(m_bar, float(E[0]))


def shock_position(m: float, E_up: float, E_down: float, bottom: BottomProfile,
                   interval: Tuple[float, float] = (10.0, 12.0), g: float = GRAVITY,
                   samples: int = 400) -> float:
    """
    Position of a stationary hydraulic jump from supercritical flow with
    energy E_up to subcritical flow with energy E_down.

    The jump sits where the momentum flux m^2/h + g h^2/2 of both roots
    agrees (mass flux m is continuous by construction).
    """
    if E_up == E_down:
        raise DomainError("A stationary jump needs different upstream and downstream energies")

    def mismatch(x):
        b = bottom.elevation(x)
        h_sup, ok_sup = solve_height_array(m, E_up, b, True, g)
        h_sub, ok_sub = solve_height_array(m, E_down, b, False, g)
        value = momentum_flux(h_sup, m, g) - momentum_flux(h_sub, m, g)
        return np.where(ok_sup & ok_sub & (h_sub > h_sup), value, np.nan)

    xs = np.linspace(interval[0], interval[1], samples + 1)
    values = mismatch(xs)

    for k in range(samples):
        a, c = values[k], values[k + 1]
        if np.isfinite(a) and np.isfinite(c) and a * c <= 0.0:
            if a == 0.0:
                return float(xs[k])
            x_s = brentq(lambda x: float(mismatch(x)), xs[k], xs[k + 1], xtol=1e-14, rtol=4 * _EPS)
            logger.debug(f"Shock located at x={x_s:.15f}")
            return float(x_s)

    raise NoRootError(f"Momentum-flux mismatch has no sign change on [{interval[0]}, {interval[1]}]")


@dataclass
class SteadyProfile:
    """Background steady state: constant discharge, piecewise constant energy."""
    discharge: float
    energy_upstream: float
    bottom: BottomProfile
    gravity: float = GRAVITY
    energy_downstream: Optional[float] = None
    crest: Optional[float] = None
    transcritical: bool = False
    shock: Optional[float] = None

    def energy_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.shock is None:
            return np.full(x.shape, self.energy_upstream)
        return np.where(x <= self.shock, self.energy_upstream, self.energy_downstream)

    def supercritical_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.transcritical:
            return np.zeros(x.shape, dtype=bool)
        upper = np.inf if self.shock is None else self.shock
        return (x > self.crest) & (x <= upper)

    def depth(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h, ok = solve_height_array(self.discharge, self.energy_at(x), self.bottom.elevation(x),
                                   self.supercritical_at(x), self.gravity)
        if not np.all(ok):
            first = np.flatnonzero(~np.ravel(ok))[0]
            raise NoRootError(f"Background state is not realizable at x={np.ravel(x)[first]}")
        return h

    def cell_averages(self, grid: Grid, n_ghost: int = 0) -> ConservedState:
        h = quadrature_average(self.depth(grid.quadrature_points(n_ghost)))
        return ConservedState(h, np.full(h.shape, self.discharge))

    def cell_branches(self, grid: Grid, n_ghost: int = 0) -> np.ndarray:
        return self.supercritical_at(grid.extended_centers(n_ghost))

    def cell_energies(self, grid: Grid) -> np.ndarray:
        return self.energy_at(grid.centers)

    def rankine_hugoniot_residual(self) -> float:
        if self.shock is None:
            return 0.0
        b = self.bottom.elevation(self.shock)
        h_sup = solve_height(EquilibriumVariables(self.discharge, self.energy_upstream), b,
                             FlowRegimeBranch.SUPERCRITICAL, self.gravity)
        h_sub = solve_height(EquilibriumVariables(self.discharge, self.energy_downstream), b,
                             FlowRegimeBranch.SUBCRITICAL, self.gravity)
        return float(abs(momentum_flux(h_sup, self.discharge, self.gravity)
                         - momentum_flux(h_sub, self.discharge, self.gravity)))


def crest_critical_energy(m: float, bottom: BottomProfile, g: float = GRAVITY) -> float:
    if bottom.crest is None:
        raise SolverError(f"Bathymetry '{bottom.name}' has no crest")
    return float(minimum_energy(m, bottom.elevation(bottom.crest), g))


def steady_profile(case: CaseSpec, grid: Optional[Grid] = None) -> SteadyProfile:
    """
    Background equilibrium of a benchmark case.

    Regimes:
        subcritical   -- constant (m, E) on the subcritical branch
        transcritical -- crest-critical energy, supercritical past the crest
        shock         -- as transcritical up to a stationary jump, then the
                         downstream energy on the subcritical branch
    """
    grid = grid or case.grid()
    bottom = case.bottom()
    g = case.gravity
    m = case.discharge

    if case.regime == 'subcritical':
        profile = SteadyProfile(m, case.energy_upstream, bottom, g)

    elif case.regime == 'transcritical':
        e_star = crest_critical_energy(m, bottom, g)
        logger.info(f"Case {case.tag}: crest-critical energy {e_star:.10g} "
                    f"(boundary data m={m}, h_out={case.h_out})")
        profile = SteadyProfile(m, e_star, bottom, g, crest=bottom.crest, transcritical=True)

    elif case.regime == 'shock':
        x_s = shock_position(m, case.energy_upstream, case.energy_downstream, bottom,
                             interval=(bottom.crest, case.x_max), g=g)
        profile = SteadyProfile(m, case.energy_upstream, bottom, g,
                                energy_downstream=case.energy_downstream,
                                crest=bottom.crest, transcritical=True, shock=x_s)
    else:
        raise SolverError(f"Unknown flow regime '{case.regime}'")

    _check_realizable(profile, grid)
    return profile


def _check_realizable(profile: SteadyProfile, grid: Grid):

    x = grid.quadrature_points()
    _, ok = solve_height_array(profile.discharge, profile.energy_at(x), profile.bottom.elevation(x),
                               profile.supercritical_at(x), profile.gravity)
    bad_cells = np.flatnonzero(~np.all(ok, axis=1))
    if bad_cells.size:
        cell = int(bad_cells[0])
        raise NoRootError(f"Background state is not realizable in cell {cell} "
                          f"(x={grid.centers[cell]:.6g})")
