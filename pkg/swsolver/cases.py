"""
Benchmark catalogue: flows over the parabolic bump on [0, 25].

    a       subcritical flow, m = 4.42, E = 22.06605
    b       transcritical flow without shock, m = 1.53
    c       transcritical flow with a stationary shock, m = 0.18
    lake    lake at rest with surface 1.0
    smooth  case-a flow over a Gaussian bottom with a smooth perturbation,
            used for refinement studies
"""

from typing import Dict, Optional
import logging

from .config import GRAVITY
from .core import CaseSpec
from .equilibrium import energy
from .utils import ConfigError

logger = logging.getLogger(__name__)

LAKE_SURFACE = 1.0


def _catalogue(g: float = GRAVITY) -> Dict[str, CaseSpec]:
    return {
        'a': CaseSpec(tag='a', regime='subcritical', discharge=4.42, energy_upstream=22.06605,
                      m_in=4.42, h_out=2.0, t_end=1.5, gravity=g),
        # the boundary energy is not realizable over the crest; the profile
        # uses the crest-critical energy instead
        'b': CaseSpec(tag='b', regime='transcritical', discharge=1.53,
                      energy_upstream=float(energy(0.66, 1.53, 0.0, g)),
                      m_in=1.53, h_out=0.66, t_end=1.5, gravity=g),
        'c': CaseSpec(tag='c', regime='shock', discharge=0.18,
                      energy_upstream=1.5 * (g * 0.18) ** (2.0 / 3.0) + g * 0.2,
                      energy_downstream=float(energy(0.33, 0.18, 0.0, g)),
                      m_in=0.18, h_out=0.33, n_cells=200, t_end=3.0, gravity=g),
        'lake': CaseSpec(tag='lake', regime='subcritical', discharge=0.0, energy_upstream=g * LAKE_SURFACE,
                         m_in=0.0, h_out=LAKE_SURFACE, t_end=1.5, gravity=g),
        'smooth': CaseSpec(tag='smooth', bathymetry='gaussian', regime='subcritical', discharge=4.42,
                           energy_upstream=22.06605, m_in=4.42, h_out=2.0,
                           perturbation_amplitude=0.01, perturbation_interval=(5.0, 7.0),
                           perturbation_shape='smooth', t_end=0.5, gravity=g),
    }


def get_case(tag: str, n_cells: Optional[int] = None, amplitude: Optional[float] = None,
             t_end: Optional[float] = None, cfl: Optional[float] = None) -> CaseSpec:
    """Catalogue entry `tag` with any non-None override applied."""
    catalogue = _catalogue()
    if tag not in catalogue:
        raise ConfigError(f"Unknown case '{tag}' (expected one of {', '.join(catalogue)})")

    return catalogue[tag].with_overrides(n_cells=n_cells, perturbation_amplitude=amplitude,
                                         t_end=t_end, cfl=cfl)


def list_cases() -> Dict[str, CaseSpec]:
    return _catalogue()
