from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional
import logging

from .utils import ConfigError

logger = logging.getLogger(__name__)

#physical and numerical defaults

GRAVITY = 9.812
DEFAULT_CFL = 0.6
N_GHOST = 3                 # WENO5 stencil half-width
WENO_EPSILON = 1e-6
WENO_POWER = 2
QUADRATURE_POINTS = 5       # Gauss-Legendre, exact up to degree 9

# root solves
ENERGY_RTOL = 1e-12
CRITICAL_RTOL = 1e-13       # E - E_min below this snaps to critical depth
FROUDE_TIE = 1e-9
MAX_NEWTON_ITER = 200

MIN_CELLS = 25

CASES = ('a', 'b', 'c', 'lake', 'smooth')
SCHEMES = ('still', 'moving', 'oracle1')
STUDIES = ('wellbalance', 'convergence', 'paper-figs', 'figures')    # figures: alias of paper-figs


# flag spellings accepted in config files, mapped onto RunConfig fields
_KEY_ALIASES = {
    'case': 'case',
    'scheme': 'scheme',
    'cells': 'n_cells',
    'n_cells': 'n_cells',
    'amp': 'amplitude',
    'amplitude': 'amplitude',
    't_end': 't_end',
    'cfl': 'cfl',
    'out': 'out',
    'emit_reference': 'emit_reference',
}


@dataclass(frozen=True)
class RunConfig:
    """One benchmark run as requested from the command line or a config file."""
    case: str = 'a'
    scheme: str = 'moving'
    n_cells: int = 100
    amplitude: float = 0.05
    t_end: Optional[float] = None      # None: the case's own end time
    cfl: float = DEFAULT_CFL
    out: Optional[str] = None
    emit_reference: bool = False

    def validate(self) -> 'RunConfig':

        if self.case not in CASES:
            raise ConfigError(f"Unknown case '{self.case}' (expected one of {', '.join(CASES)})")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"Unknown scheme '{self.scheme}' (expected one of {', '.join(SCHEMES)})")
        if self.n_cells < MIN_CELLS:
            raise ConfigError(f"n_cells must be >= {MIN_CELLS}, got {self.n_cells}")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"CFL number must lie in (0, 1], got {self.cfl}")
        if self.t_end is not None and self.t_end < 0.0:
            raise ConfigError(f"t_end must be non-negative, got {self.t_end}")
        return self

    @classmethod
    def from_file(cls, path: str) -> 'RunConfig':
        return cls().merged(read_config_file(path))

    def merged(self, overrides: Dict[str, Any]) -> 'RunConfig':
        """Return a copy with every non-None override applied (CLI beats file)."""
        known = {f.name for f in fields(self)}
        updates = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in known:
                raise ConfigError(f"Unknown configuration key '{key}'")
            updates[key] = _coerce(key, value)
        return replace(self, **updates)

    def describe(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _coerce(key: str, value: Any) -> Any:

    if not isinstance(value, str):
        return value

    try:
        if key == 'n_cells':
            return int(value)
        if key in ('amplitude', 'cfl'):
            return float(value)
        if key == 't_end':
            return None if value.lower() in ('', 'none') else float(value)
        if key == 'emit_reference':
            return value.strip().lower() in ('1', 'true', 'yes', 'on')
    except ValueError:
        raise ConfigError(f"Invalid value for '{key}': {value!r}")

    return value


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Parse a flat key=value file mirroring the CLI flags.

    Args:
        path: file with one `key = value` per line, `#` starts a comment

    Returns:
        Dictionary keyed by RunConfig field names
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"Config file not found: {path}")

    values = {}
    for line_no, raw in enumerate(config_path.read_text().splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {raw!r}")

        key, value = (part.strip() for part in line.split('=', 1))
        key = key.lstrip('-').replace('-', '_').lower()
        if key not in _KEY_ALIASES:
            raise ConfigError(f"{path}:{line_no}: unknown key '{key}'")
        values[_KEY_ALIASES[key]] = value

    logger.debug(f"Loaded {len(values)} settings from {path}")
    return values
