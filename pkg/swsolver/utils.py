from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional, Tuple
import logging

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class SolverError(Exception):
    """Base class for every fatal diagnostic raised by the solver."""


class DomainError(SolverError, ValueError):
    pass


class ConfigError(SolverError, ValueError):
    pass


class GridMismatchError(SolverError, ValueError):
    pass


class NoRootError(SolverError):
    """No depth on the requested flow branch reproduces the given energy."""

    def __init__(self, message: str, deficit: float = float('nan'), branch: Any = None):
        super().__init__(message)
        self.deficit = deficit
        self.branch = branch


class PositivityError(SolverError):

    def __init__(self, message: str, cell: Optional[int] = None, stage: Optional[int] = None):
        super().__init__(message)
        self.cell = cell
        self.stage = stage


def check_positive_depth(h: np.ndarray, what: str = 'depth', stage: Optional[int] = None,
                         offset: int = 0):
    """Raise PositivityError naming the first cell whose depth is not positive."""
    bad = np.flatnonzero(~(h > 0.0))
    if bad.size == 0:
        return

    cell = int(bad[0]) + offset
    where = f" in RK stage {stage}" if stage is not None else ""
    message = f"Non-positive {what}{where} at cell {cell}: h={h[bad[0]]!r}"
    logger.error(message)
    raise PositivityError(message, cell=cell, stage=stage)


@lru_cache(maxsize=None)
def gauss_nodes(n_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule mapped onto the reference cell [-1/2, 1/2].

    Returns:
        (offsets, weights) with weights summing to one, so a cell average is
        sum(weights * f(x_center + offsets * dx))
    """
    nodes, weights = np.polynomial.legendre.leggauss(n_points)
    offsets = 0.5 * nodes
    weights = 0.5 * weights
    offsets.setflags(write=False)
    weights.setflags(write=False)
    return offsets, weights


def write_csv(path: str, frame: pd.DataFrame, header: Dict[str, Any]) -> Path:
    """
    Write `#`-prefixed header lines followed by the table, 17 significant digits.
    """
    out_path = Path(path)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)

    with open(out_path, 'w', newline='') as handle:
        for key, value in header.items():
            handle.write(f"# {key}: {value}\n")
        frame.to_csv(handle, index=False, float_format='%.17g')

    logger.info(f"Wrote {len(frame)} rows to {out_path}")
    return out_path


def read_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment='#')
