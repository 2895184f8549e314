"""
Fifth-order WENO (Jiang-Shu) reconstruction.

Besides the usual nonlinear reconstruction, the coefficients a window
produces can be frozen into one 5-point linear functional per side and
applied to other data, e.g. the bottom topography, so that h + b is
reconstructed consistently.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config import QUADRATURE_POINTS, WENO_EPSILON, WENO_POWER
from .utils import gauss_nodes

coef_smoothness_1_ = 13.0 / 12.0
coef_smoothness_2_ = 0.25

# candidate stencils for the value at the right interface x_{i+1/2},
# written as 5-point rows over (v_{i-2}, ..., v_{i+2})
STENCILS_RIGHT = np.array([
    [2.0, -7.0, 11.0, 0.0, 0.0],
    [0.0, -1.0, 5.0, 2.0, 0.0],
    [0.0, 0.0, 2.0, 5.0, -1.0],
]) / 6.0

# ...and for the left interface x_{i-1/2}
STENCILS_LEFT = np.array([
    [-1.0, 5.0, 2.0, 0.0, 0.0],
    [0.0, 2.0, 5.0, -1.0, 0.0],
    [0.0, 0.0, 11.0, -7.0, 2.0],
]) / 6.0

LINEAR_WEIGHTS_RIGHT = (0.1, 0.6, 0.3)
LINEAR_WEIGHTS_LEFT = (0.3, 0.6, 0.1)


@dataclass
class StencilWeights:
    """
    Frozen reconstruction coefficients.

    `right[..., k]` multiplies v_{i-2+k} to give the value at x_{i+1/2} from
    inside cell i, `left[..., k]` likewise for x_{i-1/2}.
    """
    right: np.ndarray
    left: np.ndarray


def smoothness_indicators(window: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    v0, v1, v2, v3, v4 = (window[..., k] for k in range(5))

    s01 = v0 - 2.0 * v1 + v2
    s02 = v0 - 4.0 * v1 + 3.0 * v2
    beta0 = coef_smoothness_1_ * s01 * s01 + coef_smoothness_2_ * s02 * s02

    s11 = v1 - 2.0 * v2 + v3
    s12 = v1 - v3
    beta1 = coef_smoothness_1_ * s11 * s11 + coef_smoothness_2_ * s12 * s12

    s21 = v2 - 2.0 * v3 + v4
    s22 = 3.0 * v2 - 4.0 * v3 + v4
    beta2 = coef_smoothness_1_ * s21 * s21 + coef_smoothness_2_ * s22 * s22

    return beta0, beta1, beta2


def _nonlinear_weights(betas, linear_weights):
    alphas = [d / (beta + WENO_EPSILON) ** WENO_POWER for d, beta in zip(linear_weights, betas)]
    one_a_sum = 1.0 / (alphas[0] + alphas[1] + alphas[2])
    return [a * one_a_sum for a in alphas]


def _combine(omegas, stencils):
    coefficients = omegas[0][..., None] * stencils[0]
    for omega, stencil in zip(omegas[1:], stencils[1:]):
        coefficients = coefficients + omega[..., None] * stencil
    return coefficients


def _as_window(window) -> np.ndarray:
    window = np.asarray(window, dtype=float)
    if window.shape[-1] != 5:
        raise ValueError(f"WENO5 needs windows of 5 cell averages, got shape {window.shape}")
    return window


def frozen_weights(window, nonlinear: bool = True) -> StencilWeights:
    """
    Coefficients realized by the WENO5 reconstruction of `window`.

    Args:
        window: cell averages (v_{i-2}, ..., v_{i+2}) along the last axis
        nonlinear: False gives the optimal linear weights

    Returns:
        StencilWeights with arrays of shape window.shape
    """
    window = _as_window(window)

    if nonlinear:
        betas = smoothness_indicators(window)
        omega_right = _nonlinear_weights(betas, LINEAR_WEIGHTS_RIGHT)
        omega_left = _nonlinear_weights(betas, LINEAR_WEIGHTS_LEFT)
    else:
        ones = np.ones(window.shape[:-1])
        omega_right = [d * ones for d in LINEAR_WEIGHTS_RIGHT]
        omega_left = [d * ones for d in LINEAR_WEIGHTS_LEFT]

    return StencilWeights(right=_combine(omega_right, STENCILS_RIGHT),
                          left=_combine(omega_left, STENCILS_LEFT))


def apply_frozen(weights: StencilWeights, values) -> Tuple[np.ndarray, np.ndarray]:
    """Apply frozen coefficients to any 5-point data; returns (right, left)."""
    values = _as_window(values)

    right = weights.right[..., 0] * values[..., 0]
    left = weights.left[..., 0] * values[..., 0]
    for k in range(1, 5):
        right = right + weights.right[..., k] * values[..., k]
        left = left + weights.left[..., k] * values[..., k]
    return right, left


def weno5_reconstruct(window, nonlinear: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Interface values from inside the central cell of the window.

    Returns:
        (value at x_{i+1/2}, value at x_{i-1/2})
    """
    window = _as_window(window)
    right, left = apply_frozen(frozen_weights(window, nonlinear), window)
    if window.ndim == 1:
        return float(right), float(left)
    return right, left


def cell_windows(values: np.ndarray, first: int, last: int) -> np.ndarray:
    """
    5-cell windows centred on cells first..last-1 of an extended array.

    Returns:
        array of shape (last - first, 5)
    """
    if first < 2 or last + 2 > values.shape[-1]:
        raise ValueError(f"Cells {first}..{last - 1} need two neighbours on each side "
                         f"(array has {values.shape[-1]} cells)")
    return sliding_window_view(values, 5, axis=-1)[..., first - 2:last - 2, :]


@lru_cache(maxsize=None)
def point_value_matrix(n_points: int = QUADRATURE_POINTS) -> np.ndarray:
    """
    Matrix mapping 5 cell averages (v_{i-2}..v_{i+2}) to the values of their
    degree-4 interpolating polynomial at the Gauss points of cell i.
    """
    offsets, _ = gauss_nodes(n_points)
    centres = np.arange(-2, 3, dtype=float)[:, None]
    powers = np.arange(5)[None, :]
    # averages of xi^k over each unit cell
    averages = ((centres + 0.5) ** (powers + 1) - (centres - 0.5) ** (powers + 1)) / (powers + 1)
    vandermonde = offsets[:, None] ** powers
    matrix = np.linalg.solve(averages.T, vandermonde.T).T
    matrix.setflags(write=False)
    return matrix
