"""Two-beamsplitter network that mixes three squeezed beams (Aoki layout).

BS1 (reflectivity ``mu``) mixes inputs 1 and 2; one of its outputs is the
final mode ``b1`` and the other, ``b0``, is mixed with input 3 on BS2
(reflectivity ``nu``) to give ``b2`` and ``b3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import criteria
from .gaussian import (
    Axis,
    MomentTable,
    SpectralMomentTable,
    SqueezerSpec,
    direct_sum,
    from_spectra,
    linear_transform,
    squeezed,
)

__all__ = [
    "AOKI_MU",
    "AOKI_NU",
    "AokiNetwork",
    "build_matrix",
    "bs1_matrix",
    "default_inputs",
    "propagate_static",
    "propagate_spectral",
    "opo_inputs",
    "bs1_duan",
    "closed_form_suite",
    "duan_optimal_r",
    "duan_loss_r",
    "vlf_onset_r",
]

AOKI_MU = 2.0 / 3.0
AOKI_NU = 0.5


def _check_reflectivity(name, x):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")


def build_matrix(mu: float, nu: float) -> np.ndarray:
    """Real 3x3 map ``b = M a`` of the two-beamsplitter network."""
    _check_reflectivity("mu", mu)
    _check_reflectivity("nu", nu)
    s = math.sqrt
    return np.array([
        [s(1 - mu), s(mu), 0.0],
        [s(mu * (1 - nu)), -s((1 - mu) * (1 - nu)), s(nu)],
        [s(mu * nu), -s(nu * (1 - mu)), -s(1 - nu)],
    ])


def bs1_matrix(mu: float) -> np.ndarray:
    """Map ``(a1, a2) -> (b1, b0)`` across BS1 alone.

    ``b0`` is the BS1 port that feeds BS2; with it, row 2 of
    :func:`build_matrix` is ``sqrt(1-nu) b0 + sqrt(nu) a3``.
    """
    _check_reflectivity("mu", mu)
    return np.array([
        [math.sqrt(1 - mu), math.sqrt(mu)],
        [math.sqrt(mu), -math.sqrt(1 - mu)],
    ])


@dataclass(frozen=True)
class AokiNetwork:
    mu: float = AOKI_MU
    nu: float = AOKI_NU
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = build_matrix(self.mu, self.nu)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def default_inputs(r: float, axes=(Axis.Y, Axis.X, Axis.X)) -> tuple:
    """Three equal squeezers; input 1 squeezed in Y, inputs 2 and 3 in X."""
    return tuple(SqueezerSpec(r, ax) for ax in axes)


def propagate_static(inputs: Sequence[SqueezerSpec], net: AokiNetwork = AokiNetwork()) -> MomentTable:
    if len(inputs) != 3:
        raise ValueError("the network takes exactly three inputs")
    return linear_transform(direct_sum([squeezed(s) for s in inputs]), net.matrix)


def propagate_spectral(input_spectra, net: AokiNetwork, omega) -> SpectralMomentTable:
    """Propagate frequency-resolved input variances through the network.

    ``input_spectra`` is a sequence of three ``(s_x, s_y)`` pairs, each an
    array over the grid ``omega``.  Frequencies are treated independently,
    so the result holds one table per grid point, in grid order.
    """
    if len(input_spectra) != 3:
        raise ValueError("the network takes exactly three inputs")
    sx = [np.atleast_1d(np.asarray(p[0], dtype=float)) for p in input_spectra]
    sy = [np.atleast_1d(np.asarray(p[1], dtype=float)) for p in input_spectra]
    shape = sx[0].shape
    if any(a.shape != shape for a in sx + sy):
        raise ValueError("input spectra are not on a common grid")
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if omega.shape != shape:
        raise ValueError(f"omega grid shape {omega.shape} does not match spectra {shape}")
    table = from_spectra(np.stack(sx, axis=-1), np.stack(sy, axis=-1))
    return SpectralMomentTable(omega, linear_transform(table, net.matrix))


def opo_inputs(params, omega, branch, axes=(Axis.Y, Axis.X, Axis.X)):
    """Three identical OPO outputs oriented so their squeezed axes follow ``axes``.

    The bare OPO output is squeezed in ``Y`` below threshold; an ``X`` entry
    swaps its quadratures (a quarter-wave phase shift).
    """
    from .opo import spectrum

    sp = spectrum(params, omega, branch)
    pairs = []
    for ax in axes:
        ax = Axis(ax)
        pairs.append((sp.s_x, sp.s_y) if ax is Axis.Y else (sp.s_y, sp.s_x))
    return pairs, sp.near_threshold


def bs1_duan(r: float, mu: float) -> float:
    """Duan sum for the BS1 outputs ``(b1, b0)`` with a Y- and an X-squeezed input."""
    t = direct_sum([squeezed(SqueezerSpec(r, Axis.Y)), squeezed(SqueezerSpec(r, Axis.X))])
    return float(criteria.duan_pair(linear_transform(t, bs1_matrix(mu)), 0, 1))


def closed_form_suite(r):
    """Closed forms at ``mu = 2/3, nu = 1/2``, used as test oracles."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("squeezing parameter must be >= 0")
    den = 5.0 + 4.0 * np.cosh(2.0 * r)
    return {
        "vlf": 5.0 * np.exp(-r),
        "epr_one": 36.0 / den,
        "epr_two": 9.0 / den,
        "duan_bs1": 4.0 * np.cosh(r) - (8.0 * math.sqrt(2.0) / 3.0) * np.sinh(r),
    }


def duan_optimal_r(mu: float = AOKI_MU) -> float:
    """Squeezing that minimizes ``4[cosh r - 2 sqrt(mu(1-mu)) sinh r]``."""
    k = 2.0 * math.sqrt(mu * (1.0 - mu))
    if k >= 1.0:
        raise ValueError("balanced splitter: the Duan sum decreases without bound")
    return 0.5 * math.log((1.0 + k) / (1.0 - k))


def duan_loss_r(mu: float = AOKI_MU) -> float:
    """Squeezing above which the BS1 Duan sum returns to 4 (entanglement lost).

    Solves ``cosh r - k sinh r = 1`` for its nonzero root, ``r = 2 atanh(k)``.
    """
    k = 2.0 * math.sqrt(mu * (1.0 - mu))
    if k >= 1.0:
        return math.inf
    return 2.0 * math.atanh(k)


def vlf_onset_r() -> float:
    """Squeezing at which ``5 exp(-r)`` crosses the bound 4."""
    return math.log(5.0 / 4.0)
