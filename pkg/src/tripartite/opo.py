"""Output quadrature spectra of a single degenerate OPO (linearized theory).

Frequencies share the rate units of the dampings; no 2*pi is applied.
Below threshold the output is squeezed in Y and anti-squeezed in X.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "THRESHOLD_BAND",
    "Branch",
    "NearThresholdWarning",
    "OpoParams",
    "SpectrumPoint",
    "critical_pump",
    "spectrum",
]

# linearized results are unreliable for |eps/eps_c - 1| below this
THRESHOLD_BAND = 0.02


class Branch(str, Enum):
    BELOW = "below"
    ABOVE = "above"


class NearThresholdWarning(UserWarning):
    """Evaluation inside the band where linearized spectra are not valid."""


@dataclass(frozen=True)
class OpoParams:
    """Signal damping ``gamma_a``, pump damping ``gamma_b``, nonlinearity
    ``kappa`` and classical pump amplitude ``epsilon``."""

    gamma_a: float
    gamma_b: float
    kappa: float
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("gamma_a", "gamma_b", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")

    @classmethod
    def at_ratio(cls, gamma_a, gamma_b, kappa, ratio) -> "OpoParams":
        """Parameters with the pump set to ``ratio`` times the critical value."""
        return cls(gamma_a, gamma_b, kappa, ratio * gamma_a * gamma_b / kappa)

    @property
    def pump_ratio(self) -> float:
        return self.epsilon / critical_pump(self)


@dataclass(frozen=True)
class SpectrumPoint:
    omega: np.ndarray
    s_x: np.ndarray
    s_y: np.ndarray
    near_threshold: bool = False


def critical_pump(p: OpoParams) -> float:
    return p.gamma_a * p.gamma_b / p.kappa


def spectrum(p: OpoParams, omega, branch) -> SpectrumPoint:
    """Evaluate the output spectra on the requested branch.

    Raises ``ValueError`` when the branch does not match the pump level
    (below needs ``eps < eps_c``, above needs ``eps > eps_c``).  Inside the
    threshold band a :class:`NearThresholdWarning` is issued and the returned
    point is flagged.
    """
    branch = Branch(branch)
    ratio = p.pump_ratio
    if branch is Branch.BELOW and not ratio < 1.0:
        raise ValueError(f"below-threshold branch requested at eps/eps_c = {ratio}")
    if branch is Branch.ABOVE and not ratio > 1.0:
        raise ValueError(f"above-threshold branch requested at eps/eps_c = {ratio}")
    near = abs(ratio - 1.0) < THRESHOLD_BAND
    if near:
        warnings.warn(f"eps/eps_c = {ratio:.4g} is inside the threshold band",
                      NearThresholdWarning, stacklevel=2)

    w = np.asarray(omega, dtype=float)
    w2 = w * w
    ga, gb, ke = p.gamma_a, p.gamma_b, p.kappa * p.epsilon
    if branch is Branch.BELOW:
        num = 4.0 * ga * gb * ke
        s_x = 1.0 + num / ((ga * gb - ke) ** 2 + gb**2 * w2)
        s_y = 1.0 - num / ((ga * gb + ke) ** 2 + gb**2 * w2)
    else:
        num = 4.0 * ga**2 * (gb**2 + w2)
        s_x = 1.0 + num / ((2 * ga * gb - 2 * ke + w2) ** 2 + gb**2 * w2)
        s_y = 1.0 - num / ((w2 - 2 * ke) ** 2 + (2 * ga + gb) ** 2 * w2)
    return SpectrumPoint(w, s_x, s_y, near)
