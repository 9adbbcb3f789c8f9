"""Three concurrent down-conversion processes inside a pumped cavity.

The cavity equations are the positive-P equations of :mod:`tripartite.positivep`
with damping ``-kappa alpha`` on the signals, ``-gamma beta`` on the pumps and
a real injected pump ``epsilon`` on each pump mode.  Fluctuations are
linearized about the steady state; with drift matrix ``A`` (``d dz = -A dz dt
+ ...``) and diffusion ``D`` the normally ordered intracavity spectrum is

    S_N(omega) = (A - i omega)^-1 D (A^T + i omega)^-1

and the output spectra are ``1 + 2 kappa S_N`` on single-mode variances
(``2 kappa S_N`` on covariances between distinct quadratures or modes).

Rates and frequencies share one unit; no 2*pi factors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import criteria
from .gaussian import MomentTable, SpectralMomentTable
from .opo import THRESHOLD_BAND, Branch, NearThresholdWarning
from .positivep import PAIRS

__all__ = [
    "CavityParams",
    "SteadyState",
    "SingularDriftError",
    "threshold",
    "steady_state",
    "zero_freq_closed_form",
    "cavity_drift",
    "drift_matrix",
    "diffusion_matrix",
    "spectrum_matrix",
    "vlf_spectrum",
    "EprSpectra",
    "epr_spectra",
]


class SingularDriftError(ArithmeticError):
    """The linearized drift has no inverse (the pump sits on threshold)."""


@dataclass(frozen=True)
class CavityParams:
    gamma: float
    kappa: float
    chi: float
    epsilon: float

    def __post_init__(self):
        for name in ("gamma", "kappa", "chi", "epsilon"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @classmethod
    def at_ratio(cls, gamma, kappa, chi, ratio) -> "CavityParams":
        return cls(gamma, kappa, chi, ratio * gamma * kappa / (2.0 * chi))

    @property
    def pump_ratio(self) -> float:
        return self.epsilon / threshold(self)


@dataclass(frozen=True)
class SteadyState:
    beta_ss: float
    alpha_ss: float
    branch: Branch


def threshold(p: CavityParams) -> float:
    return p.gamma * p.kappa / (2.0 * p.chi)


def steady_state(p: CavityParams, sign: int = +1) -> SteadyState:
    """Classical fixed point; ``sign`` picks the common sign of the signal
    amplitudes above threshold (the criteria do not depend on it).

    Exactly at threshold the below-threshold solution is returned; the two
    coincide there.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    eth = threshold(p)
    if p.epsilon <= eth:
        return SteadyState(p.epsilon / p.gamma, 0.0, Branch.BELOW)
    return SteadyState(p.kappa / (2.0 * p.chi), sign * math.sqrt((p.epsilon - eth) / p.chi), Branch.ABOVE)


def zero_freq_closed_form(p: CavityParams, branch=None):
    """Closed rational forms for the VLF spectra at zero frequency.

    ``branch`` defaults to the one selected by the pump; it may be forced,
    which is how the two forms are compared at threshold.  Accepts
    ``mpmath.mpf`` fields for exact-ish evaluation.
    """
    if branch is None:
        branch = steady_state(p).branch
    branch = Branch(branch)
    kg = p.kappa * p.gamma
    ce = p.chi * p.epsilon
    if branch is Branch.BELOW:
        num = 8 * kg * ce * (4 * kg**2 + 10 * kg * ce + 7 * ce**2)
        return 5 - num / ((kg + ce) ** 2 * (kg + 2 * ce) ** 2)
    num = kg**2 * (3 * kg**2 + 6 * kg * ce + 19 * ce**2)
    return 5 - num / (4 * ce**2 * (kg + ce) ** 2)


def _fixed_point(p: CavityParams, sign: int = +1) -> np.ndarray:
    ss = steady_state(p, sign)
    a = np.full(3, ss.alpha_ss, dtype=complex)
    b = np.full(3, ss.beta_ss, dtype=complex)
    return np.concatenate([a, a.conj(), b, b.conj()])


def cavity_drift(z, p: CavityParams) -> np.ndarray:
    """Deterministic part of the cavity equations for ``z`` of shape ``(12, ...)``."""
    z = np.asarray(z, dtype=complex)
    a, ap, b, bp = z[0:3], z[3:6], z[6:9], z[9:12]
    out = np.zeros_like(z)
    for k, (i, j) in enumerate(PAIRS):
        out[i] += p.chi * b[k] * ap[j]
        out[j] += p.chi * b[k] * ap[i]
        out[3 + i] += p.chi * bp[k] * a[j]
        out[3 + j] += p.chi * bp[k] * a[i]
        out[6 + k] = p.epsilon - p.gamma * b[k] - p.chi * a[i] * a[j]
        out[9 + k] = p.epsilon - p.gamma * bp[k] - p.chi * ap[i] * ap[j]
    out[0:6] -= p.kappa * z[0:6]
    return out


def drift_matrix(p: CavityParams, sign: int = +1) -> np.ndarray:
    """``A = -d(drift)/dz`` at the steady state (real, 12x12)."""
    z = _fixed_point(p, sign)
    a, ap, b, bp = z[0:3], z[3:6], z[6:9], z[9:12]
    jac = np.zeros((12, 12), dtype=complex)
    idx = np.arange(6)
    jac[idx, idx] = -p.kappa
    jac[idx + 6, idx + 6] = -p.gamma
    for k, (i, j) in enumerate(PAIRS):
        for m, n in ((i, j), (j, i)):
            jac[m, 3 + n] = p.chi * b[k]
            jac[m, 6 + k] = p.chi * ap[n]
            jac[3 + m, n] = p.chi * bp[k]
            jac[3 + m, 9 + k] = p.chi * a[n]
            jac[6 + k, m] = -p.chi * a[n]
            jac[9 + k, 3 + m] = -p.chi * ap[n]
    return -jac.real


def diffusion_matrix(p: CavityParams, sign: int = +1) -> np.ndarray:
    """Noise correlations of the positive-P equations at the steady state.

    Pump ``k`` contributes ``chi beta_k`` between the two signals it drives
    (and ``chi beta_k^+`` between their partners).  Pump modes carry none.
    """
    z = _fixed_point(p, sign)
    d = np.zeros((12, 12))
    for k, (i, j) in enumerate(PAIRS):
        d[i, j] = d[j, i] = p.chi * z[6 + k].real
        d[3 + i, 3 + j] = d[3 + j, 3 + i] = p.chi * z[9 + k].real
    return d


# rows map (alpha, alpha^+) onto (X, Y) for the three signals
_QUAD = np.zeros((6, 12), dtype=complex)
for _m in range(3):
    _QUAD[_m, _m] = _QUAD[_m, 3 + _m] = 1.0
    _QUAD[3 + _m, _m] = -1j
    _QUAD[3 + _m, 3 + _m] = 1j
del _m


def _check_band(p: CavityParams):
    ratio = p.pump_ratio
    if abs(ratio - 1.0) < THRESHOLD_BAND:
        warnings.warn(f"eps/eps_th = {ratio:.4g} is inside the threshold band; "
                      "linearized spectra are not reliable here",
                      NearThresholdWarning, stacklevel=3)


def spectrum_matrix(p: CavityParams, omega, sign: int = +1) -> SpectralMomentTable:
    """Output quadrature spectra of the three signal modes on the grid ``omega``."""
    _check_band(p)
    a = drift_matrix(p, sign)
    # at threshold A loses rank; test conditioning rather than exact zero
    if np.linalg.cond(a) > 1e13:
        raise SingularDriftError(f"drift matrix is singular at eps/eps_th = {p.pump_ratio:.6g}")
    d = diffusion_matrix(p, sign)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    eye = np.eye(12)
    left = np.linalg.inv(a[None] - 1j * w[:, None, None] * eye)
    right = np.linalg.inv(a.T[None] + 1j * w[:, None, None] * eye)
    s_n = left @ d @ right
    s_q = _QUAD @ s_n @ _QUAD.T
    s_q = 2.0 * p.kappa * s_q
    # the physical (symmetrized) spectra are the real parts
    s_q = 0.5 * (s_q + np.swapaxes(s_q, -1, -2)).real
    eye3 = np.eye(3)
    vxx = s_q[:, 0:3, 0:3] + eye3
    vyy = s_q[:, 3:6, 3:6] + eye3
    vxy = s_q[:, 0:3, 3:6]
    return SpectralMomentTable(w, MomentTable(vxx, vyy, vxy))


def vlf_spectrum(p: CavityParams, omega, sign: int = +1) -> np.ndarray:
    """``(n_omega, 3)`` array of the three VLF spectra ``S_12, S_13, S_23``."""
    t = spectrum_matrix(p, omega, sign).table
    return np.stack(criteria.vlf_triplet(t), axis=-1)


@dataclass(frozen=True)
class EprSpectra:
    omega: np.ndarray
    one_mode: np.ndarray
    two_mode: np.ndarray


def epr_spectra(p: CavityParams, omega, sign: int = +1) -> EprSpectra:
    """EPR products (``+`` combinations, mode 1 against modes 2 and 3) per frequency."""
    sm = spectrum_matrix(p, omega, sign)
    one = criteria.epr_one_mode(sm.table, (1, 2, +1), 0).product
    two = criteria.epr_two_mode(sm.table, 0, (1, 2, +1)).product
    return EprSpectra(sm.omega, np.asarray(one), np.asarray(two))
