"""Undepleted-pump solutions for three concurrent down-conversion processes.

With equal real pump amplitudes, ``tau = xi t`` and

    A = cosh 2tau + 2 cosh tau,   B = sinh 2tau - 2 sinh tau,
    C = cosh 2tau - cosh tau,     D = sinh tau + sinh 2tau,

each output quadrature is a linear map of the vacuum inputs with
``X(t) = (1/3) [[A+B, C+D, C+D], ...] X(0)`` and the ``A-B, C-D`` analogue
for ``Y``.  Float evaluation overflows for ``tau`` above roughly 177
(variances grow like ``exp(4 tau)``); pass an ``mpmath.mpf`` for
high-precision work, in which case tables are object arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import criteria
from .gaussian import MomentTable

__all__ = ["UndepletedPoint", "abcd", "quadrature_maps", "moment_table", "v3_closed", "epr_curves"]


def _hyperbolic(tau):
    if type(tau).__module__.startswith("mpmath"):
        import mpmath

        return mpmath.cosh, mpmath.sinh
    return np.cosh, np.sinh


@dataclass(frozen=True)
class UndepletedPoint:
    tau: object
    a: object
    b: object
    c: object
    d: object


def abcd(tau) -> UndepletedPoint:
    if np.any(np.asarray(tau, dtype=float) < 0):
        raise ValueError("tau must be >= 0")
    cosh, sinh = _hyperbolic(tau)
    if cosh is np.cosh:
        tau = np.asarray(tau, dtype=float)
    c1, c2, s1, s2 = cosh(tau), cosh(2 * tau), sinh(tau), sinh(2 * tau)
    return UndepletedPoint(tau, c2 + 2 * c1, s2 - 2 * s1, c2 - c1, s1 + s2)


def quadrature_maps(tau):
    """Return ``(m_x, m_y)`` with ``X(t) = m_x X(0)`` and ``Y(t) = m_y Y(0)``."""
    p = abcd(tau)
    if np.ndim(p.a):
        raise ValueError("quadrature_maps takes a scalar tau")
    dtype = object if cosh_is_mp(tau) else float
    mats = []
    for diag, off in ((p.a + p.b, p.c + p.d), (p.a - p.b, p.c - p.d)):
        m = np.full((3, 3), off / 3, dtype=dtype)
        np.fill_diagonal(m, diag / 3)
        mats.append(m)
    return tuple(mats)


def _symmetric(diag, off):
    diag = np.asarray(diag)
    dtype = object if diag.dtype == object else float
    out = np.empty(diag.shape + (3, 3), dtype=dtype)
    out[...] = np.asarray(off)[..., None, None]
    idx = np.arange(3)
    out[..., idx, idx] = diag[..., None]
    return out


def moment_table(tau) -> MomentTable:
    """Output moments from the closed-form variance and covariance expressions."""
    p = abcd(tau)
    a, b, c, d = p.a, p.b, p.c, p.d
    vx = ((a + b) ** 2 + 2 * (c + d) ** 2) / 9
    vy = ((a - b) ** 2 + 2 * (c - d) ** 2) / 9
    cx = (c + d) * (c + d + 2 * a + 2 * b) / 9
    cy = (c - d) * (c - d + 2 * a - 2 * b) / 9
    if cosh_is_mp(tau):
        vx, vy, cx, cy = (np.array(v, dtype=object) for v in (vx, vy, cx, cy))
    return MomentTable(_symmetric(vx, cx), _symmetric(vy, cy))


def cosh_is_mp(tau) -> bool:
    return _hyperbolic(tau)[0] is not np.cosh


def v3_closed(tau):
    """The VLF value (all three are equal) written out in A, B, C, D."""
    p = abcd(tau)
    a, b, c, d = p.a, p.b, p.c, p.d
    return (5 * (a * a + b * b) + 8 * b * (d - 2 * c) + 2 * a * (4 * c - 8 * d - b)
            + 14 * (c * c + d * d) - 20 * c * d) / 9


def epr_curves(tau):
    """``(one_mode_product, two_mode_product)`` from the moment table."""
    t = moment_table(tau)
    one = criteria.epr_one_mode(t, (1, 2, +1), 0).product
    two = criteria.epr_two_mode(t, 0, (1, 2, +1)).product
    return one, two
