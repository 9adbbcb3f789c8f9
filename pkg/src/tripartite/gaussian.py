"""Quadrature second-moment tables and their propagation through linear optics.

Conventions used throughout the package:

* quadratures are ``X = a + a^dag`` and ``Y = -i(a - a^dag)``, so the vacuum
  has ``V(X) = V(Y) = 1`` and the uncertainty bound reads ``V(X) V(Y) >= 1``;
* a squeezed input with parameter ``r`` has variance ``exp(-r)`` on the
  squeezed axis and ``exp(+r)`` on the conjugate one (note: ``r``, not ``2r``);
* means are zero, only central second moments are stored.

A :class:`MomentTable` may carry leading batch axes (for example a frequency
grid or a time grid); every function here and in :mod:`tripartite.criteria`
broadcasts over them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Axis",
    "ModeLabel",
    "MomentTable",
    "SpectralMomentTable",
    "SqueezerSpec",
    "vacuum",
    "squeezed",
    "direct_sum",
    "from_spectra",
    "linear_transform",
]

_SYM_TOL = 1e-9


class Axis(str, Enum):
    X = "X"
    Y = "Y"


@dataclass(frozen=True)
class ModeLabel:
    index: int
    name: Optional[str] = None


def _frozen(a) -> np.ndarray:
    arr = np.array(a)
    if arr.dtype.kind not in "fO":
        arr = arr.astype(np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MomentTable:
    """Symmetric store of X/Y variances and covariances for ``n`` modes.

    ``vxx[..., i, j] = V(X_i, X_j)``, ``vyy[..., i, j] = V(Y_i, Y_j)`` and
    ``vxy[..., i, j] = V(X_i, Y_j)``.  Arrays are read-only after construction.
    Object-dtype arrays (e.g. of ``mpmath.mpf``) are accepted unchanged, which
    allows high-precision evaluation of the criteria.
    """

    vxx: np.ndarray
    vyy: np.ndarray
    vxy: np.ndarray = None
    labels: tuple = field(default=(), compare=False)

    def __post_init__(self):
        vxx = _frozen(self.vxx)
        vyy = _frozen(self.vyy)
        if vxx.ndim < 2 or vxx.shape[-1] != vxx.shape[-2]:
            raise ValueError(f"vxx must be (..., n, n), got shape {vxx.shape}")
        if vyy.shape != vxx.shape:
            raise ValueError("vxx and vyy shapes differ")
        vxy = np.zeros_like(vxx) if self.vxy is None else self.vxy
        vxy = _frozen(vxy)
        if vxy.shape != vxx.shape:
            raise ValueError("vxy shape differs from vxx")
        for name, v in (("vxx", vxx), ("vyy", vyy)):
            asym = np.abs(v - np.swapaxes(v, -1, -2))
            scale = 1.0 + np.abs(v)
            if np.any(asym > _SYM_TOL * scale):
                raise ValueError(f"{name} is not symmetric")
            diag = np.diagonal(v, axis1=-2, axis2=-1)
            if np.any(diag < 0):
                raise ValueError(f"{name} has a negative variance on the diagonal")
        n = vxx.shape[-1]
        labels = tuple(self.labels) or tuple(ModeLabel(i) for i in range(n))
        if len(labels) != n or len({lab.index for lab in labels}) != n:
            raise ValueError("mode labels must be unique and match the mode count")
        object.__setattr__(self, "vxx", vxx)
        object.__setattr__(self, "vyy", vyy)
        object.__setattr__(self, "vxy", vxy)
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return self.vxx.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.vxx.shape[:-2]

    @property
    def has_xy_correlations(self) -> bool:
        return bool(np.any(self.vxy != 0))

    def __getitem__(self, idx) -> "MomentTable":
        """Select along the leading batch axes."""
        if not self.batch_shape:
            raise IndexError("table has no batch axes")
        return MomentTable(self.vxx[idx], self.vyy[idx], self.vxy[idx], self.labels)

    def var(self, quad: str, coeffs) -> np.ndarray:
        """Variance of ``sum_k coeffs[k] * Q_k`` for ``quad`` in ``{"x", "y"}``."""
        c = np.asarray(coeffs)
        v = self._block(quad)
        return (c @ v) @ c

    def cov(self, quad: str, c1, c2) -> np.ndarray:
        """Covariance of two linear combinations of the same quadrature."""
        v = self._block(quad)
        return (np.asarray(c1) @ v) @ np.asarray(c2)

    def _block(self, quad: str) -> np.ndarray:
        q = quad.lower()
        if q == "x":
            return self.vxx
        if q == "y":
            return self.vyy
        raise ValueError(f"quadrature must be 'x' or 'y', got {quad!r}")


@dataclass(frozen=True)
class SpectralMomentTable:
    """A :class:`MomentTable` whose leading axis runs over ``omega``."""

    omega: np.ndarray
    table: MomentTable

    def __post_init__(self):
        omega = _frozen(np.atleast_1d(np.asarray(self.omega, dtype=float)))
        if self.table.batch_shape[:1] != omega.shape:
            raise ValueError("frequency grid does not match the table's leading axis")
        object.__setattr__(self, "omega", omega)

    def __len__(self):
        return self.omega.shape[0]

    def at(self, k: int) -> MomentTable:
        return self.table[k]


@dataclass(frozen=True)
class SqueezerSpec:
    r: float
    axis: Axis = Axis.X

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"squeezing parameter must be >= 0, got {self.r}")
        object.__setattr__(self, "axis", Axis(self.axis))


def vacuum(n: int) -> MomentTable:
    """Vacuum table: unit variances, no correlations."""
    if n < 1:
        raise ValueError("mode count must be >= 1")
    eye = np.eye(n)
    return MomentTable(eye, eye.copy())


def squeezed(spec: SqueezerSpec) -> MomentTable:
    """Single-mode minimum-uncertainty squeezed vacuum.

    The squeezed axis gets ``exp(-r)``, the other ``exp(r)``.
    """
    lo, hi = np.exp(-spec.r), np.exp(spec.r)
    if spec.axis is Axis.X:
        return MomentTable([[lo]], [[hi]])
    return MomentTable([[hi]], [[lo]])


def direct_sum(tables: Sequence[MomentTable]) -> MomentTable:
    """Block-diagonal table of independent (uncorrelated) subsystems."""
    if not tables:
        raise ValueError("need at least one table")
    batch = np.broadcast_shapes(*(t.batch_shape for t in tables))
    n = sum(t.n_modes for t in tables)
    blocks = {}
    for name in ("vxx", "vyy", "vxy"):
        out = np.zeros(batch + (n, n))
        i = 0
        for t in tables:
            k = t.n_modes
            out[..., i:i + k, i:i + k] = getattr(t, name)
            i += k
        blocks[name] = out
    return MomentTable(blocks["vxx"], blocks["vyy"], blocks["vxy"])


def from_spectra(s_x, s_y) -> MomentTable:
    """Uncorrelated modes with per-mode variances ``s_x[..., k]``, ``s_y[..., k]``.

    With arrays shaped ``(n_omega, n_modes)`` this builds one table per
    frequency point.
    """
    s_x = np.asarray(s_x, dtype=float)
    s_y = np.asarray(s_y, dtype=float)
    if s_x.shape != s_y.shape or s_x.ndim < 1:
        raise ValueError("s_x and s_y must share a shape (..., n_modes)")
    eye = np.eye(s_x.shape[-1])
    return MomentTable(s_x[..., None, :] * eye, s_y[..., None, :] * eye)


def linear_transform(t: MomentTable, m, m_y=None) -> MomentTable:
    """Propagate second moments through ``X -> m X`` and ``Y -> m_y Y``.

    For a passive network (beamsplitters) ``m_y`` is omitted and both
    quadratures see the same real matrix.  A distinct ``m_y`` covers
    quadrature-diagonal active maps such as the undepleted parametric
    interaction.
    """
    m = np.asarray(m)
    m_y = m if m_y is None else np.asarray(m_y)
    n = t.n_modes
    for mat in (m, m_y):
        if mat.shape != (n, n):
            raise ValueError(f"transformation must be {n}x{n}, got {mat.shape}")
    vxx = m @ t.vxx @ m.T
    vyy = m_y @ t.vyy @ m_y.T
    vxy = m @ t.vxy @ m_y.T
    # remove rounding asymmetry from the triple product
    vxx = 0.5 * (vxx + np.swapaxes(vxx, -1, -2))
    vyy = 0.5 * (vyy + np.swapaxes(vyy, -1, -2))
    return MomentTable(vxx, vyy, vxy, t.labels)
