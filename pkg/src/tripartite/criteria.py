"""Tripartite entanglement witnesses evaluated on three-mode moment tables.

Four families are provided:

* the symmetric van Loock-Furusawa (VLF) triplet
  ``V_ij = V(X_i - X_j) + V(Y_1 + Y_2 + Y_3)``, bound 4, two violations
  certify genuine tripartite entanglement;
* the Duan pair sum ``V(X_i - X_j) + V(Y_i + Y_j)``, bound 4;
* the two-mode-inference EPR product ``V_inf(X_i) V_inf(Y_i)``, bound 1,
  where ``X_i`` is inferred from ``X_j +/- X_k`` by optimal linear regression;
* the one-mode-inference EPR product
  ``V_inf(X_j +/- X_k) V_inf(Y_j +/- Y_k)``, bound 4, inferred from mode i.

All functions broadcast over the batch axes of the table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .gaussian import MomentTable

__all__ = [
    "VLF_BOUND",
    "DUAN_BOUND",
    "EPR_TWO_MODE_BOUND",
    "EPR_ONE_MODE_BOUND",
    "DegenerateInferenceError",
    "InferenceGain",
    "EprValue",
    "CriterionReport",
    "vlf_triplet",
    "duan_pair",
    "estimate_variance",
    "optimal_gain",
    "epr_two_mode",
    "epr_one_mode",
    "epr_one_mode_alt",
    "full_report",
]

VLF_BOUND = 4.0
DUAN_BOUND = 4.0
EPR_TWO_MODE_BOUND = 1.0
EPR_ONE_MODE_BOUND = 4.0

PAIRS = ((0, 1), (0, 2), (1, 2))


class DegenerateInferenceError(ArithmeticError):
    """Raised when an inference denominator (a variance) is not positive."""


def _sign(s) -> int:
    if s in (1, "+"):
        return 1
    if s in (-1, "-"):
        return -1
    raise ValueError(f"sign must be +1/-1 or '+'/'-', got {s!r}")


def _unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _combo(n, j, k, sign):
    c = np.zeros(n)
    c[j] += 1.0
    c[k] += _sign(sign)
    return c


def _need_three(t: MomentTable):
    if t.n_modes != 3:
        raise ValueError(f"criterion needs exactly 3 modes, table has {t.n_modes}")


def _check_index(t, *idx):
    for i in idx:
        if not 0 <= i < t.n_modes:
            raise IndexError(f"mode index {i} out of range for {t.n_modes} modes")


def _positive(den, what):
    if np.any(np.asarray(den) <= 0):
        raise DegenerateInferenceError(f"non-positive variance in denominator of {what}")


def vlf_triplet(t: MomentTable):
    """Return ``(V12, V13, V23)``."""
    _need_three(t)
    y_sum = t.var("y", np.ones(3))
    return tuple(t.var("x", _combo(3, i, j, -1)) + y_sum for i, j in PAIRS)


def duan_pair(t: MomentTable, i: int, j: int):
    """``V(X_i - X_j) + V(Y_i + Y_j)`` for any two distinct modes."""
    _check_index(t, i, j)
    if i == j:
        raise ValueError("Duan pair needs two distinct modes")
    n = t.n_modes
    return t.var("x", _combo(n, i, j, -1)) + t.var("y", _combo(n, i, j, +1))


@dataclass(frozen=True)
class InferenceGain:
    a_min: np.ndarray
    variance_at_min: np.ndarray


def estimate_variance(t: MomentTable, i: int, combo, a: float, quad: str = "x"):
    """Error variance of the linear estimate ``Q_i ~ a (Q_j +/- Q_k)``."""
    j, k, sign = combo
    _check_index(t, i, j, k)
    n = t.n_modes
    return t.var(quad, _unit(n, i) - a * _combo(n, j, k, sign))


def optimal_gain(t: MomentTable, i: int, combo, quad: str = "x") -> InferenceGain:
    """Gain minimizing the inference error of ``Q_i`` from ``Q_j +/- Q_k``."""
    j, k, sign = combo
    _check_index(t, i, j, k)
    n = t.n_modes
    c = _combo(n, j, k, sign)
    e = _unit(n, i)
    den = t.var(quad, c)
    _positive(den, f"gain for mode {i}")
    cov = t.cov(quad, e, c)
    return InferenceGain(cov / den, t.var(quad, e) - cov * cov / den)


@dataclass(frozen=True)
class EprValue:
    vinf_x: np.ndarray
    vinf_y: np.ndarray
    product: np.ndarray
    sign: object = 1


def epr_two_mode(t: MomentTable, i: int, combo) -> EprValue:
    """Infer mode ``i`` from the combination ``(j, k, sign)``."""
    _need_three(t)
    gx = optimal_gain(t, i, combo, "x")
    gy = optimal_gain(t, i, combo, "y")
    vx, vy = gx.variance_at_min, gy.variance_at_min
    return EprValue(vx, vy, vx * vy, _sign(combo[2]))


def epr_one_mode(t: MomentTable, pair, i: int) -> EprValue:
    """Infer ``Q_j +/- Q_k`` from mode ``i``; ``pair`` is ``(j, k, sign)``."""
    _need_three(t)
    j, k, sign = pair
    _check_index(t, i, j, k)
    s = _sign(sign)
    c = _combo(3, j, k, s)
    e = _unit(3, i)
    out = []
    for q in ("x", "y"):
        den = t.var(q, e)
        _positive(den, f"one-mode inference from mode {i}")
        num = t.cov(q, e, _unit(3, j)) + s * t.cov(q, e, _unit(3, k))
        out.append(t.var(q, c) - num * num / den)
    return EprValue(out[0], out[1], out[0] * out[1], s)


def epr_one_mode_alt(t: MomentTable, pair, i: int) -> EprValue:
    """Same quantity written as ``V(c) - V(Q_i, c)^2 / V(Q_i)``.

    Kept separately so tests can check both algebraic forms agree.
    """
    j, k, sign = pair
    c = _combo(3, j, k, sign)
    e = _unit(3, i)
    out = []
    for q in ("x", "y"):
        den = t.var(q, e)
        _positive(den, f"one-mode inference from mode {i}")
        cv = t.cov(q, e, c)
        out.append(t.var(q, c) - cv * cv / den)
    return EprValue(out[0], out[1], out[0] * out[1], _sign(sign))


def _best(a: EprValue, b: EprValue) -> EprValue:
    pick = a.product <= b.product
    return EprValue(
        np.where(pick, a.vinf_x, b.vinf_x),
        np.where(pick, a.vinf_y, b.vinf_y),
        np.where(pick, a.product, b.product),
        np.where(pick, a.sign, b.sign),
    )


def _jsonable(x):
    arr = np.asarray(x)
    if arr.dtype == object:
        arr = arr.astype(float)
    return arr.tolist()


@dataclass(frozen=True)
class CriterionReport:
    """All witnesses for one table, with flags against their bounds.

    For the EPR families the better of the two sign choices is kept and the
    winning sign is recorded.
    """

    v12: np.ndarray
    v13: np.ndarray
    v23: np.ndarray
    duan: Dict[Tuple[int, int], np.ndarray]
    epr_two_mode: Dict[int, EprValue]
    epr_one_mode: Dict[Tuple[int, int], EprValue]
    xy_correlations_present: bool = False
    flags: dict = field(init=False)
    tripartite_confirmed: dict = field(init=False)

    def __post_init__(self):
        vlf = {"v12": self.v12 < VLF_BOUND, "v13": self.v13 < VLF_BOUND,
               "v23": self.v23 < VLF_BOUND}
        flags = {
            "vlf": vlf,
            "duan": {p: v < DUAN_BOUND for p, v in self.duan.items()},
            "epr_two_mode": {i: e.product < EPR_TWO_MODE_BOUND
                             for i, e in self.epr_two_mode.items()},
            "epr_one_mode": {p: e.product < EPR_ONE_MODE_BOUND
                             for p, e in self.epr_one_mode.items()},
        }
        n_vlf = sum(np.asarray(f, dtype=int) for f in vlf.values())
        confirmed = {
            "vlf": n_vlf >= 2,
            "epr_two_mode": np.logical_and.reduce(list(flags["epr_two_mode"].values())),
            "epr_one_mode": np.logical_and.reduce(list(flags["epr_one_mode"].values())),
        }
        object.__setattr__(self, "flags", flags)
        object.__setattr__(self, "tripartite_confirmed", confirmed)

    @property
    def permutation_symmetric(self) -> bool:
        groups = [
            [self.v12, self.v13, self.v23],
            [e.product for e in self.epr_two_mode.values()],
            [e.product for e in self.epr_one_mode.values()],
        ]
        for g in groups:
            ref = np.asarray(g[0], dtype=float)
            for other in g[1:]:
                if not np.allclose(np.asarray(other, dtype=float), ref, rtol=1e-10, atol=1e-12):
                    return False
        return True

    def to_dict(self) -> dict:
        def pair_key(p):
            return f"{p[0]}-{p[1]}"

        def epr(e: EprValue):
            return {"product": _jsonable(e.product), "vinf_x": _jsonable(e.vinf_x),
                    "vinf_y": _jsonable(e.vinf_y),
                    "sign": np.where(np.asarray(e.sign) > 0, "+", "-").tolist()}

        f = self.flags
        return {
            "v12": _jsonable(self.v12),
            "v13": _jsonable(self.v13),
            "v23": _jsonable(self.v23),
            "duan": {pair_key(p): _jsonable(v) for p, v in self.duan.items()},
            "epr_two_mode": {str(i): epr(e) for i, e in self.epr_two_mode.items()},
            "epr_one_mode": {pair_key(p): epr(e) for p, e in self.epr_one_mode.items()},
            "flags": {
                "vlf": {k: _jsonable(v) for k, v in f["vlf"].items()},
                "duan": {pair_key(p): _jsonable(v) for p, v in f["duan"].items()},
                "epr_two_mode": {str(i): _jsonable(v) for i, v in f["epr_two_mode"].items()},
                "epr_one_mode": {pair_key(p): _jsonable(v) for p, v in f["epr_one_mode"].items()},
            },
            "tripartite_confirmed": {k: _jsonable(v) for k, v in self.tripartite_confirmed.items()},
            "xy_correlations_present": self.xy_correlations_present,
            "permutation_symmetric": self.permutation_symmetric,
        }


def full_report(t: MomentTable) -> CriterionReport:
    _need_three(t)
    v12, v13, v23 = vlf_triplet(t)
    duan = {p: duan_pair(t, *p) for p in PAIRS}
    two, one = {}, {}
    for i in range(3):
        j, k = (m for m in range(3) if m != i)
        two[i] = _best(epr_two_mode(t, i, (j, k, 1)), epr_two_mode(t, i, (j, k, -1)))
        one[(j, k)] = _best(epr_one_mode(t, (j, k, 1), i), epr_one_mode(t, (j, k, -1), i))
    return CriterionReport(v12, v13, v23, duan, two, one,
                           xy_correlations_present=t.has_xy_correlations)

