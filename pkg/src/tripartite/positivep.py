"""Positive-P trajectory simulation of three concurrent down-conversion processes.

Twelve complex phase-space variables per trajectory: signal amplitudes
``alpha_j`` and their independent partners ``alpha_j^+``, and pump amplitudes
``beta_k``, ``beta_k^+``.  Pump ``k`` drives the signal pair ``PAIRS[k]``:

    d beta_k   = -chi alpha_i alpha_j dt
    d alpha_i  = chi beta_k alpha_j^+ dt + sqrt(chi beta_k) dW_k
    d alpha_j  = chi beta_k alpha_i^+ dt + sqrt(chi beta_k) conj(dW_k)

(and the same with every variable replaced by its ``+`` partner, driven by
three further complex Wiener increments).  ``E[dW dW*] = dt`` and
``E[dW dW] = 0``.  Integration is fixed-step Euler-Maruyama in the Ito form.

Ensemble averages are normally ordered.  Converting to symmetric quadrature
moments adds 1 to every single-mode ``X`` or ``Y`` variance and nothing to
covariances between distinct modes or between ``X_i`` and ``Y_i``.

Determinism: trajectories are processed in blocks of ``BLOCK_SIZE``; block
``b`` draws from an SFC64 stream seeded by ``SeedSequence(seed, spawn_key=(b,))``
and block partial sums are merged in block order, so the output depends only
on the configuration, not on the number of worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numba as nb
import numpy as np

from . import criteria
from .gaussian import MomentTable

__all__ = [
    "PAIRS",
    "BLOCK_SIZE",
    "PPState",
    "SimConfig",
    "EnsembleAccumulator",
    "EnsembleResult",
    "SimulationError",
    "drift",
    "noise_increment",
    "run_ensemble",
    "conserved_quantity",
    "deterministic_invariant_check",
]

# pump k couples signal modes PAIRS[k]; the first mode of a pair takes dW_k,
# the second takes conj(dW_k)
PAIRS = ((0, 1), (1, 2), (0, 2))

BLOCK_SIZE = 4096

# for signal mode i: (pump, partner) of its two coupling terms
_K1 = np.array([0, 0, 1])
_J1 = np.array([1, 0, 1])
_K2 = np.array([2, 1, 2])
_J2 = np.array([2, 2, 0])


class SimulationError(RuntimeError):
    """The ensemble could not produce an estimate (e.g. every trajectory diverged)."""


@dataclass
class PPState:
    """Phase-space variables; each field has shape ``(3, ...)``."""

    alpha: np.ndarray
    alpha_plus: np.ndarray
    beta: np.ndarray
    beta_plus: np.ndarray

    @classmethod
    def from_array(cls, z) -> "PPState":
        z = np.asarray(z, dtype=complex)
        return cls(z[0:3], z[3:6], z[6:9], z[9:12])

    def to_array(self) -> np.ndarray:
        return np.concatenate([np.asarray(v, dtype=complex)
                               for v in (self.alpha, self.alpha_plus, self.beta, self.beta_plus)])

    @classmethod
    def coherent(cls, beta0, alpha0=0.0, n=None) -> "PPState":
        """Coherent initial state (partners equal to conjugates)."""
        shape = (3,) if n is None else (3, n)
        a = np.full(shape, alpha0, dtype=complex)
        b = np.full(shape, beta0, dtype=complex)
        return cls(a, a.conj(), b, b.conj())


def _drift(z, chi):
    a, ap, b, bp = z[0:3], z[3:6], z[6:9], z[9:12]
    out = np.empty_like(z)
    out[0:3] = chi * (b[_K1] * ap[_J1] + b[_K2] * ap[_J2])
    out[3:6] = chi * (bp[_K1] * a[_J1] + bp[_K2] * a[_J2])
    out[6] = -chi * a[0] * a[1]
    out[7] = -chi * a[1] * a[2]
    out[8] = -chi * a[0] * a[2]
    out[9] = -chi * ap[0] * ap[1]
    out[10] = -chi * ap[1] * ap[2]
    out[11] = -chi * ap[0] * ap[2]
    return out


def _noise(z, chi, dw):
    """Map six complex Wiener increments ``dw`` onto the signal variables."""
    s = np.sqrt(chi * z[6:9])
    sp = np.sqrt(chi * z[9:12])
    w, wp = dw[0:3], dw[3:6]
    out = np.zeros_like(z)
    out[0] = s[0] * w[0] + s[2] * w[2]
    out[1] = s[0] * w[0].conj() + s[1] * w[1]
    out[2] = s[1] * w[1].conj() + s[2] * w[2].conj()
    out[3] = sp[0] * wp[0] + sp[2] * wp[2]
    out[4] = sp[0] * wp[0].conj() + sp[1] * wp[1]
    out[5] = sp[1] * wp[1].conj() + sp[2] * wp[2].conj()
    return out


@nb.njit(cache=True, fastmath=False)
def _euler_kernel(z, g, chi, dt, noise):
    """One in-place Euler-Maruyama step; ``g`` holds 12 standard normals per
    trajectory (real then imaginary parts of the six increments)."""
    h = math.sqrt(0.5 * dt)
    n = z.shape[1]
    for t in range(n):
        a0, a1, a2 = z[0, t], z[1, t], z[2, t]
        p0, p1, p2 = z[3, t], z[4, t], z[5, t]
        b0, b1, b2 = z[6, t], z[7, t], z[8, t]
        q0, q1, q2 = z[9, t], z[10, t], z[11, t]
        da0 = chi * (b0 * p1 + b2 * p2) * dt
        da1 = chi * (b0 * p0 + b1 * p2) * dt
        da2 = chi * (b1 * p1 + b2 * p0) * dt
        dp0 = chi * (q0 * a1 + q2 * a2) * dt
        dp1 = chi * (q0 * a0 + q1 * a2) * dt
        dp2 = chi * (q1 * a1 + q2 * a0) * dt
        if noise:
            w0 = complex(g[0, t], g[6, t]) * h
            w1 = complex(g[1, t], g[7, t]) * h
            w2 = complex(g[2, t], g[8, t]) * h
            v0 = complex(g[3, t], g[9, t]) * h
            v1 = complex(g[4, t], g[10, t]) * h
            v2 = complex(g[5, t], g[11, t]) * h
            s0, s1, s2 = np.sqrt(chi * b0), np.sqrt(chi * b1), np.sqrt(chi * b2)
            r0, r1, r2 = np.sqrt(chi * q0), np.sqrt(chi * q1), np.sqrt(chi * q2)
            da0 += s0 * w0 + s2 * w2
            da1 += s0 * w0.conjugate() + s1 * w1
            da2 += s1 * w1.conjugate() + s2 * w2.conjugate()
            dp0 += r0 * v0 + r2 * v2
            dp1 += r0 * v0.conjugate() + r1 * v1
            dp2 += r1 * v1.conjugate() + r2 * v2.conjugate()
        z[6, t] = b0 - chi * a0 * a1 * dt
        z[7, t] = b1 - chi * a1 * a2 * dt
        z[8, t] = b2 - chi * a0 * a2 * dt
        z[9, t] = q0 - chi * p0 * p1 * dt
        z[10, t] = q1 - chi * p1 * p2 * dt
        z[11, t] = q2 - chi * p0 * p2 * dt
        z[0, t] = a0 + da0
        z[1, t] = a1 + da1
        z[2, t] = a2 + da2
        z[3, t] = p0 + dp0
        z[4, t] = p1 + dp1
        z[5, t] = p2 + dp2


def drift(s: PPState, chi: float) -> PPState:
    return PPState.from_array(_drift(s.to_array(), chi))


def wiener_increments(rng: np.random.Generator, dt: float, n=None) -> np.ndarray:
    """Six independent complex increments with ``E|dW|^2 = dt``, ``E dW^2 = 0``."""
    shape = (12,) if n is None else (12, n)
    g = rng.standard_normal(shape) * math.sqrt(0.5 * dt)
    return g[0:6] + 1j * g[6:12]


def noise_increment(s: PPState, chi: float, dt: float, rng: np.random.Generator) -> PPState:
    z = s.to_array()
    n = None if z.ndim == 1 else z.shape[1]
    return PPState.from_array(_noise(z, chi, wiener_increments(rng, dt, n)))


@dataclass(frozen=True)
class SimConfig:
    """Ensemble configuration.

    ``dt`` and ``zeta_max`` are in scaled time ``zeta = chi * beta0 * t``.
    Results are recorded on ``n_points`` equally spaced values of ``zeta``;
    ``dt`` is rounded down so that an integer number of steps separates them.
    """

    chi: float = 1e-2
    beta0: float = 1e3
    n_traj: int = 100_000
    dt: float = 1e-4
    zeta_max: float = 0.4
    seed: int = 0
    batch_count: int = 32
    n_points: int = 21
    alpha0: float = 0.0
    noise: bool = True
    divergence_factor: float = 1e6
    divergence_tolerance: float = 1e-3

    def __post_init__(self):
        if not (self.chi > 0 and self.beta0 > 0):
            raise ValueError("chi and beta0 must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.zeta_max > 0:
            raise ValueError("zeta_max must be > 0")
        if self.batch_count < 2:
            raise ValueError("batch_count must be >= 2")
        if self.n_traj < self.batch_count:
            raise ValueError("n_traj must be >= batch_count")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def steps_per_point(self) -> int:
        return max(1, int(round(self.zeta_max / (self.n_points - 1) / self.dt)))

    @property
    def dzeta(self) -> float:
        """Step actually used, in scaled time."""
        return self.zeta_max / ((self.n_points - 1) * self.steps_per_point)

    @property
    def dt_physical(self) -> float:
        return self.dzeta / (self.chi * self.beta0)

    @property
    def zeta(self) -> np.ndarray:
        return np.linspace(0.0, self.zeta_max, self.n_points)

    @property
    def n_blocks(self) -> int:
        return -(-self.n_traj // BLOCK_SIZE)


# accumulator layout (rows of the per-trajectory feature matrix)
_F_X = slice(0, 3)
_F_Y = slice(3, 6)
_F_XX = slice(6, 15)
_F_YY = slice(15, 24)
_F_XY = slice(24, 33)
_F_A = slice(33, 39)      # Re/Im alpha
_F_AP = slice(39, 45)     # Re/Im alpha^+
_F_B = slice(45, 48)      # Re beta
N_FEATURES = 48


def _features(z) -> np.ndarray:
    a, ap = z[0:3], z[3:6]
    x = a + ap
    y = -1j * (a - ap)
    n = z.shape[1]
    f = np.empty((N_FEATURES, n))
    f[_F_X] = x.real
    f[_F_Y] = y.real
    f[_F_XX] = (x[:, None, :] * x[None, :, :]).real.reshape(9, n)
    f[_F_YY] = (y[:, None, :] * y[None, :, :]).real.reshape(9, n)
    f[_F_XY] = (x[:, None, :] * y[None, :, :]).real.reshape(9, n)
    f[_F_A] = np.concatenate([a.real, a.imag])
    f[_F_AP] = np.concatenate([ap.real, ap.imag])
    f[_F_B] = z[6:9].real
    return f


@dataclass
class EnsembleAccumulator:
    """Per-(grid point, batch) sums of trajectory features and counts.

    Accumulators add across blocks; pooled moments do not depend on how
    trajectories are split into batches.
    """

    sums: np.ndarray      # (n_points, batch_count, N_FEATURES)
    counts: np.ndarray    # (batch_count,)

    @classmethod
    def empty(cls, n_points, batch_count) -> "EnsembleAccumulator":
        return cls(np.zeros((n_points, batch_count, N_FEATURES)), np.zeros(batch_count))

    def merge(self, other: "EnsembleAccumulator") -> "EnsembleAccumulator":
        return EnsembleAccumulator(self.sums + other.sums, self.counts + other.counts)

    def pooled(self) -> "EnsembleAccumulator":
        return EnsembleAccumulator(self.sums.sum(axis=1, keepdims=True),
                                   self.counts.sum(keepdims=True))

    def moments(self) -> MomentTable:
        """Symmetric quadrature moments, shape ``(n_points, n_batches)``."""
        if np.any(self.counts <= 0):
            raise SimulationError("empty batch: no surviving trajectories")
        mean = self.sums / self.counts[None, :, None]
        mx, my = mean[..., _F_X], mean[..., _F_Y]
        eye = np.eye(3)
        vxx = mean[..., _F_XX].reshape(mean.shape[:2] + (3, 3)) - mx[..., :, None] * mx[..., None, :] + eye
        vyy = mean[..., _F_YY].reshape(mean.shape[:2] + (3, 3)) - my[..., :, None] * my[..., None, :] + eye
        vxy = mean[..., _F_XY].reshape(mean.shape[:2] + (3, 3)) - mx[..., :, None] * my[..., None, :]
        vxx = 0.5 * (vxx + np.swapaxes(vxx, -1, -2))
        vyy = 0.5 * (vyy + np.swapaxes(vyy, -1, -2))
        return MomentTable(vxx, vyy, vxy)

    def conjugacy_gap(self) -> np.ndarray:
        """``max_j |<alpha_j^+> - conj(<alpha_j>)|`` per grid point and batch."""
        mean = self.sums / self.counts[None, :, None]
        a = mean[..., 33:36] + 1j * mean[..., 36:39]
        ap = mean[..., 39:42] + 1j * mean[..., 42:45]
        return np.abs(ap - a.conj()).max(axis=-1)


def _batch_bounds(cfg: SimConfig) -> np.ndarray:
    """Global trajectory index at which each batch starts (plus the end)."""
    b = np.arange(cfg.batch_count + 1)
    return (b * cfg.n_traj) // cfg.batch_count


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.SFC64(np.random.SeedSequence(seed, spawn_key=(block,))))


_NO_NOISE = np.zeros((12, 0))


def _run_block(cfg: SimConfig, block: int, exclude: Optional[np.ndarray] = None):
    """Integrate one block; return its accumulator and a diverged-trajectory mask."""
    start = block * BLOCK_SIZE
    stop = min(cfg.n_traj, start + BLOCK_SIZE)
    n = stop - start
    rng = _block_rng(cfg.seed, block)
    z = PPState.coherent(cfg.beta0, cfg.alpha0, n).to_array()

    bounds = _batch_bounds(cfg)
    labels = np.searchsorted(bounds, np.arange(start, stop), side="right") - 1
    present, first = np.unique(labels, return_index=True)
    keep = np.ones(n, dtype=bool) if exclude is None else ~exclude
    counts = np.zeros(cfg.batch_count)
    counts[present] = np.add.reduceat(keep.astype(float), first)

    acc = np.zeros((cfg.n_points, cfg.batch_count, N_FEATURES))
    limit = cfg.divergence_factor * cfg.beta0
    diverged = np.zeros(n, dtype=bool)
    dt = cfg.dt_physical
    chi = cfg.chi

    def record(p):
        bad = ~np.isfinite(z).all(axis=0) | (np.abs(z) > limit).any(axis=0)
        diverged[bad] = True
        z[:, diverged] = 0.0
        f = _features(z)
        f[:, ~keep] = 0.0
        acc[p, present] = np.add.reduceat(f, first, axis=1).T

    with np.errstate(over="ignore", invalid="ignore"):
        record(0)
        for p in range(1, cfg.n_points):
            for _ in range(cfg.steps_per_point):
                g = rng.standard_normal((12, n)) if cfg.noise else _NO_NOISE
                _euler_kernel(z, g, chi, dt, cfg.noise)
            record(p)
    return EnsembleAccumulator(acc, counts), diverged


def _run_block_checked(args):
    cfg, block = args
    acc, diverged = _run_block(cfg, block)
    if diverged.any():
        # same stream again, now leaving the diverged trajectories out everywhere
        acc, _ = _run_block(cfg, block, exclude=diverged)
    return acc, int(diverged.sum())


@dataclass
class EnsembleResult:
    """Time series of ensemble estimates with batch-mean standard errors.

    ``v3`` is the mean of the three VLF combinations (equal by symmetry);
    EPR products use the ``+`` combination and are averaged over the three
    index choices.
    """

    config: SimConfig
    zeta: np.ndarray
    estimates: dict
    errors: dict
    divergence_count: int
    moments: MomentTable = field(repr=False)
    accumulator: EnsembleAccumulator = field(repr=False)

    @property
    def divergence_fraction(self) -> float:
        return self.divergence_count / self.config.n_traj

    @property
    def divergence_flagged(self) -> bool:
        return self.divergence_fraction > self.config.divergence_tolerance

    def __getitem__(self, key):
        return self.estimates[key]

    def columns(self) -> dict:
        cols = {"zeta": self.zeta}
        for k, v in self.estimates.items():
            cols[k] = v
            cols[k + "_err"] = self.errors[k]
        return cols


def _observables(t: MomentTable) -> dict:
    v12, v13, v23 = criteria.vlf_triplet(t)
    two = []
    one = []
    for i in range(3):
        j, k = (m for m in range(3) if m != i)
        two.append(criteria.epr_two_mode(t, i, (j, k, +1)).product)
        one.append(criteria.epr_one_mode(t, (j, k, +1), i).product)
    epr_two = sum(two) / 3
    epr_one = sum(one) / 3
    return {
        "v3": (v12 + v13 + v23) / 3,
        "v12": v12,
        "v13": v13,
        "v23": v23,
        "epr_one": epr_one,
        "epr_two": epr_two,
        "epr_residual": epr_one - 4 * epr_two,
    }


def run_ensemble(cfg: SimConfig, workers: int = 1) -> EnsembleResult:
    """Integrate ``cfg.n_traj`` trajectories and estimate the criteria vs ``zeta``."""
    jobs = [(cfg, b) for b in range(cfg.n_blocks)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block_checked, jobs))
    else:
        parts = [_run_block_checked(j) for j in jobs]

    acc = EnsembleAccumulator.empty(cfg.n_points, cfg.batch_count)
    n_div = 0
    for part, k in parts:
        acc = acc.merge(part)
        n_div += k
    if n_div >= cfg.n_traj:
        raise SimulationError("all trajectories diverged")

    pooled = acc.pooled()
    est = {k: v[:, 0] for k, v in _observables(pooled.moments()).items()}
    per_batch = _observables(acc.moments())
    err = {k: v.std(axis=1, ddof=1) / math.sqrt(cfg.batch_count) for k, v in per_batch.items()}
    gap_b = acc.conjugacy_gap()
    est["conj_gap"] = pooled.conjugacy_gap()[:, 0]
    err["conj_gap"] = gap_b.std(axis=1, ddof=1) / math.sqrt(cfg.batch_count)
    return EnsembleResult(cfg, cfg.zeta, est, err, n_div, pooled.moments()[:, 0], acc)


def conserved_quantity(z) -> np.ndarray:
    """``sum |beta|^2 + (1/2) sum |alpha|^2`` for conjugate-pair data."""
    z = np.asarray(z)
    return (np.abs(z[6:9]) ** 2).sum(axis=0) + 0.5 * (np.abs(z[0:3]) ** 2).sum(axis=0)


def deterministic_invariant_check(cfg: SimConfig) -> float:
    """Max relative drift of the conserved quantity along a noiseless run.

    Uses a single trajectory started from ``alpha_j = cfg.alpha0``,
    ``beta_j = cfg.beta0`` with partners set to the conjugates.
    """
    if cfg.alpha0 == 0:
        return 0.0
    z = PPState.coherent(cfg.beta0, cfg.alpha0, 1).to_array()
    dt = cfg.dt_physical
    e0 = conserved_quantity(z)[0]
    worst = 0.0
    n_steps = cfg.steps_per_point * (cfg.n_points - 1)
    for _ in range(n_steps):
        z = z + _drift(z, cfg.chi) * dt
        worst = max(worst, abs(conserved_quantity(z)[0] - e0))
    return worst / e0


def noiseless(cfg: SimConfig, **changes) -> SimConfig:
    return replace(cfg, noise=False, **changes)
