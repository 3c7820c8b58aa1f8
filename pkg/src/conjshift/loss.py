"""Lossy versions of the separable and entangled schemes.

Per-parameter Fisher information of a Gaussian location model whose readout
carries a fraction ``k`` of the shift with variance ``V`` is ``k**2 / V``.
For the balanced schemes (half the probes per quadrature, or half the shift
per port) this is ``1 / (2 V)``, which reduces to ``e^{2r}`` without loss.
That normalization is used for every Fisher matrix here, so that the separable
and entangled numbers can be divided into one another.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from . import gaussian as gc
from .fisher import FisherMatrix


@dataclass(frozen=True)
class LossConfig:
    eta1: float
    eta2: float

    def __post_init__(self):
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class InterferometerParams:
    """Transmission amplitudes of the two beam splitters.

    ``t`` may be negative: its sign, together with ``r = sqrt(1 - t**2) >= 0``,
    selects the relative phase of the splitter. The symmetric 50:50 setup of
    the plain entangled scheme is ``t1 = -t2 = +-1/sqrt(2)`` in this
    parametrization.
    """

    t1: float
    t2: float

    def __post_init__(self):
        for name in ("t1", "t2"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [-1, 1], got {v}")

    @property
    def r1(self) -> float:
        return math.sqrt(1.0 - self.t1**2)

    @property
    def r2(self) -> float:
        return math.sqrt(1.0 - self.t2**2)


@dataclass(frozen=True)
class SqueezingSpec:
    vs: float
    va: float

    def __post_init__(self):
        if not (self.vs > 0 and self.va > 0):
            raise ValueError("variances must be positive")
        if self.vs * self.va < 0.25 - 1e-12:
            raise gc.PhysicalityError(
                f"V_S * V_A = {self.vs * self.va:.6g} violates the uncertainty bound 1/4")
        if self.vs > self.va:
            raise ValueError("V_S must not exceed V_A")

    @classmethod
    def from_r(cls, r: float) -> "SqueezingSpec":
        return cls(math.exp(-2 * r) / 2, math.exp(2 * r) / 2)


RATIO_MAP_SPEC = SqueezingSpec.from_r(1.0)


def v_out(eta1: float, vs: float) -> float:
    """Variance of the squeezed quadrature after a loss channel."""
    return eta1 * vs + (1.0 - eta1) / 2


def cfi_separable_lossy(eta1: float, vs: float) -> FisherMatrix:
    return FisherMatrix(np.diag([1.0 / (2 * v_out(eta1, vs))] * 2))


def _y(loss: LossConfig) -> np.ndarray:
    return np.diag(np.sqrt([loss.eta1, loss.eta1, loss.eta2, loss.eta2]))


def sigma_in(spec: SqueezingSpec) -> np.ndarray:
    return np.diag([spec.vs, spec.va, spec.va, spec.vs])


def sigma_out(spec: SqueezingSpec, loss: LossConfig) -> np.ndarray:
    """Covariance before the homodynes, evaluated as the closed matrix expression.

    ``O^T Y O Sigma O^T Y O + I/2 - O^T Y^2 O / 2`` with ``O`` the balanced
    splitter and ``Y`` the per-arm amplitude transmissions.
    """
    o = gc.beamsplitter_matrix(2, 0, 1, 1 / math.sqrt(2))
    y = _y(loss)
    m = o.T @ y @ o
    out = m @ sigma_in(spec) @ o.T @ y @ o + np.eye(4) / 2 - o.T @ y @ y @ o / 2
    gc.GaussianState(np.zeros(4), out).check_physical()
    return out


def sigma_out_pipeline(spec: SqueezingSpec, loss: LossConfig) -> np.ndarray:
    """Same covariance built step by step: splitter, per-arm loss, inverse splitter."""
    s = gc.GaussianState(np.zeros(4), sigma_in(spec))
    s = gc.apply_beamsplitter(s, 0, 1)
    s = gc.apply_loss(s, [loss.eta1, loss.eta2])
    s = gc.apply_beamsplitter(s, 1, 0)
    return s.check_physical().cov


def v_m(spec: SqueezingSpec, loss: LossConfig) -> float:
    """Homodyne variance of both ports of the lossy entangled scheme."""
    e1, e2 = loss.eta1, loss.eta2
    return 0.25 * ((spec.vs + spec.va - 1) * (e1 + e2)
                   + 2 * math.sqrt(e1 * e2) * (spec.vs - spec.va) + 2)


def cfi_entangled_lossy(spec: SqueezingSpec, loss: LossConfig) -> FisherMatrix:
    return FisherMatrix(np.diag([1.0 / (2 * v_m(spec, loss))] * 2))


def optimal_eta2(spec: SqueezingSpec, eta1: float) -> float:
    """Reference-arm transmission minimising ``v_m`` at fixed ``eta1``, capped at 1."""
    denom = spec.va + spec.vs - 1
    if denom <= 0:
        raise ValueError("V_A + V_S must exceed 1 for an interior optimum")
    root = math.sqrt(eta1) * (spec.va - spec.vs) / denom
    return min(1.0, root * root)


def interferometer_variances(spec: SqueezingSpec, loss: LossConfig,
                             ifo: InterferometerParams) -> tuple[float, float]:
    t1, r1, t2, r2 = ifo.t1, ifo.r1, ifo.t2, ifo.r2
    e1, e2, vs, va = loss.eta1, loss.eta2, spec.vs, spec.va
    cross = 2 * t1 * r1 * t2 * r2 * math.sqrt(e1 * e2) * (va - vs)
    v1 = (cross + (1 - t2**2 * e1 - r2**2 * e2) / 2
          + e2 * r2**2 * (t1**2 * va + r1**2 * vs) + e1 * t2**2 * (r1**2 * va + t1**2 * vs))
    v2 = (cross + (1 - t2**2 * e2 - r2**2 * e1) / 2
          + e1 * r2**2 * (t1**2 * va + r1**2 * vs) + e2 * t2**2 * (r1**2 * va + t1**2 * vs))
    return v1, v2


def cfi_general_interferometer(spec: SqueezingSpec, loss: LossConfig,
                               ifo: InterferometerParams) -> FisherMatrix:
    v1, v2 = interferometer_variances(spec, loss, ifo)
    if v1 <= 0 or v2 <= 0:
        raise gc.PhysicalityError(f"non-positive homodyne variance ({v1}, {v2})")
    return FisherMatrix(np.diag([ifo.t2**2 / v1, ifo.r2**2 / v2]))


def _signed_splitter(state, t):
    # O(t) with t < 0 equals -O(|t|)^T; the overall sign only flips the means
    if t >= 0:
        return gc.apply_beamsplitter(state, 0, 1, t)
    s = gc.apply_beamsplitter(state, 1, 0, -t)
    return gc.GaussianState(-s.mean, s.cov)


def interferometer_pipeline_state(spec: SqueezingSpec, loss: LossConfig,
                                  ifo: InterferometerParams, mu: float = 0.0,
                                  nu: float = 0.0) -> gc.GaussianState:
    """Moment pipeline of the general interferometer, displacement on arm 0."""
    s = gc.GaussianState(np.zeros(4), sigma_in(spec))
    s = _signed_splitter(s, ifo.t1)
    s = gc.apply_loss(s, [loss.eta1, loss.eta2])
    s = gc.apply_displacement(s, 0, mu, nu)
    return _signed_splitter(s, ifo.t2)


def _det_ce(t1, t2, spec: SqueezingSpec, loss: LossConfig):
    """Vectorised det of the general-interferometer CFI; non-physical cells give 0."""
    t1, t2 = np.broadcast_arrays(np.asarray(t1, float), np.asarray(t2, float))
    r1 = np.sqrt(np.clip(1 - t1**2, 0, None))
    r2 = np.sqrt(np.clip(1 - t2**2, 0, None))
    e1, e2, vs, va = loss.eta1, loss.eta2, spec.vs, spec.va
    cross = 2 * t1 * r1 * t2 * r2 * np.sqrt(e1 * e2) * (va - vs)
    v1 = (cross + (1 - t2**2 * e1 - r2**2 * e2) / 2
          + e2 * r2**2 * (t1**2 * va + r1**2 * vs) + e1 * t2**2 * (r1**2 * va + t1**2 * vs))
    v2 = (cross + (1 - t2**2 * e2 - r2**2 * e1) / 2
          + e1 * r2**2 * (t1**2 * va + r1**2 * vs) + e2 * t2**2 * (r1**2 * va + t1**2 * vs))
    with np.errstate(divide="ignore", invalid="ignore"):
        det = (t2**2 / v1) * (r2**2 / v2)
    return np.where((v1 > 0) & (v2 > 0), det, 0.0)


@dataclass(frozen=True)
class DeterminantOptimum:
    ifo: InterferometerParams
    ratio: float
    det_entangled: float
    det_separable: float


def separable_determinant(spec: SqueezingSpec, eta1: float) -> float:
    """det of the swapping-scheme CFI, which only uses arm 1."""
    return float(np.linalg.det(cfi_separable_lossy(eta1, spec.vs).m))


def optimize_determinant_ratio(spec: SqueezingSpec, loss: LossConfig,
                               res: int = 101, xatol: float = 1e-6,
                               fatol: float = 1e-13) -> DeterminantOptimum:
    """Maximise det C_E over both splitters and divide by the separable det.

    A ``res x res`` grid over (t1, t2) in [-1, 1]^2 seeds a Nelder-Mead polish.
    """
    ts = np.linspace(-1.0, 1.0, res)
    grid = _det_ce(ts[:, None], ts[None, :], spec, loss)
    i, j = np.unravel_index(np.argmax(grid), grid.shape)

    def neg(x):
        ifo = InterferometerParams(min(1.0, max(-1.0, x[0])), min(1.0, max(-1.0, x[1])))
        v1, v2 = interferometer_variances(spec, loss, ifo)
        if v1 <= 0 or v2 <= 0:
            return 0.0
        return -(ifo.t2**2 / v1) * (ifo.r2**2 / v2)

    step = 2.0 / (res - 1)
    x0 = np.array([ts[i], ts[j]])
    simplex = np.array([x0, x0 + [step, 0], x0 + [0, step]])
    sol = optimize.minimize(neg, x0, method="Nelder-Mead",
                            options={"xatol": xatol, "fatol": fatol, "initial_simplex": simplex,
                                     "maxiter": 4000})
    t1, t2 = np.clip(sol.x, -1, 1)
    best = -sol.fun
    if grid[i, j] > best:
        t1, t2, best = ts[i], ts[j], float(grid[i, j])
    det_f = separable_determinant(spec, loss.eta1)
    return DeterminantOptimum(InterferometerParams(float(t1), float(t2)), float(best / det_f),
                              float(best), det_f)


RATIO_MAP_ETAS = np.linspace(0.01, 1.0, 101)


def _grid_row(spec: SqueezingSpec, eta1: float, etas, res: int):
    out = []
    for eta2 in etas:
        opt = optimize_determinant_ratio(spec, LossConfig(eta1, float(eta2)), res)
        out.append((eta1, float(eta2), opt.ratio, opt.ifo.t1, opt.ifo.t2))
    return out


def determinant_ratio_grid(spec: SqueezingSpec = RATIO_MAP_SPEC, etas=None, res: int = 101,
                           workers: int = 1) -> np.ndarray:
    """Optimised determinant ratio on an (eta1, eta2) grid.

    Returns rows ``(eta1, eta2, ratio, t1_opt, t2_opt)``, row-major with eta1
    as the slow index. The output does not depend on ``workers``.
    """
    etas = RATIO_MAP_ETAS if etas is None else np.asarray(etas, dtype=float)
    args = [(spec, float(e1), etas, res) for e1 in etas]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_grid_row, *zip(*args)))
    else:
        rows = [_grid_row(*a) for a in args]
    return np.array([cell for row in rows for cell in row])


def fock_qfi_lossy(n: int, eta: float) -> float:
    """Quantum Fisher information of a Fock probe after loss, averaged over photon survival."""
    if int(n) != n or n < 0:
        raise ValueError("photon number must be a non-negative integer")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    n = int(n)
    k = np.arange(n + 1)
    if n <= 50:
        pmf = np.array([math.comb(n, int(j)) * eta**j * (1 - eta) ** (n - j) for j in k])
    else:
        pmf = stats.binom.pmf(k, n, eta)
    return float(2 * np.sum(pmf * (2 * k + 1)))


def cfi_separable_amplitude_lossy(r: float, eta1: float) -> float:
    """Amplitude Fisher information of balanced squeezed probes after loss."""
    return 1.0 / (2 * v_out(eta1, math.exp(-2 * r) / 2))


def amplitude_comparison(eta: float, nmax: int) -> np.ndarray:
    """Rows ``(energy, fock_fi, squeezed_fi)`` for energies 1..nmax at matched mean photon number."""
    rows = []
    for n in range(1, nmax + 1):
        r = math.asinh(math.sqrt(n))
        rows.append((n, fock_qfi_lossy(n, eta), cfi_separable_amplitude_lossy(r, eta)))
    return np.array(rows, dtype=float)
