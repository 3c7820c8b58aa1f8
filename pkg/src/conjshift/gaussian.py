"""Gaussian states of bosonic modes described by first and second moments.

Conventions used throughout the package:

* hbar = 1 with [X, P] = i, so the vacuum has var X = var P = 1/2.
* Quadratures are interleaved, ``(x1, p1, x2, p2, ...)``.
* A beam splitter with transmission amplitude ``t`` (and ``r = sqrt(1 - t**2)``)
  maps ``x_a -> t x_a + r x_b`` and ``x_b -> -r x_a + t x_b``, identically for
  the momenta. Calling it with the mode indices swapped gives the inverse.

All states are immutable; every operation returns a new state.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-9
MIN_VARIANCE = 1e-15
MAX_SQUEEZING = 25.0

QUADRATURES = ("x", "p")
BALANCED = 1 / np.sqrt(2)


class PhysicalityError(ValueError):
    """Raised when a covariance matrix violates the uncertainty principle."""


def symplectic_form(modes: int) -> np.ndarray:
    """Standard symplectic form for interleaved ordering."""
    return np.kron(np.eye(modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of ``modes`` bosonic modes."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size % 2 or cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"inconsistent shapes: mean {mean.shape}, cov {cov.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("state moments must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def modes(self) -> int:
        return self.mean.size // 2

    def min_uncertainty_eigenvalue(self) -> float:
        """Smallest eigenvalue of ``cov + (i/2) Omega``."""
        herm = self.cov + 0.5j * symplectic_form(self.modes)
        return float(np.linalg.eigvalsh(herm).min())

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return self.min_uncertainty_eigenvalue() >= -tol

    def check_physical(self, tol: float = PHYSICALITY_TOL) -> "GaussianState":
        lam = self.min_uncertainty_eigenvalue()
        if lam < -tol:
            raise PhysicalityError(
                f"cov + i/2 Omega has eigenvalue {lam:.3e} < -{tol:g}"
            )
        return self

    def purity_determinant(self) -> float:
        """det(2 cov); equals 1 for pure states."""
        return float(np.linalg.det(2.0 * self.cov))


def vacuum(modes: int = 1) -> GaussianState:
    if modes < 1:
        raise ValueError("need at least one mode")
    return GaussianState(np.zeros(2 * modes), 0.5 * np.eye(2 * modes))


def squeezed_vacuum(r: float) -> GaussianState:
    """Single-mode squeezed vacuum; ``r > 0`` squeezes X.

    >>> squeezed_vacuum(0.0).cov
    array([[0.5, 0. ],
           [0. , 0.5]])
    """
    r = float(r)
    if not np.isfinite(r):
        raise ValueError(f"squeezing must be finite, got {r}")
    if abs(r) > MAX_SQUEEZING:
        raise ValueError(f"|r| must be <= {MAX_SQUEEZING}, got {r}")
    return GaussianState(np.zeros(2), np.diag([np.exp(-2 * r) / 2, np.exp(2 * r) / 2]))


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    n, m = a.cov.shape[0], b.cov.shape[0]
    cov = np.zeros((n + m, n + m))
    cov[:n, :n] = a.cov
    cov[n:, n:] = b.cov
    return GaussianState(np.concatenate([a.mean, b.mean]), cov)


def _check_mode(state: GaussianState, mode: int) -> int:
    if not 0 <= mode < state.modes:
        raise IndexError(f"mode {mode} out of range for {state.modes}-mode state")
    return int(mode)


def beamsplitter_matrix(modes: int, mode_a: int, mode_b: int, t: float) -> np.ndarray:
    """Orthogonal symplectic matrix of a beam splitter on two of ``modes`` modes."""
    if mode_a == mode_b:
        raise ValueError("beam splitter needs two distinct modes")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmission amplitude must lie in [0, 1], got {t}")
    # exact t == r keeps O^T O free of off-diagonal roundoff at the 50:50 point
    r = BALANCED if t == BALANCED else np.sqrt(1.0 - t * t)
    o = np.eye(2 * modes)
    for q in range(2):
        ia, ib = 2 * mode_a + q, 2 * mode_b + q
        o[ia, ia] = t
        o[ia, ib] = r
        o[ib, ia] = -r
        o[ib, ib] = t
    return o


def apply_symplectic(state: GaussianState, s: np.ndarray) -> GaussianState:
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


def apply_beamsplitter(
    state: GaussianState, mode_a: int, mode_b: int, t: float = BALANCED
) -> GaussianState:
    """Mix ``mode_a`` and ``mode_b``; the default ``t`` is the balanced splitter."""
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    return apply_symplectic(state, beamsplitter_matrix(state.modes, mode_a, mode_b, t))


def apply_loss(state: GaussianState, etas: Sequence[float] | float) -> GaussianState:
    """Pure-loss channel with a vacuum bath, one intensity transmission per mode."""
    etas = np.broadcast_to(np.asarray(etas, dtype=float), (state.modes,))
    if np.any(~np.isfinite(etas)) or np.any(etas < 0) or np.any(etas > 1):
        raise ValueError(f"transmissions must lie in [0, 1], got {etas}")
    y = np.repeat(np.sqrt(etas), 2)
    cov = y[:, None] * state.cov * y[None, :] + np.diag(1.0 - y**2) / 2
    return GaussianState(y * state.mean, cov)


def apply_displacement(state: GaussianState, mode: int, mu: float, nu: float) -> GaussianState:
    """Shift the X mean of ``mode`` by ``mu`` and its P mean by ``nu``."""
    mode = _check_mode(state, mode)
    mean = state.mean.copy()
    mean[2 * mode] += mu
    mean[2 * mode + 1] += nu
    return GaussianState(mean, state.cov)


@dataclass(frozen=True)
class Marginal1D:
    """Gaussian distribution of a single homodyne outcome."""

    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")

    @property
    def safe_variance(self) -> float:
        return max(self.variance, MIN_VARIANCE)

    def pdf(self, q):
        v = self.safe_variance
        q = np.asarray(q, dtype=float)
        return np.exp(-((q - self.mean) ** 2) / (2 * v)) / np.sqrt(2 * np.pi * v)


def homodyne_marginal(state: GaussianState, mode: int, quadrature: str) -> Marginal1D:
    mode = _check_mode(state, mode)
    quadrature = quadrature.lower()
    if quadrature not in QUADRATURES:
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    i = 2 * mode + QUADRATURES.index(quadrature)
    return Marginal1D(float(state.mean[i]), float(state.cov[i, i]))


def sample_homodyne(marginal: Marginal1D, rng: np.random.Generator, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    return marginal.mean + np.sqrt(marginal.variance) * rng.standard_normal(count)
