"""Classical Fisher information and Cramer-Rao bounds.

Two independent routes are provided: :func:`cfi_gaussian` uses the closed form
``J^T cov^-1 J`` valid for Gaussian outcome models with a parameter-independent
covariance, and :func:`cfi_numeric` integrates ``(d_j f)(d_l f) / f`` over a
trapezoid grid using finite differences of the density itself. The second is
the oracle for the first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

CARTESIAN = "cartesian"
POLAR = "polar"
CHARTS = (CARTESIAN, POLAR)

ASYMMETRY_TOL = 1e-10
PSD_TOL = 1e-9


class SingularFisherError(ValueError):
    """The Fisher matrix is not invertible; ``direction`` is a null vector."""

    def __init__(self, message: str, direction: np.ndarray):
        super().__init__(message)
        self.direction = direction


@dataclass(frozen=True)
class FisherMatrix:
    m: np.ndarray
    chart: str = CARTESIAN

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"Fisher matrix must be square, got shape {m.shape}")
        if self.chart not in CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > ASYMMETRY_TOL * scale:
            # a derivative bug shows up as asymmetry; surface it rather than hide it
            raise ValueError("Fisher matrix is not symmetric")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m).min() < -PSD_TOL * scale:
            raise ValueError("Fisher matrix is not positive semidefinite")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    def __getitem__(self, idx):
        return self.m[idx]

    def allclose(self, other: "FisherMatrix", rtol=1e-12, atol=0.0) -> bool:
        return self.chart == other.chart and np.allclose(self.m, other.m, rtol=rtol, atol=atol)


@dataclass(frozen=True)
class GaussianOutcomeModel:
    """Outcomes ~ N(mean_map(theta), cov) with ``cov`` independent of theta."""

    mean_map: Callable[[np.ndarray], np.ndarray]
    cov: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("outcome covariance must be positive definite") from exc
        object.__setattr__(self, "cov", cov)


def _steps(theta: np.ndarray, rel_step: float) -> np.ndarray:
    return rel_step * np.maximum(1.0, np.abs(theta))


def mean_jacobian(mean_map, theta, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian d mean / d theta, shape (d, k)."""
    theta = np.asarray(theta, dtype=float)
    h = _steps(theta, rel_step)
    cols = []
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h[j]
        hi = np.atleast_1d(np.asarray(mean_map(theta + e), dtype=float))
        lo = np.atleast_1d(np.asarray(mean_map(theta - e), dtype=float))
        with np.errstate(invalid="ignore"):
            cols.append((hi - lo) / (2 * h[j]))
    jac = np.stack(cols, axis=1)
    if not np.all(np.isfinite(jac)):
        raise ValueError("non-finite Jacobian of the mean map")
    return jac


def cfi_gaussian(model: GaussianOutcomeModel, theta, chart: str = CARTESIAN,
                 rel_step: float = 1e-6) -> FisherMatrix:
    jac = mean_jacobian(model.mean_map, theta, rel_step)
    if jac.shape[0] != model.cov.shape[0]:
        raise ValueError("mean map dimension does not match the covariance")
    return FisherMatrix(jac.T @ np.linalg.solve(model.cov, jac), chart)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product trapezoid grid over a box."""

    lows: tuple
    highs: tuple
    counts: tuple

    @classmethod
    def box(cls, lows: Sequence[float], highs: Sequence[float], count: int = 2001) -> "Grid":
        lows, highs = tuple(map(float, lows)), tuple(map(float, highs))
        return cls(lows, highs, (int(count),) * len(lows))

    @classmethod
    def around(cls, centers, sigmas, n_sigma: float = 8.0, count: int = 2001) -> "Grid":
        centers, sigmas = np.atleast_1d(centers), np.atleast_1d(sigmas)
        return cls.box(centers - n_sigma * sigmas, centers + n_sigma * sigmas, count)

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    def axes(self):
        return [np.linspace(a, b, n) for a, b, n in zip(self.lows, self.highs, self.counts)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=1)

    def weights(self) -> np.ndarray:
        w = np.ones(1)
        for ax in self.axes():
            wa = np.full(ax.size, ax[1] - ax[0])
            wa[[0, -1]] *= 0.5
            w = np.multiply.outer(w, wa).reshape(-1)
        return w

    def refined(self) -> "Grid":
        return Grid(self.lows, self.highs, tuple(2 * n - 1 for n in self.counts))

    def coarsened(self) -> "Grid":
        return Grid(self.lows, self.highs, tuple((n + 1) // 2 for n in self.counts))


@dataclass(frozen=True)
class LabeledGrid:
    """Disjoint union of grids, one per discrete outcome label.

    Points carry the label in column 0, followed by the continuous outcome.
    """

    parts: tuple = field(default_factory=tuple)
    labels: tuple = None

    def __post_init__(self):
        labels = self.labels or tuple(range(1, len(self.parts) + 1))
        if len(labels) != len(self.parts):
            raise ValueError("one label per grid part")
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def size(self) -> int:
        return sum(p.size for p in self.parts)

    def points(self) -> np.ndarray:
        blocks = []
        for lab, part in zip(self.labels, self.parts):
            pts = part.points()
            blocks.append(np.column_stack([np.full(len(pts), lab, dtype=float), pts]))
        return np.concatenate(blocks)

    def weights(self) -> np.ndarray:
        return np.concatenate([p.weights() for p in self.parts])

    def refined(self) -> "LabeledGrid":
        return LabeledGrid(tuple(p.refined() for p in self.parts), self.labels)

    def coarsened(self) -> "LabeledGrid":
        return LabeledGrid(tuple(p.coarsened() for p in self.parts), self.labels)


def _cfi_on_grid(pdf, theta, grid, rel_step, norm_tol):
    pts, w = grid.points(), grid.weights()
    f0 = np.asarray(pdf(pts, theta), dtype=float)
    if np.any(f0 < 0):
        raise ValueError("density is negative on the grid")
    norm = float(w @ f0)
    if abs(norm - 1.0) > norm_tol:
        raise ValueError(f"density integrates to {norm:.9f} on the grid, not 1")
    h = _steps(theta, rel_step)
    grads = []
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h[j]
        grads.append((np.asarray(pdf(pts, theta + e)) - np.asarray(pdf(pts, theta - e))) / (2 * h[j]))
    # f underflows in the far tails; its derivative does too, so drop those cells
    support = f0 > 0
    inv = np.where(support, 1.0 / np.where(support, f0, 1.0), 0.0)
    k = theta.size
    m = np.empty((k, k))
    for j in range(k):
        for l in range(j, k):
            m[j, l] = m[l, j] = np.sum(w * grads[j] * grads[l] * inv)
    return m


def cfi_numeric(pdf: Callable[[np.ndarray, np.ndarray], np.ndarray], theta, grid,
                chart: str = CARTESIAN, rel_step: float = 1e-5, tol: float = 1e-8,
                max_points: int = 20_000_000, norm_tol: float = 1e-6) -> FisherMatrix:
    """Brute-force Fisher information of a density over an outcome grid.

    Parameters
    ----------
    pdf : callable
        ``pdf(points, theta)`` returning density values at ``points`` (rows of
        ``grid.points()``).
    theta : array_like
        Parameter vector at which derivatives are taken.
    grid : Grid or LabeledGrid
        Outcome grid. It should cover the support to many standard deviations.
    tol : float
        Refinement stops when successive grid levels agree to this relative
        tolerance. The first comparison is against the half-resolution grid.
    """
    theta = np.asarray(theta, dtype=float)
    prev = _cfi_on_grid(pdf, theta, grid.coarsened(), rel_step, norm_tol)
    cur = _cfi_on_grid(pdf, theta, grid, rel_step, norm_tol)
    while np.max(np.abs(cur - prev)) > tol * max(1.0, np.max(np.abs(cur))):
        grid = grid.refined()
        if grid.size > max_points:
            raise RuntimeError("Fisher quadrature failed to converge within the point budget")
        prev, cur = cur, _cfi_on_grid(pdf, theta, grid, rel_step, norm_tol)
    return FisherMatrix(cur, chart)


def cfi_mixture(parts: Sequence[tuple[float, FisherMatrix]]) -> FisherMatrix:
    """Weighted sum of the Fisher matrices of marker-labelled sub-protocols."""
    if not parts:
        raise ValueError("need at least one part")
    weights = np.array([w for w, _ in parts], dtype=float)
    if np.any(weights <= 0):
        raise ValueError("mixture weights must be positive")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights sum to {weights.sum()}, not 1")
    charts = {f.chart for _, f in parts}
    if len(charts) != 1:
        raise ValueError(f"cannot mix Fisher matrices over charts {sorted(charts)}")
    return FisherMatrix(sum(w * f.m for w, f in parts), charts.pop())


@dataclass(frozen=True)
class CRBReport:
    fisher: FisherMatrix
    n_probes: int
    bound: np.ndarray


def crb(fisher: FisherMatrix, n_probes: int) -> CRBReport:
    """Cramer-Rao bound ``C^-1 / N`` on the estimator covariance."""
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    vals, vecs = np.linalg.eigh(fisher.m)
    if vals[0] <= 1e-12:
        null = vecs[:, 0]
        null = null * np.sign(null[np.argmax(np.abs(null))])
        raise SingularFisherError(
            f"Fisher matrix is singular; direction {np.round(null, 12).tolist()} "
            "is not identifiable", null)
    return CRBReport(fisher, int(n_probes), np.linalg.inv(fisher.m) / n_probes)
