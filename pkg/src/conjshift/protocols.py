"""Estimation schemes for the two quadrature shifts of a displacement.

* :class:`EntangledProtocol` - two orthogonally squeezed vacua interfered on a
  balanced beam splitter; one arm is displaced, the arms are recombined and
  X / P are read out on the two ports.
* :class:`SeparableProtocol` - independent X-squeezed probes (marker 1, X
  homodyne) and P-squeezed probes (marker 2, P homodyne) with weights w1, w2.
* :class:`FockProtocol` - photon-number states, amplitude estimation only.

Marker states are never simulated as a quantum subsystem: the marker readout
is noiseless, so it is carried as an integer label on each outcome.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import gaussian as gc
from .fisher import (CARTESIAN, POLAR, FisherMatrix, GaussianOutcomeModel, Grid,
                     LabeledGrid, cfi_gaussian, cfi_mixture, cfi_numeric)

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class DisplacementParams:
    mu: float
    nu: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.nu)):
            raise ValueError("displacement parameters must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.nu], dtype=float)

    def to_polar(self) -> "PolarParams":
        return PolarParams(float(np.hypot(self.mu, self.nu)),
                           float(np.arctan2(self.nu, self.mu) % (2 * np.pi)))


@dataclass(frozen=True)
class PolarParams:
    amplitude: float
    phase: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        object.__setattr__(self, "phase", float(self.phase) % (2 * np.pi))

    def to_cartesian(self) -> DisplacementParams:
        return DisplacementParams(self.amplitude * np.cos(self.phase),
                                  self.amplitude * np.sin(self.phase))


def _check_r(r: float) -> float:
    r = float(r)
    if not np.isfinite(r) or abs(r) > gc.MAX_SQUEEZING:
        raise ValueError(f"squeezing must satisfy |r| <= {gc.MAX_SQUEEZING}, got {r}")
    return r


@dataclass(frozen=True)
class EntangledProtocol:
    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", _check_r(self.r))

    def cfi(self) -> FisherMatrix:
        return cfi_entangled(self.r)


@dataclass(frozen=True)
class SeparableProtocol:
    r: float
    w1: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "r", _check_r(self.r))
        if not 0.0 <= self.w1 <= 1.0:
            raise ValueError(f"w1 must lie in [0, 1], got {self.w1}")

    @property
    def w2(self) -> float:
        return 1.0 - self.w1

    def cfi(self) -> FisherMatrix:
        return cfi_separable(self.r, self.w1)


@dataclass(frozen=True)
class FockProtocol:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"photon number must be a non-negative integer, got {self.n}")

    @property
    def energy(self) -> int:
        return int(self.n)

    def cfi(self) -> float:
        return cfi_fock_amplitude(self.n)


def squeezed_energy(r: float) -> float:
    """Mean photon number of a squeezed vacuum, sinh(r)**2."""
    return (np.exp(2 * r) + np.exp(-2 * r) - 2) / 4


def squeezing_for_energy(energy: float) -> float:
    """Squeezing r with sinh(r)**2 equal to ``energy``."""
    return float(np.arcsinh(np.sqrt(energy)))


def squeezing_db(r: float) -> float:
    """Squeezing in dB, 10 log10(e^{2r})."""
    return float(20 * r / np.log(10))


# --- entangled scheme -------------------------------------------------------

def entangled_probe(r: float) -> gc.GaussianState:
    """Two-mode squeezed probe: X-squeezed and P-squeezed vacua on a 50:50 splitter."""
    two = gc.tensor(gc.squeezed_vacuum(r), gc.squeezed_vacuum(-r))
    return gc.apply_beamsplitter(two, 0, 1)


def entangled_readout_state(r: float, mu: float, nu: float) -> gc.GaussianState:
    """State right before the homodynes: displace arm 0, undo the first splitter.

    The displacement does not touch the covariance, so both splitters are
    composed first. Applied one after the other they would bury the e^{-2r}
    variance under roundoff from the e^{2r} one at large r.
    """
    prep = gc.beamsplitter_matrix(2, 0, 1, gc.BALANCED)
    meas = gc.beamsplitter_matrix(2, 1, 0, gc.BALANCED)
    start = gc.tensor(gc.squeezed_vacuum(r), gc.squeezed_vacuum(-r))
    net = meas @ prep
    cov = net @ start.cov @ net.T
    shift = gc.apply_displacement(gc.GaussianState(prep @ start.mean, cov), 0, mu, nu).mean
    return gc.GaussianState(meas @ shift, cov)


def entangled_marginals(r: float, mu: float, nu: float) -> tuple[gc.Marginal1D, gc.Marginal1D]:
    s = entangled_readout_state(r, mu, nu)
    return gc.homodyne_marginal(s, 0, "x"), gc.homodyne_marginal(s, 1, "p")


def entangled_outcome_model(r: float) -> GaussianOutcomeModel:
    """(X of port 0, P of port 1) as a Gaussian model in (mu, nu)."""
    idx = [0, 3]
    cov = entangled_readout_state(r, 0.0, 0.0).cov[np.ix_(idx, idx)]

    def mean_map(theta):
        return entangled_readout_state(r, theta[0], theta[1]).mean[idx]

    return GaussianOutcomeModel(mean_map, cov)


def entangled_pdf(x, p, r: float, mu: float, nu: float):
    """Closed-form joint density of the two homodyne outcomes."""
    a = np.exp(-2 * r)
    return np.exp(-((x - mu / SQRT2) ** 2) / a - (p - nu / SQRT2) ** 2 / a) / (np.pi * a)


def cfi_entangled(r: float) -> FisherMatrix:
    r = _check_r(r)
    return FisherMatrix(np.diag([np.exp(2 * r)] * 2))


# --- separable scheme -------------------------------------------------------

def separable_marginals(r: float, mu: float, nu: float) -> tuple[gc.Marginal1D, gc.Marginal1D]:
    """Unweighted homodyne marginals of the X-squeezed and P-squeezed branches."""
    fx = gc.homodyne_marginal(gc.apply_displacement(gc.squeezed_vacuum(r), 0, mu, nu), 0, "x")
    fp = gc.homodyne_marginal(gc.apply_displacement(gc.squeezed_vacuum(-r), 0, mu, nu), 0, "p")
    return fx, fp


def separable_branch_models(r: float) -> tuple[GaussianOutcomeModel, GaussianOutcomeModel]:
    v = separable_marginals(r, 0.0, 0.0)[0].variance
    return (GaussianOutcomeModel(lambda th: separable_marginals(r, th[0], th[1])[0].mean, [[v]]),
            GaussianOutcomeModel(lambda th: separable_marginals(r, th[0], th[1])[1].mean, [[v]]))


def cfi_separable(r: float, w1: float = 0.5) -> FisherMatrix:
    r = _check_r(r)
    if not 0.0 <= w1 <= 1.0:
        raise ValueError(f"w1 must lie in [0, 1], got {w1}")
    g = 2 * np.exp(2 * r)
    return FisherMatrix(np.diag([w1 * g, (1.0 - w1) * g]))


def separable_labeled_pdf(r: float, w1: float, chart: str = CARTESIAN):
    """Density f(label, q; theta) of the marker-labelled separable outcomes.

    ``theta`` is (mu, nu) in the Cartesian chart and (|alpha|, phi) in the
    polar chart. Points are rows ``(label, q)`` as produced by LabeledGrid.
    """
    v = np.exp(-2 * r) / 2
    weights = {1: w1, 2: 1.0 - w1}

    def pdf(points, theta):
        if chart == POLAR:
            mu, nu = theta[0] * np.cos(theta[1]), theta[0] * np.sin(theta[1])
        else:
            mu, nu = theta
        label, q = points[:, 0], points[:, 1]
        centre = np.where(label == 1, mu, nu)
        w = np.where(label == 1, weights[1], weights[2])
        return w * np.exp(-((q - centre) ** 2) / (2 * v)) / np.sqrt(2 * np.pi * v)

    return pdf


def separable_grid(r: float, mu: float, nu: float, n_sigma: float = 8.0,
                   count: int = 2001) -> LabeledGrid:
    sigma = np.exp(-r) / SQRT2
    return LabeledGrid((Grid.around(mu, sigma, n_sigma, count),
                        Grid.around(nu, sigma, n_sigma, count)))


IDENTITY_FORMS = ("scaled", "attenuated", "literal")


def separable_pdf_identity_check(r: float, mu: float, nu: float, form: str = "scaled",
                                 n_sigma: float = 8.0, count: int = 801,
                                 sqrt2: bool = True) -> float:
    """Largest pointwise gap between the entangled joint density and a product
    of separable single-quadrature densities.

    ``form`` selects the right-hand side:

    ``"scaled"``
        ``2 g_X(sqrt2 x) g_P(sqrt2 p)`` where ``g`` are the squeezed-probe
        quadrature densities with variance ``e^{-2r}`` (vacuum variance 1).
    ``"attenuated"``
        ``f_X(x) f_P(p)`` evaluated at the halved-amplitude shift
        ``(mu/sqrt2, nu/sqrt2)``, vacuum variance 1/2 as everywhere else.
    ``"literal"``
        ``2 f_X(sqrt2 x) f_P(sqrt2 p)`` with the vacuum-variance-1/2 densities.
        This one does not hold; its gap is O(1) and it is kept for reference.

    ``sqrt2=False`` drops the rescaling of arguments (or of the shift), a
    negative control.
    """
    if form not in IDENTITY_FORMS:
        raise ValueError(f"form must be one of {IDENTITY_FORMS}")
    a = np.exp(-2 * r)
    sigma = np.sqrt(a / 2)
    xs = np.linspace(mu / SQRT2 - n_sigma * sigma, mu / SQRT2 + n_sigma * sigma, count)
    ps = np.linspace(nu / SQRT2 - n_sigma * sigma, nu / SQRT2 + n_sigma * sigma, count)
    x, p = np.meshgrid(xs, ps, indexing="ij")
    lhs = entangled_pdf(x, p, r, mu, nu)
    s = SQRT2 if sqrt2 else 1.0
    if form == "attenuated":
        fx, fp = separable_marginals(r, mu / s, nu / s)
        rhs = fx.pdf(x) * fp.pdf(p)
    else:
        var = a if form == "scaled" else a / 2
        fx, fp = gc.Marginal1D(mu, var), gc.Marginal1D(nu, var)
        rhs = 2 * fx.pdf(s * x) * fp.pdf(s * p)
    return float(np.max(np.abs(lhs - rhs)))


# --- Fock scheme and amplitude / phase chart --------------------------------

def cfi_fock_amplitude(n: int) -> float:
    """Amplitude Fisher information of Fock probes with photon counting, 4n + 2."""
    if int(n) != n or n < 0:
        raise ValueError(f"photon number must be a non-negative integer, got {n}")
    return 4.0 * n + 2.0


def polar_jacobian(phi: float, amplitude: float) -> np.ndarray:
    """d(mu, nu) / d(|alpha|, phi)."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -amplitude * s], [s, amplitude * c]])


def polar_transform(cart: FisherMatrix, phi: float, amplitude: float) -> FisherMatrix:
    if cart.chart != CARTESIAN:
        raise ValueError("expected a Cartesian Fisher matrix")
    if amplitude <= 0:
        raise ValueError("polar chart is singular at zero amplitude")
    j = polar_jacobian(phi, amplitude)
    return FisherMatrix(j.T @ cart.m @ j, POLAR)


def cartesian_transform(polar: FisherMatrix, phi: float, amplitude: float) -> FisherMatrix:
    if polar.chart != POLAR:
        raise ValueError("expected a polar Fisher matrix")
    if amplitude <= 0:
        raise ValueError("polar chart is singular at zero amplitude")
    jinv = np.linalg.inv(polar_jacobian(phi, amplitude))
    return FisherMatrix(jinv.T @ polar.m @ jinv, CARTESIAN)


@dataclass(frozen=True)
class PolarComparison:
    """Amplitude/phase Fisher information of balanced separable probes.

    ``fisher`` is the shipped value, ``oracle`` the brute-force quadrature of
    the labelled homodyne densities and ``displayed`` the closed form
    ``2(n + 1 + sqrt(n^2 + n)) diag(1, |alpha|^2)``, which exceeds the others
    by exactly ``diag(1, |alpha|^2)``.
    """

    r: float
    amplitude: float
    energy: float
    fisher: FisherMatrix
    oracle: FisherMatrix | None
    displayed: FisherMatrix
    phase_defined: bool

    @property
    def amplitude_cfi(self) -> float:
        return float(self.fisher[0, 0])

    @property
    def displayed_amplitude_cfi(self) -> float:
        return float(self.displayed[0, 0])


def cfi_separable_polar(r: float, amplitude: float, phase: float = 0.0,
                        oracle: bool = True) -> PolarComparison:
    """Balanced separable probes in the (|alpha|, phi) chart."""
    r = _check_r(r)
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    n = squeezed_energy(r)
    shape = np.diag([1.0, amplitude**2])
    displayed = FisherMatrix(2 * (n + 1 + np.sqrt(n * n + n)) * shape, POLAR)
    fisher = FisherMatrix(np.exp(2 * r) * shape, POLAR)
    num = None
    if oracle:
        cart = PolarParams(amplitude, phase).to_cartesian()
        num = cfi_numeric(separable_labeled_pdf(r, 0.5, POLAR), [amplitude, phase],
                          separable_grid(r, cart.mu, cart.nu), chart=POLAR)
        if not np.allclose(num.m, fisher.m, rtol=1e-5, atol=1e-6 * np.exp(2 * r)):
            raise RuntimeError(f"polar Fisher oracle disagrees: {num.m} vs {fisher.m}")
    return PolarComparison(r, float(amplitude), float(n), fisher, num, displayed,
                           phase_defined=amplitude > 0)


def mixture_of_branches(r: float, w1: float) -> FisherMatrix:
    """Separable CFI assembled branch by branch from the Gaussian models."""
    mx, mp = separable_branch_models(r)
    theta = np.zeros(2)
    parts = [(w, cfi_gaussian(m, theta)) for w, m in ((w1, mx), (1.0 - w1, mp)) if w > 0]
    return cfi_mixture(parts)


# --- sampling ---------------------------------------------------------------

class LabeledOutcomes(NamedTuple):
    labels: np.ndarray
    values: np.ndarray


def branch_labels(w1: float, n_probes: int, rng: np.random.Generator,
                  split: str = "random") -> np.ndarray:
    """Marker labels (1 or 2) for ``n_probes`` separable probes.

    ``random`` draws each label independently with P(1) = w1; ``fixed`` uses
    round(w1 * N) probes of label 1 followed by the rest as label 2.
    """
    if split == "random":
        return np.where(rng.random(n_probes) < w1, 1, 2)
    if split == "fixed":
        n1 = int(round(w1 * n_probes))
        return np.concatenate([np.ones(n1, dtype=int), np.full(n_probes - n1, 2)])
    raise ValueError(f"split must be 'random' or 'fixed', got {split!r}")


def sample_outcomes(protocol, true_params: DisplacementParams, n_probes: int,
                    rng: np.random.Generator, split: str = "random"):
    """Draw homodyne outcomes for ``n_probes`` probes.

    Returns an ``(n_probes, 2)`` array of (x, p) pairs for the entangled
    scheme and :class:`LabeledOutcomes` for the separable one.
    """
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    mu, nu = true_params.mu, true_params.nu
    if isinstance(protocol, EntangledProtocol):
        s = entangled_readout_state(protocol.r, mu, nu)
        idx = [0, 3]
        mean, cov = s.mean[idx], s.cov[np.ix_(idx, idx)]
        chol = np.linalg.cholesky(cov)
        return mean + rng.standard_normal((n_probes, 2)) @ chol.T
    if isinstance(protocol, SeparableProtocol):
        labels = branch_labels(protocol.w1, n_probes, rng, split)
        fx, fp = separable_marginals(protocol.r, mu, nu)
        z = rng.standard_normal(n_probes)
        values = np.where(labels == 1, fx.mean + np.sqrt(fx.variance) * z,
                          fp.mean + np.sqrt(fp.variance) * z)
        return LabeledOutcomes(labels, values)
    raise TypeError(f"cannot sample outcomes for {type(protocol).__name__}")
