"""Seeded Monte Carlo estimation experiments.

Repeat ``i`` of an experiment with master seed ``s`` draws from
``np.random.default_rng(np.random.SeedSequence(s, spawn_key=(i,)))``, so a
record does not depend on how the repeats are scheduled across workers.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .fisher import crb
from .protocols import (DisplacementParams, EntangledProtocol, SeparableProtocol,
                        LabeledOutcomes, sample_outcomes)


class IdentifiabilityError(ValueError):
    """A parameter has no outcomes informing it."""


def estimate_entangled(outcomes) -> DisplacementParams:
    """Scaled sample means; each port sees half the shift amplitude."""
    outcomes = np.asarray(outcomes, dtype=float).reshape(-1, 2)
    if len(outcomes) == 0:
        raise IdentifiabilityError("no outcomes to estimate from")
    mx, mp = outcomes.mean(axis=0)
    return DisplacementParams(float(np.sqrt(2) * mx), float(np.sqrt(2) * mp))


def estimate_separable(outcomes: LabeledOutcomes) -> DisplacementParams:
    labels, values = np.asarray(outcomes[0]), np.asarray(outcomes[1], dtype=float)
    x, p = values[labels == 1], values[labels == 2]
    missing = [name for name, v in (("mu", x), ("nu", p)) if v.size == 0]
    if missing:
        raise IdentifiabilityError(f"no outcomes inform {', '.join(missing)}")
    return DisplacementParams(float(x.mean()), float(p.mean()))


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: EntangledProtocol | SeparableProtocol
    true_params: DisplacementParams
    n_probes: int
    n_repeats: int
    seed: int = 0
    split_mode: str = "random"

    def __post_init__(self):
        if self.n_probes < 1:
            raise ValueError("n_probes must be >= 1")
        if self.n_repeats < 2:
            raise ValueError("n_repeats must be >= 2")
        if self.split_mode not in ("random", "fixed"):
            raise ValueError(f"unknown split mode {self.split_mode!r}")

    def to_dict(self) -> dict:
        return {
            "protocol": type(self.protocol).__name__.replace("Protocol", "").lower(),
            **asdict(self.protocol),
            "mu": self.true_params.mu,
            "nu": self.true_params.nu,
            "n_probes": self.n_probes,
            "n_repeats": self.n_repeats,
            "seed": self.seed,
            "split_mode": self.split_mode,
        }


@dataclass(frozen=True)
class ExperimentRecord:
    config: ExperimentConfig
    estimates: np.ndarray
    empirical_cov: np.ndarray
    crb: np.ndarray
    ratio: np.ndarray
    n_failures: int = 0
    mean_estimate: np.ndarray = field(default=None)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def failure_fraction(self) -> float:
        return self.n_failures / self.config.n_repeats

    def to_dict(self, include_estimates: bool = False) -> dict:
        out = {
            "config": self.config.to_dict(),
            "n_success": int(len(self.estimates)),
            "n_failures": int(self.n_failures),
            "mean_estimate": _tolist(self.mean_estimate),
            "empirical_cov": _tolist(self.empirical_cov),
            "crb": _tolist(self.crb),
            "ratio": _tolist(self.ratio),
        }
        if include_estimates:
            out["estimates"] = _tolist(self.estimates)
        return out


def _tolist(a):
    if a is None:
        return None
    a = np.asarray(a, dtype=float)
    # JSON has no NaN; undefined statistics serialise as null
    return np.where(np.isfinite(a), a, None).tolist()


def repeat_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _one_repeat(config: ExperimentConfig, index: int):
    rng = repeat_rng(config.seed, index)
    out = sample_outcomes(config.protocol, config.true_params, config.n_probes, rng,
                          split=config.split_mode)
    try:
        if isinstance(config.protocol, EntangledProtocol):
            est = estimate_entangled(out)
        else:
            est = estimate_separable(out)
    except IdentifiabilityError:
        return None
    return est.mu, est.nu


def _run_block(config: ExperimentConfig, indices):
    return [_one_repeat(config, i) for i in indices]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentRecord:
    """Repeat sampling and estimation; compare the spread with the Cramer-Rao bound.

    Repeats whose outcomes leave a parameter unidentified are dropped and
    counted in ``n_failures``.
    """
    indices = range(config.n_repeats)
    if workers > 1:
        blocks = [list(indices[k::workers]) for k in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_block, [config] * workers, blocks))
        results = [None] * config.n_repeats
        for block, part in zip(blocks, parts):
            for i, res in zip(block, part):
                results[i] = res
    else:
        results = _run_block(config, indices)

    ok = [res for res in results if res is not None]
    n_fail = config.n_repeats - len(ok)
    estimates = np.array(ok, dtype=float).reshape(-1, 2)
    bound = crb(config.protocol.cfi(), config.n_probes).bound
    if len(estimates) >= 2:
        emp = np.cov(estimates, rowvar=False, ddof=1)
        ratio = np.diag(emp) / np.diag(bound)
        mean = estimates.mean(axis=0)
    else:
        emp = np.full((2, 2), np.nan)
        ratio = np.full(2, np.nan)
        mean = estimates.mean(axis=0) if len(estimates) else np.full(2, np.nan)
    return ExperimentRecord(config, estimates, emp, bound, ratio, n_fail, mean)
