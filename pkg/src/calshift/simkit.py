"""Synthetic data: a two-class Beta simulation and label-shift resamplers."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, stats

from .core import ClassDistribution, LabeledSet, PredictionSet
from .errors import InputError, InsufficientSamples


@dataclass(frozen=True)
class SimConfig:
    """Two-class simulation where the score is the feature itself.

    Labels are Bernoulli with the given positive prior per domain; features
    are Beta(alpha_pos, beta_pos) for positives and Beta(alpha_neg, beta_neg)
    for negatives in both domains, so only the label marginal shifts.
    """

    n: int = 1000
    m: int = 1000
    p_s1: float = 0.25
    p_t1: float = 0.5
    alpha_pos: float = 2.0
    beta_pos: float = 1.0
    alpha_neg: float = 2.0
    beta_neg: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.p_s1 < 1 and 0 < self.p_t1 < 1):
            raise InputError("priors must lie in (0, 1)")
        if min(self.alpha_pos, self.beta_pos, self.alpha_neg, self.beta_neg) <= 0:
            raise InputError("Beta parameters must be > 0")
        if self.n < 1 or self.m < 1:
            raise InputError("n and m must be >= 1")

    def with_seed(self, seed) -> "SimConfig":
        return replace(self, seed=seed)

    @property
    def true_weights(self) -> np.ndarray:
        return np.array([(1 - self.p_t1) / (1 - self.p_s1), self.p_t1 / self.p_s1])


def _draw(rng, size, prior, cfg):
    y = (rng.random(size) < prior).astype(np.int64)
    x = np.where(
        y == 1,
        rng.beta(cfg.alpha_pos, cfg.beta_pos, size),
        rng.beta(cfg.alpha_neg, cfg.beta_neg, size),
    )
    return LabeledSet(PredictionSet(np.column_stack([1.0 - x, x])), y)


def generate_beta_binary(cfg: SimConfig, rng=None):
    """Draw ``(source, target)`` labeled sets.

    Target labels are for oracle weights and validation only. ``rng``
    overrides ``cfg.seed`` when given.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    source = _draw(rng, cfg.n, cfg.p_s1, cfg)
    target = _draw(rng, cfg.m, cfg.p_t1, cfg)
    return source, target


def true_calibration_error(cfg: SimConfig, p: int = 2, domain: str = "target") -> float:
    """CE_p^p of the score ``f(x) = x`` under the simulation, by quadrature."""
    prior = cfg.p_t1 if domain == "target" else cfg.p_s1
    pos = stats.beta(cfg.alpha_pos, cfg.beta_pos)
    neg = stats.beta(cfg.alpha_neg, cfg.beta_neg)

    def integrand(x):
        a = prior * pos.pdf(x)
        mix = a + (1 - prior) * neg.pdf(x)
        if mix == 0:
            return 0.0
        return abs(a / mix - x) ** p * mix

    value, _ = integrate.quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-12, epsrel=1e-10)
    return float(value)


def longtail_counts(n_max: int, k: int, imbalance_factor: float) -> np.ndarray:
    """Exponential profile ``n_max * IF**(-c/(k-1))``, truncated to integers."""
    if imbalance_factor < 1:
        raise InputError("imbalance factor must be >= 1")
    if k == 1:
        return np.array([n_max])
    c = np.arange(k)
    raw = n_max * imbalance_factor ** (-c / (k - 1))
    # tiny slack so values like 100.00000000000001 or 99.99999999999999 land on 100
    return np.floor(raw + 1e-9).astype(np.int64)


def longtail_resample(labels, k: int, imbalance_factor: float, seed: int = 0) -> np.ndarray:
    """Indices of a long-tailed subsample with class 0 the largest.

    Returns sorted unique indices; every class keeps a uniform random subset
    of its points without replacement.
    """
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise InputError(f"classes {np.flatnonzero(counts == 0).tolist()} are absent")
    if k == 1 or imbalance_factor == 1:
        return np.arange(labels.size)
    quotas = longtail_counts(int(counts.max()), k, imbalance_factor)
    return _take_quotas(labels, quotas, np.random.default_rng(seed))


def _take_quotas(labels, quotas, rng):
    picked = []
    for c, q in enumerate(quotas):
        pool = np.flatnonzero(labels == c)
        if pool.size < q:
            raise InsufficientSamples(c, q, pool.size)
        picked.append(rng.choice(pool, size=int(q), replace=False))
    return np.sort(np.concatenate(picked)) if picked else np.array([], dtype=np.int64)


def shift_quotas(target_dist: ClassDistribution, total: int) -> np.ndarray:
    quotas = np.array([round(total * t) for t in target_dist.probs], dtype=np.int64)
    # the remainder goes to the largest quota (first one on ties)
    quotas[int(np.argmax(quotas))] += total - int(quotas.sum())
    return quotas


def apply_label_shift(
    data: LabeledSet, target_dist: ClassDistribution, total: int, seed: int = 0
) -> LabeledSet:
    """Subsample ``data`` to ``total`` points with label distribution ``target_dist``."""
    if target_dist.k != data.k:
        raise InputError("target distribution and data disagree on k")
    quotas = shift_quotas(target_dist, total)
    idx = _take_quotas(data.labels, quotas, np.random.default_rng(seed))
    return data.subset(idx)


def ratio_distribution(neg: int, pos: int) -> ClassDistribution:
    """Binary distribution for a ``neg:pos`` count ratio."""
    return ClassDistribution(np.array([neg, pos], dtype=float) / (neg + pos))


def ratio_sweep():
    """Negative:positive ratios from 5:1 through 1:1 to 1:4."""
    return [(5, d) for d in range(1, 5)] + [(1, 1)] + [(1, d) for d in range(2, 5)]


def replicate_seeds(seed: int, num: int):
    """Independent child seeds for ``num`` replicates derived from ``seed``."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(num)]


def ks_statistic(a, b) -> float:
    return float(stats.ks_2samp(a, b).statistic)


__all__ = [
    "SimConfig",
    "generate_beta_binary",
    "true_calibration_error",
    "longtail_counts",
    "longtail_resample",
    "apply_label_shift",
    "shift_quotas",
    "ratio_distribution",
    "ratio_sweep",
    "replicate_seeds",
    "ks_statistic",
]
