"""Domain types and elementary statistics shared by the other modules."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyLabels, InputError, LabelOutOfRange, NonSimplexRow

SIMPLEX_TOL = 1e-6
DISTRIBUTION_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """An ``(n, k)`` matrix of classifier outputs, one simplex point per row.

    Use :func:`validate_predictions` to build one from untrusted input; the
    constructor only checks shapes and bounds.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 2:
            raise InputError(f"probs must be 2-D, got shape {probs.shape}")
        n, k = probs.shape
        if n < 1 or k < 2:
            raise InputError(f"need n >= 1 and k >= 2, got n={n}, k={k}")
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def k(self) -> int:
        return self.probs.shape[1]

    def scores(self, class_index: int) -> np.ndarray:
        """Column ``class_index`` of the prediction matrix."""
        if not 0 <= class_index < self.k:
            raise InputError(f"class_index {class_index} outside 0..{self.k - 1}")
        return self.probs[:, class_index]

    def subset(self, index) -> "PredictionSet":
        return PredictionSet(self.probs[np.asarray(index)])


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """Predictions paired with integer labels in ``0..k-1``."""

    preds: PredictionSet
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != self.preds.n:
            raise InputError(
                f"labels must be a vector of length {self.preds.n}, got shape {labels.shape}"
            )
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise InputError("labels must be integers")
        labels = _frozen(labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= self.preds.k):
            raise LabelOutOfRange(f"labels must lie in 0..{self.preds.k - 1}")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.preds.n

    @property
    def k(self) -> int:
        return self.preds.k

    def binary_labels(self, class_index: int) -> np.ndarray:
        """One-vs-rest indicator ``1{y == class_index}`` as floats."""
        return (self.labels == class_index).astype(float)

    def subset(self, index) -> "LabeledSet":
        index = np.asarray(index)
        return LabeledSet(self.preds.subset(index), self.labels[index])


class WeightMethod(str, enum.Enum):
    ORACLE = "oracle"
    BBSL = "bbsl"
    RLLS = "rlls"
    EM = "em"
    EM_BCTS = "em-bcts"


@dataclass(frozen=True, eq=False)
class ImportanceWeights:
    """Per-class ratios ``p_t(y) / p_s(y)`` and how they were obtained."""

    omega: np.ndarray
    method: WeightMethod
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        omega = _frozen(self.omega)
        if omega.ndim != 1 or omega.size < 1:
            raise InputError("omega must be a non-empty vector")
        if not np.all(np.isfinite(omega)) or np.any(omega < 0):
            raise InputError(f"importance weights must be finite and >= 0, got {omega}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "method", WeightMethod(self.method))

    @property
    def k(self) -> int:
        return self.omega.size


@dataclass(frozen=True, eq=False)
class ClassDistribution:
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 1 or probs.size < 1:
            raise InputError("class distribution must be a non-empty vector")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > DISTRIBUTION_TOL:
            raise InputError(f"not a probability vector: {probs}")
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> int:
        return self.probs.size


@dataclass(frozen=True, eq=False)
class CeReport:
    """Result of a calibration error estimate.

    ``ce_pow_p`` is the estimate of CE_p^p and ``ce`` its p-th root. ``m`` is
    zero when the estimate was computed without a target sample.
    """

    ce_pow_p: float
    p: int
    bins: int
    n: int
    m: int = 0
    variance: Optional[float] = None
    weights: Optional[ImportanceWeights] = None
    per_class: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)
    ce: float = field(init=False)

    def __post_init__(self):
        if self.p not in (1, 2):
            raise InputError(f"norm order p must be 1 or 2, got {self.p}")
        if not np.isfinite(self.ce_pow_p) or self.ce_pow_p < 0:
            raise InputError(f"ce_pow_p must be finite and >= 0, got {self.ce_pow_p}")
        if self.variance is not None and self.variance < 0:
            raise InputError("variance must be >= 0")
        object.__setattr__(self, "ce_pow_p", float(self.ce_pow_p))
        object.__setattr__(self, "ce", float(self.ce_pow_p) ** (1.0 / self.p))
        if self.per_class is not None:
            object.__setattr__(self, "per_class", _frozen(self.per_class))


def validate_predictions(raw) -> PredictionSet:
    """Check that every row of ``raw`` is a probability vector.

    Rows whose sum is off by less than ``SIMPLEX_TOL`` are renormalized;
    anything worse raises :class:`NonSimplexRow` naming the first bad row.
    """
    a = np.asarray(raw, dtype=float)
    if a.ndim != 2:
        raise InputError(f"predictions must be a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        bad = int(np.argwhere(~np.isfinite(a))[0, 0])
        raise NonSimplexRow(bad, "non-finite entry")
    neg = np.any(a < 0, axis=1) | np.any(a > 1 + SIMPLEX_TOL, axis=1)
    sums = a.sum(axis=1)
    off = np.abs(sums - 1.0) > SIMPLEX_TOL
    bad = np.flatnonzero(neg | off)
    if bad.size:
        row = int(bad[0])
        raise NonSimplexRow(row, f"entries {a[row].tolist()} sum to {sums[row]:.9g}")
    # rows already within rounding of 1 are left alone so validation is idempotent
    drift = np.abs(sums - 1.0) > 1e-12
    if np.any(drift):
        a = a.copy()
        a[drift] /= sums[drift, None]
        np.clip(a, 0.0, 1.0, out=a)
    return PredictionSet(a)


def empirical_class_distribution(labels, k: int) -> ClassDistribution:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptyLabels("label vector is empty")
    if labels.min() < 0 or labels.max() >= k:
        raise LabelOutOfRange(f"labels must lie in 0..{k - 1}")
    counts = np.bincount(labels.astype(np.int64), minlength=k)
    return ClassDistribution(counts / labels.size)


def predicted_labels(preds: PredictionSet) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return np.argmax(preds.probs, axis=1)


def predicted_label_distribution(preds: PredictionSet) -> ClassDistribution:
    """Fraction of rows whose argmax is each class."""
    counts = np.bincount(predicted_labels(preds), minlength=preds.k)
    return ClassDistribution(counts / preds.n)
