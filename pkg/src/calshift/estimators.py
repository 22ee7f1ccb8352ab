"""Binned calibration error estimators, with and without label shift.

All estimators are binary (one-vs-rest on ``class_index``); the class-wise
error averages them over classes. They return CE_p^p in ``ce_pow_p`` and its
p-th root in ``ce``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .binning import BinningScheme, BinSource, build_equal_mass_bins
from .core import CeReport, ImportanceWeights, LabeledSet, PredictionSet
from .errors import CalshiftError, ClassError, EmptyBin, EmptyTargetBin, InputError, TooFewSamples

logger = logging.getLogger(__name__)

DEFAULT_BINS = 15


class Mode(str, enum.Enum):
    PLUGIN = "plugin"
    LOO = "loo"


def _check_p(p):
    if p not in (1, 2):
        raise InputError(f"norm order p must be 1 or 2, got {p}")


def _gap(r_hat, scores, p):
    d = np.abs(r_hat - scores)
    return d if p == 1 else d * d


@dataclass(frozen=True, eq=False)
class BinRatioTable:
    """Per-point pieces of the shifted ratio ``r_hat = numerator / denominator``."""

    r_hat: np.ndarray
    bin: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    scores: np.ndarray
    scheme: BinningScheme
    empty_source_bins: tuple = ()

    def __len__(self):
        return self.r_hat.size


def source_ratios(data: LabeledSet, class_index: int, b: int, mode=Mode.PLUGIN):
    """Binned conditional-mean estimate for every source point.

    Returns ``(r_hat, scheme)``. PlugIn uses ``(b/n) * sum`` over the bin
    including the point itself; LeaveOneOut uses ``(b/(n-1)) * sum`` without it.
    """
    mode = Mode(mode)
    scores = data.preds.scores(class_index)
    y = data.binary_labels(class_index)
    n = data.n
    if n < b:
        raise TooFewSamples(f"need at least {b} points for {b} bins, got {n}")
    scheme = build_equal_mass_bins(scores, b, BinSource.SOURCE)
    idx = scheme.assign(scores)
    occupancy = np.bincount(idx, minlength=b)
    if np.any(occupancy == 0):
        raise EmptyBin(np.flatnonzero(occupancy == 0))
    pos = np.bincount(idx, weights=y, minlength=b)
    if mode is Mode.PLUGIN:
        r_hat = (b / n) * pos[idx]
    else:
        if n < 2:
            raise TooFewSamples("leave-one-out needs n >= 2")
        r_hat = (b / (n - 1)) * (pos[idx] - y)
    return r_hat, scheme


def estimate_ce_source(
    data: LabeledSet,
    class_index: int = 1,
    b: int = DEFAULT_BINS,
    p: int = 2,
    mode=Mode.PLUGIN,
) -> CeReport:
    """Calibration error of one class score on labeled (unshifted) data."""
    _check_p(p)
    r_hat, _ = source_ratios(data, class_index, b, mode)
    ce_pow_p = float(np.mean(_gap(r_hat, data.preds.scores(class_index), p)))
    return CeReport(ce_pow_p, p=p, bins=b, n=data.n, m=0, diagnostics={"mode": Mode(mode).value})


def bin_ratio_table(
    source: LabeledSet,
    target_preds: PredictionSet,
    weights: ImportanceWeights,
    class_index: int = 1,
    b: int = DEFAULT_BINS,
    bin_source=BinSource.TARGET,
    clamp: bool = False,
) -> BinRatioTable:
    """Per-target-point weighted ratio used by :func:`estimate_ce_shifted`.

    Numerator: ``omega_c / n`` times the number of same-bin source positives.
    Denominator: fraction of the other ``m - 1`` target points sharing the bin.
    """
    if weights.k != source.k:
        raise InputError(f"weights have length {weights.k}, data has k={source.k}")
    if target_preds.k != source.k:
        raise InputError("source and target predictions disagree on k")
    n, m = source.n, target_preds.n
    t_scores = target_preds.scores(class_index)
    s_scores = source.preds.scores(class_index)
    y = source.binary_labels(class_index)
    bin_source = BinSource(bin_source)
    if bin_source is BinSource.TARGET:
        if m < b:
            raise TooFewSamples(f"need at least {b} target points for {b} bins, got {m}")
        scheme = build_equal_mass_bins(t_scores, b, BinSource.TARGET)
    else:
        if n < b:
            raise TooFewSamples(f"need at least {b} source points for {b} bins, got {n}")
        scheme = build_equal_mass_bins(s_scores, b, BinSource.SOURCE)
    if m < 2:
        raise TooFewSamples("need at least 2 target points")
    t_idx = scheme.assign(t_scores)
    s_idx = scheme.assign(s_scores)
    pos = np.bincount(s_idx, weights=y, minlength=b)
    t_occ = np.bincount(t_idx, minlength=b)
    numerator = weights.omega[class_index] * pos[t_idx] / n
    denominator = (t_occ[t_idx] - 1) / (m - 1)
    empty = np.flatnonzero(denominator == 0)
    if empty.size:
        raise EmptyTargetBin(empty)
    r_hat = numerator / denominator
    if clamp:
        r_hat = np.clip(r_hat, 0.0, 1.0)
    occupied = np.unique(t_idx)
    s_occ = np.bincount(s_idx, minlength=b)
    empty_source = tuple(int(k) for k in occupied if s_occ[k] == 0)
    if empty_source:
        logger.warning("target bins %s contain no source points", list(empty_source))
    return BinRatioTable(r_hat, t_idx, numerator, denominator, t_scores, scheme, empty_source)


def estimate_ce_shifted(
    source: LabeledSet,
    target_preds: PredictionSet,
    weights: ImportanceWeights,
    class_index: int = 1,
    b: int = DEFAULT_BINS,
    p: int = 2,
    bin_source=BinSource.TARGET,
    clamp: bool = False,
) -> CeReport:
    """Target-domain calibration error from labeled source and unlabeled target."""
    _check_p(p)
    table = bin_ratio_table(source, target_preds, weights, class_index, b, bin_source, clamp)
    ce_pow_p = float(np.mean(_gap(table.r_hat, table.scores, p)))
    diagnostics = {"bin_source": BinSource(bin_source).value, "clamp": bool(clamp)}
    if table.empty_source_bins:
        diagnostics["empty_source_bins"] = list(table.empty_source_bins)
    return CeReport(
        ce_pow_p,
        p=p,
        bins=b,
        n=source.n,
        m=target_preds.n,
        weights=weights,
        diagnostics=diagnostics,
    )


def estimate_classwise_ce(
    source: LabeledSet,
    target_preds: Optional[PredictionSet] = None,
    weights: Optional[ImportanceWeights] = None,
    b: int = DEFAULT_BINS,
    p: int = 2,
    mode=Mode.PLUGIN,
    classes=None,
    bin_source=BinSource.TARGET,
    clamp: bool = False,
) -> CeReport:
    """Average of per-class binary CE_p^p; ``per_class`` holds the terms.

    Shifted when ``target_preds`` is given (``weights`` then required),
    source-only otherwise. ``classes`` restricts the average to a subset.
    """
    if target_preds is not None and weights is None:
        raise InputError("weights are required when target predictions are given")
    classes = list(range(source.k)) if classes is None else [int(c) for c in classes]
    if not classes:
        raise InputError("no classes requested")
    # fixed class order keeps the reduction order independent of scheduling
    values = []
    for c in classes:
        try:
            if target_preds is None:
                r = estimate_ce_source(source, c, b, p, mode)
            else:
                r = estimate_ce_shifted(source, target_preds, weights, c, b, p, bin_source, clamp)
        except CalshiftError as exc:
            raise ClassError(c, exc) from exc
        values.append(r.ce_pow_p)
    per_class = np.array(values)
    diagnostics = {"classes": classes}
    if target_preds is None:
        diagnostics["mode"] = Mode(mode).value
    else:
        diagnostics["bin_source"] = BinSource(bin_source).value
    return CeReport(
        float(np.mean(per_class)),
        p=p,
        bins=b,
        n=source.n,
        m=0 if target_preds is None else target_preds.n,
        weights=weights,
        per_class=per_class,
        diagnostics=diagnostics,
    )
