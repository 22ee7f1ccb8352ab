"""Per-class importance weights ``omega_i = p_t(y=i) / p_s(y=i)``.

Estimators that only see unlabeled target predictions:

* ``bbsl_weights`` -- invert the source confusion matrix against the target
  predicted-label distribution.
* ``rlls_weights`` -- ridge-regularized version of the same linear system,
  shrinking towards no shift.
* ``em_weights`` -- EM re-estimation of the target priors, assuming the
  scores are calibrated on the source.
* ``em_bcts_weights`` -- EM after bias-corrected temperature scaling fitted
  on labeled source data.

``oracle_weights`` uses target labels and exists for validation only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    ClassDistribution,
    ImportanceWeights,
    LabeledSet,
    PredictionSet,
    WeightMethod,
    empirical_class_distribution,
    predicted_label_distribution,
    predicted_labels,
)
from .errors import (
    DegenerateInput,
    InputError,
    NoConvergence,
    NumericalFailure,
    SingularConfusion,
    SupportViolation,
)

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-15
MAX_CONDITION = 1e12
DEFAULT_LAMBDA = 1e-3


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Joint distribution ``joint[i, j] = p_s(yhat=i, y=j)``."""

    joint: np.ndarray

    def __post_init__(self):
        joint = np.array(self.joint, dtype=float)
        if joint.ndim != 2 or joint.shape[0] != joint.shape[1]:
            raise InputError("confusion matrix must be square")
        if np.any(joint < 0) or abs(joint.sum() - 1.0) > 1e-9:
            raise InputError("confusion matrix must be a joint distribution")
        joint.setflags(write=False)
        object.__setattr__(self, "joint", joint)

    @property
    def k(self) -> int:
        return self.joint.shape[0]


@dataclass(frozen=True)
class BctsParams:
    temperature: float
    bias: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.temperature) or self.temperature <= 0:
            raise InputError(f"temperature must be finite and > 0, got {self.temperature}")
        object.__setattr__(self, "temperature", float(self.temperature))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=float))


def _check_normalization(omega, source_priors, diagnostics):
    total = float(np.dot(omega, source_priors))
    diagnostics["reweighted_mass"] = total
    if abs(total - 1.0) > 0.05:
        logger.warning("re-weighted source mass is %.4f, expected about 1", total)
        diagnostics["mass_warning"] = 1.0


def oracle_weights(source_labels, target_labels, k: int) -> ImportanceWeights:
    """Ground-truth ratio of empirical target and source label frequencies."""
    ps = empirical_class_distribution(source_labels, k).probs
    pt = empirical_class_distribution(target_labels, k).probs
    missing = np.flatnonzero((pt > 0) & (ps == 0))
    if missing.size:
        raise SupportViolation(f"target classes {missing.tolist()} never occur in the source")
    omega = np.divide(pt, ps, out=np.zeros(k), where=ps > 0)
    return ImportanceWeights(omega, WeightMethod.ORACLE, {})


def confusion_matrix(source: LabeledSet) -> ConfusionMatrix:
    """Empirical ``p(yhat=i, y=j)``; pass held-out data, not training data."""
    k = source.k
    flat = predicted_labels(source.preds) * k + source.labels
    counts = np.bincount(flat, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts / source.n)


def _clamped(theta_or_omega):
    return np.maximum(theta_or_omega, 0.0)


def bbsl_weights(cm: ConfusionMatrix, mu_t: ClassDistribution) -> ImportanceWeights:
    C = cm.joint
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularConfusion(
            f"confusion matrix is singular or ill-conditioned (condition number {cond:.3g})"
        )
    try:
        raw = np.linalg.solve(C, mu_t.probs)
    except np.linalg.LinAlgError as exc:
        raise SingularConfusion(str(exc)) from exc
    diagnostics = {
        "condition": float(cond),
        "residual": float(np.linalg.norm(C @ raw - mu_t.probs)),
        "min_raw": float(raw.min()),
    }
    omega = _clamped(raw)
    _check_normalization(omega, C.sum(axis=0), diagnostics)
    return ImportanceWeights(omega, WeightMethod.BBSL, diagnostics)


def rlls_weights(
    cm: ConfusionMatrix, mu_t: ClassDistribution, lam: float = DEFAULT_LAMBDA
) -> ImportanceWeights:
    """Ridge-regularized shift correction ``theta = omega - 1``.

    Minimizes ``||C theta - (mu_t - C 1)||^2 + lam ||theta||^2`` in closed
    form. This is a squared-norm variant of RLLS; ``lam = 0`` coincides with
    :func:`bbsl_weights` when ``C`` is invertible.
    """
    if lam < 0:
        raise InputError(f"lambda must be >= 0, got {lam}")
    C = cm.joint
    k = cm.k
    rhs = mu_t.probs - C.sum(axis=1)
    if lam == 0:
        # exact solve keeps lam=0 bit-compatible with BBSL
        cond = np.linalg.cond(C)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise NumericalFailure(f"unregularized system is singular (condition {cond:.3g})")
        theta = np.linalg.solve(C, rhs)
    else:
        A = C.T @ C + lam * np.eye(k)
        theta = np.linalg.solve(A, C.T @ rhs)
    raw = 1.0 + theta
    diagnostics = {
        "lambda": float(lam),
        "residual": float(np.linalg.norm(C @ theta - rhs)),
        "min_raw": float(raw.min()),
        "objective": "squared",
    }
    omega = _clamped(raw)
    _check_normalization(omega, C.sum(axis=0), diagnostics)
    return ImportanceWeights(omega, WeightMethod.RLLS, diagnostics)


def em_weights(
    source_priors: ClassDistribution,
    target_preds: PredictionSet,
    tol: float = 1e-6,
    max_iter: int = 1000,
    floor: float = PROB_FLOOR,
    method=WeightMethod.EM,
) -> ImportanceWeights:
    """Saerens-style EM re-estimation of target class priors.

    Starts at the source priors and stops once the L1 change of the prior
    estimate drops below ``tol``. Raises :class:`NoConvergence`, with the
    last weights attached as ``.result``, when ``max_iter`` is reached first.
    """
    if tol <= 0:
        raise InputError("tol must be > 0")
    ps = source_priors.probs
    if ps.size != target_preds.k:
        raise InputError("source priors and predictions disagree on k")
    f = np.maximum(target_preds.probs, floor)
    used = f.max(axis=0) > floor
    if np.any(used & (ps == 0)):
        raise DegenerateInput(
            f"zero source prior for classes {np.flatnonzero(used & (ps == 0)).tolist()}"
        )
    safe_ps = np.where(ps > 0, ps, 1.0)
    q = ps.copy()
    change = np.inf
    it = 0
    while it < max_iter:
        ratio = np.where(ps > 0, q / safe_ps, 0.0)
        post = f * ratio
        post /= post.sum(axis=1, keepdims=True)
        q_new = post.mean(axis=0)
        change = float(np.abs(q_new - q).sum())
        q = q_new
        it += 1
        if change < tol:
            break
    omega = np.where(ps > 0, q / safe_ps, 0.0)
    diagnostics = {"iterations": it, "change": change, "floor": floor}
    _check_normalization(omega, ps, diagnostics)
    result = ImportanceWeights(omega, method, diagnostics)
    if not change < tol:
        diagnostics["converged"] = 0.0
        raise NoConvergence(f"EM did not converge in {max_iter} iterations", result)
    diagnostics["converged"] = 1.0
    return result


def _log_probs(preds: PredictionSet) -> np.ndarray:
    return np.log(np.maximum(preds.probs, PROB_FLOOR))


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def apply_bcts(params: BctsParams, preds: PredictionSet) -> PredictionSet:
    q = _softmax(_log_probs(preds) / params.temperature + params.bias)
    return PredictionSet(q)


def bcts_nll(params: BctsParams, source: LabeledSet) -> float:
    """Mean negative log-likelihood of the labels under the rescaled scores."""
    z = _log_probs(source.preds) / params.temperature + params.bias
    z = z - z.max(axis=1, keepdims=True)
    logq = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logq[np.arange(source.n), source.labels].mean())


def fit_bcts(source: LabeledSet, lr: float = 0.01, iters: int = 2000) -> BctsParams:
    """Fit temperature and per-class bias by full-batch gradient descent on NLL.

    The temperature is optimized through ``log T`` so it stays positive.
    """
    counts = np.bincount(source.labels, minlength=source.k)
    if np.any(counts == 0):
        raise DegenerateInput(
            f"classes {np.flatnonzero(counts == 0).tolist()} absent; bias is unidentifiable"
        )
    logp = _log_probs(source.preds)
    onehot = np.eye(source.k)[source.labels]
    log_t = 0.0
    bias = np.zeros(source.k)
    for _ in range(iters):
        t = np.exp(log_t)
        q = _softmax(logp / t + bias)
        resid = (q - onehot) / source.n
        grad_b = resid.sum(axis=0)
        # dz/dlogT = -logp / T
        grad_log_t = float(np.sum(resid * (-logp / t)))
        bias = bias - lr * grad_b
        log_t = log_t - lr * grad_log_t
    # bias is only identified up to a constant shift; pin its mean to zero
    return BctsParams(float(np.exp(log_t)), bias - bias.mean())


def em_bcts_weights(
    source: LabeledSet,
    target_preds: PredictionSet,
    tol: float = 1e-6,
    max_iter: int = 1000,
    lr: float = 0.01,
    iters: int = 2000,
) -> ImportanceWeights:
    """EM on predictions recalibrated with BCTS fitted on ``source``.

    The same fitted map is applied to source and target predictions.
    """
    params = fit_bcts(source, lr=lr, iters=iters)
    priors = empirical_class_distribution(source.labels, source.k)
    target_cal = apply_bcts(params, target_preds)
    w = em_weights(priors, target_cal, tol=tol, max_iter=max_iter, method=WeightMethod.EM_BCTS)
    w.diagnostics["temperature"] = params.temperature
    return w


def estimate_weights(
    method,
    source: LabeledSet,
    target_preds: PredictionSet,
    target_labels=None,
    lam: float = DEFAULT_LAMBDA,
    tol: float = 1e-6,
    max_iter: int = 1000,
) -> ImportanceWeights:
    """Dispatch to one of the weight estimators by name."""
    method = WeightMethod(method)
    if method is WeightMethod.ORACLE:
        if target_labels is None:
            raise InputError("oracle weights need target labels")
        return oracle_weights(source.labels, target_labels, source.k)
    if method is WeightMethod.BBSL:
        return bbsl_weights(confusion_matrix(source), predicted_label_distribution(target_preds))
    if method is WeightMethod.RLLS:
        return rlls_weights(
            confusion_matrix(source), predicted_label_distribution(target_preds), lam
        )
    if method is WeightMethod.EM:
        priors = empirical_class_distribution(source.labels, source.k)
        return em_weights(priors, target_preds, tol=tol, max_iter=max_iter)
    return em_bcts_weights(source, target_preds, tol=tol, max_iter=max_iter)
