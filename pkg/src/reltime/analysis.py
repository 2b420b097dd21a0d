"""Two-view CCA, attention attribution regression, and rotated-space agreement."""

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import xlogy

from .errors import NoConvergence, SingularCovariance
from .metrics import spearman
from .optim import descend
from .timeline import RelationCoordinates

CCA_RIDGE = 1e-8
KL_L2 = 1e-6
COORDINATE_NAMES = RelationCoordinates._fields


def _inverse_sqrt(cov: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(cov)
    if not np.all(np.isfinite(evals)) or evals.min() <= 0:
        raise SingularCovariance(f"covariance not positive definite (smallest eigenvalue {evals.min():.3g})")
    return (evecs / np.sqrt(evals)) @ evecs.T


def cca(X, Y, ridge: float = CCA_RIDGE) -> List[float]:
    """Canonical correlations between the row-paired views ``X`` and ``Y``.

    Both views are centred; ``ridge`` is added to the diagonal of each
    covariance before whitening.  Returns ``min(p, q)`` correlations in
    descending order.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    if Y.shape[0] != n:
        raise ValueError("views must have the same number of rows")
    if n <= max(X.shape[1], Y.shape[1]):
        raise ValueError("need more rows than columns in each view")
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    cxx = Xc.T @ Xc / (n - 1) + ridge * np.eye(X.shape[1])
    cyy = Yc.T @ Yc / (n - 1) + ridge * np.eye(Y.shape[1])
    cxy = Xc.T @ Yc / (n - 1)
    whitened = _inverse_sqrt(cxx) @ cxy @ _inverse_sqrt(cyy)
    if not np.all(np.isfinite(whitened)):
        raise SingularCovariance("whitened cross-covariance is not finite")
    sv = np.linalg.svd(whitened, compute_uv=False)
    return np.clip(np.sort(sv)[::-1], 0.0, 1.0).tolist()


@dataclass
class AttributionProblem:
    """Attention weights over one sentence's tokens and their binary features."""

    weights: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2 or self.features.shape[0] != self.weights.shape[0]:
            raise ValueError("features must be a tokens x K matrix matching the weights")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("attention weights must be a probability vector")
        if not np.all((self.features == 0) | (self.features == 1)):
            raise ValueError("features must be binary")


@dataclass
class AttributionConfig:
    max_iters: int = 2000
    step_size: float = 1.0
    gtol: float = 1e-8
    l2: float = KL_L2


@dataclass
class AttributionResult:
    coefficients: np.ndarray
    mean_kl: float
    iterations: int
    converged: bool
    grad_norm: float
    feature_names: Optional[List[str]] = None
    trace: List[float] = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        names = self.feature_names or [f"f{k}" for k in range(len(self.coefficients))]
        return {
            "coefficients": dict(zip(names, self.coefficients.tolist())),
            "mean_kl": self.mean_kl,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _kl_objective(problems: Sequence[AttributionProblem], l2: float):
    # All sentences are stacked; per-sentence softmax uses segmented reductions.
    F = np.vstack([p.features for p in problems])
    alpha = np.concatenate([p.weights for p in problems])
    sizes = np.array([len(p.weights) for p in problems])
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    neg_entropy = float(xlogy(alpha, alpha).sum())

    def kl_parts(c):
        z = F @ c
        top = np.repeat(np.maximum.reduceat(z, starts), sizes)
        lse = top + np.repeat(np.log(np.add.reduceat(np.exp(z - top), starts)), sizes)
        logp = z - lse
        return neg_entropy - float(alpha @ logp), logp

    def value(c):
        return kl_parts(c)[0] + 0.5 * l2 * float(c @ c)

    def value_and_grad(c):
        kl, logp = kl_parts(c)
        grad = F.T @ (np.exp(logp) - alpha) + l2 * c
        return kl + 0.5 * l2 * float(c @ c), grad

    return value, value_and_grad, kl_parts


def kl_attribution(
    problems: Sequence[AttributionProblem],
    cfg: Optional[AttributionConfig] = None,
    feature_names: Optional[List[str]] = None,
) -> AttributionResult:
    """Fit ``c`` so that ``softmax(F_s @ c)`` matches each sentence's weights.

    Minimizes the summed KL divergence ``D(alpha_s || softmax(F_s c))`` plus
    a small L2 penalty that pins directions left free by collinear features.
    No intercept is used (it would cancel inside the softmax).  The gradient
    is ``sum_s F_s.T (softmax(F_s c) - alpha_s) + l2 * c``.
    """
    cfg = cfg or AttributionConfig()
    if not problems:
        raise ValueError("need at least one attribution problem")
    k = problems[0].features.shape[1]
    if any(p.features.shape[1] != k for p in problems):
        raise ValueError("all problems must share the feature count K")
    value, value_and_grad, kl_parts = _kl_objective(problems, cfg.l2)
    c, _, iterations, status, trace = descend(
        value, value_and_grad, np.zeros(k), max_iters=cfg.max_iters, step_size=cfg.step_size, gtol=cfg.gtol
    )
    converged = status != "max_iters"
    grad_norm = float(np.linalg.norm(value_and_grad(c)[1]))
    if not converged:
        warnings.warn(f"KL attribution stopped after {iterations} iterations", NoConvergence, stacklevel=2)
    return AttributionResult(
        coefficients=c,
        mean_kl=kl_parts(c)[0] / len(problems),
        iterations=iterations,
        converged=converged,
        grad_norm=grad_norm,
        feature_names=feature_names,
        trace=trace,
    )


def coordinate_agreement(gold: Sequence[Sequence[float]], pred: Sequence[Sequence[float]]) -> dict:
    """Spearman correlation per rotated dimension."""
    g = np.asarray(gold, dtype=float).reshape(-1, 4)
    p = np.asarray(pred, dtype=float).reshape(-1, 4)
    if g.shape != p.shape or g.shape[0] < 2:
        raise ValueError("gold and pred must have the same length (>= 2)")
    return {name: spearman(g[:, k], p[:, k]) for k, name in enumerate(COORDINATE_NAMES)}


def cca_report(X, Y) -> dict:
    corrs = cca(X, Y)
    return {"correlations": corrs, "n": int(np.asarray(X).shape[0])}

