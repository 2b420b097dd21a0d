"""Document timeline induction from pairwise relative timelines.

Each predicate ``k`` gets a begin ``t_k1 >= 0`` and a duration ``t_k2 > 0``.
A pair ``(i, j)`` projects to the normalized quadruple of
``[t_i1, t_i1 + t_i2, t_j1, t_j1 + t_j2]``, which is scored against the
observed relative timeline with the relation loss.  Optionally the implied
durations must also explain categorical duration labels through a binomial
model with ``pi_k = sigmoid(c * log t_k2)``, ``c`` learned jointly.

Begins are free reals (the objective only sees within-pair differences, so
the fitted timeline is anchored afterwards) and durations are softplus
images of unconstrained parameters.  The objective is minimized by
quasi-Newton descent with step-halving backtracking.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .duration import MAX_RANK
from .errors import KinkNearby, NoConvergence, NotConnected
from .metrics import DIFF_TERMS, difference_terms, spearman
from .optim import descend
from .timeline import RelativeTimeline, check_quadruple, normalize_sliders

_LOG_BINOM = np.array([math.lgamma(MAX_RANK + 1) - math.lgamma(c + 1) - math.lgamma(MAX_RANK - c + 1) for c in range(MAX_RANK + 1)])


@dataclass
class DocumentTimeline:
    begins: List[float]
    durations: List[float]
    ids: Optional[List[str]] = None
    texts: Optional[List[str]] = None

    def __post_init__(self):
        self.begins = [float(b) for b in self.begins]
        self.durations = [float(d) for d in self.durations]
        if len(self.begins) != len(self.durations):
            raise ValueError("begins and durations must have equal length")
        if any(d <= 0 for d in self.durations):
            raise ValueError("durations must be positive")
        if any(b < 0 for b in self.begins):
            raise ValueError("begins must be nonnegative")
        if self.ids is None:
            self.ids = [str(k) for k in range(len(self.begins))]
        if self.texts is None:
            self.texts = list(self.ids)

    def __len__(self) -> int:
        return len(self.begins)

    @property
    def ends(self) -> List[float]:
        return [b + d for b, d in zip(self.begins, self.durations)]

    def to_dict(self, document_id: str = "", loss=None, iterations: int = 0) -> dict:
        return {
            "document_id": document_id,
            "predicates": [
                {"id": i, "text": t, "begin": b, "duration": d}
                for i, t, b, d in zip(self.ids, self.texts, self.begins, self.durations)
            ],
            "loss": loss,
            "iterations": iterations,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DocumentTimeline":
        preds = obj["predicates"]
        return cls(
            [p["begin"] for p in preds],
            [p["duration"] for p in preds],
            ids=[p["id"] for p in preds],
            texts=[p.get("text", p["id"]) for p in preds],
        )


@dataclass
class PairObservation:
    i: int
    j: int
    target: Sequence[float]
    weight: float = 1.0
    gold_durations: Optional[Tuple[int, int]] = None
    duration_weights: Tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("a pair observation needs two distinct predicates")
        if self.weight < 0 or min(self.duration_weights) < 0:
            raise ValueError("observation weights must be nonnegative")
        check_quadruple(self.target)


@dataclass
class InductionConfig:
    max_iters: int = 5000
    step_size: float = 1.0
    tolerance: float = 1e-10
    duration_weight: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.duration_weight < 0:
            raise ValueError("duration_weight must be nonnegative")


@dataclass
class InductionResult:
    timeline: DocumentTimeline
    loss: float
    relation_loss: float
    mean_pair_loss: float
    iterations: int
    converged: bool
    status: str
    residuals: List[float]
    duration_coeff: float
    trace: List[float] = field(repr=False, default_factory=list)


def project_pair(timeline: DocumentTimeline, i: int, j: int) -> RelativeTimeline:
    """Normalized relative timeline of predicates ``i`` and ``j``."""
    bi, di = timeline.begins[i], timeline.durations[i]
    bj, dj = timeline.begins[j], timeline.durations[j]
    return normalize_sliders([bi, bi + di, bj, bj + dj])


def _softplus(u):
    return np.logaddexp(0.0, u)


def _sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _log_softplus(u):
    # softplus(u) ~ exp(u) far left of zero, where it may underflow.
    safe = np.minimum(u, 0.0) < -30.0
    return np.where(safe, u, np.log(_softplus(np.where(safe, 0.0, u))))


class InductionObjective:
    """Weighted relation loss plus optional duration cross-entropy.

    Parameters are packed as ``[begin (n), u_duration (n), c]`` with free
    begins and ``t_k2 = softplus(u_duration_k)``.
    """

    def __init__(self, observations: Sequence[PairObservation], n_predicates: int, duration_weight: float = 0.0):
        self.n = n_predicates
        self.lam = float(duration_weight)
        self.I = np.array([o.i for o in observations], dtype=int)
        self.J = np.array([o.j for o in observations], dtype=int)
        self.W = np.array([o.weight for o in observations], dtype=float)
        targets = np.array([normalize_sliders(o.target) for o in observations], dtype=float).reshape(-1, 4)
        self.G = difference_terms(targets)
        dk, dc, dw = [], [], []
        for o in observations:
            if o.gold_durations is not None:
                dk.extend((o.i, o.j))
                dc.extend(int(d) for d in o.gold_durations)
                dw.extend(float(w) for w in o.duration_weights)
        self.dur_index = np.array(dk, dtype=int)
        self.dur_rank = np.array(dc, dtype=float)
        self.dur_weight = np.array(dw, dtype=float)
        self.use_durations = self.lam > 0 and self.dur_index.size > 0
        self.m = len(self.I)
        self._rows = np.arange(self.m)
        self._plus = np.array([p for p, _ in DIFF_TERMS])
        self._minus = np.array([q for _, q in DIFF_TERMS])

    @property
    def size(self) -> int:
        return 2 * self.n + 1

    def initial_point(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        x = np.zeros(self.size)
        x[: self.n] = rng.normal(0.0, 0.1, size=self.n)
        x[self.n : 2 * self.n] = 0.5 + rng.normal(0.0, 0.1, size=self.n)
        x[-1] = 1.0
        return x

    def unpack(self, x):
        return x[: self.n], _softplus(x[self.n : 2 * self.n]), x[-1]

    def _tau(self, tb, td):
        bi, bj = tb[self.I], tb[self.J]
        return np.stack([bi, bi + td[self.I], bj, bj + td[self.J]], axis=1)

    def _projection(self, tau):
        hi = tau.argmax(axis=1)
        lo = tau.argmin(axis=1)
        span = tau[self._rows, hi] - tau[self._rows, lo]
        q = (tau[:, self._plus] - tau[:, self._minus]) / span[:, None]
        return q, span, hi, lo

    def _duration_terms(self, ud, c):
        log_t = _log_softplus(ud[self.dur_index])
        z = c * log_t
        d = self.dur_rank
        # -log C(10, d) pi^d (1 - pi)^(10 - d) with pi = sigmoid(z)
        nll = -_LOG_BINOM[d.astype(int)] + d * np.logaddexp(0.0, -z) + (MAX_RANK - d) * np.logaddexp(0.0, z)
        return nll, z, log_t

    def residuals(self, x) -> np.ndarray:
        """Per-pair unweighted relation loss at ``x``."""
        tb, td, _ = self.unpack(x)
        q, _, _, _ = self._projection(self._tau(tb, td))
        return np.abs(q - self.G).sum(axis=1)

    def value(self, x, smoothing: float = 0.0) -> float:
        tb, td, c = self.unpack(x)
        q, _, _, _ = self._projection(self._tau(tb, td))
        r = np.abs(q - self.G)
        if smoothing > 0:
            r = np.sqrt(r * r + smoothing * smoothing) - smoothing
        f = float(self.W @ r.sum(axis=1))
        if self.use_durations:
            nll, _, _ = self._duration_terms(x[self.n : 2 * self.n], c)
            f += self.lam * float(self.dur_weight @ nll)
        return f

    def value_and_grad(self, x, smoothing: float = 0.0):
        tb, td, c = self.unpack(x)
        tau = self._tau(tb, td)
        q, span, hi, lo = self._projection(tau)
        r = q - self.G
        if smoothing > 0:
            root = np.sqrt(r * r + smoothing * smoothing)
            f = float(self.W @ (root - smoothing).sum(axis=1))
            a = (r / root) * self.W[:, None]
        else:
            f = float(self.W @ np.abs(r).sum(axis=1))
            a = np.sign(r) * self.W[:, None]  # dL/dq, sign(0) = 0
        g_tau = np.zeros_like(tau)
        for k, (p, m) in enumerate(DIFF_TERMS):
            g_tau[:, p] += a[:, k] / span
            g_tau[:, m] -= a[:, k] / span
        g_span = -(a * q).sum(axis=1) / span
        np.add.at(g_tau, (self._rows, hi), g_span)
        np.add.at(g_tau, (self._rows, lo), -g_span)

        n = self.n
        g_tb = np.bincount(self.I, g_tau[:, 0] + g_tau[:, 1], minlength=n)
        g_tb += np.bincount(self.J, g_tau[:, 2] + g_tau[:, 3], minlength=n)
        g_td = np.bincount(self.I, g_tau[:, 1], minlength=n)
        g_td += np.bincount(self.J, g_tau[:, 3], minlength=n)
        grad = np.empty_like(x)
        grad[:n] = g_tb
        grad[n : 2 * n] = g_td * _sigmoid(x[n : 2 * n])
        grad[-1] = 0.0
        if self.use_durations:
            ud = x[n : 2 * n]
            nll, z, log_t = self._duration_terms(ud, c)
            f += self.lam * float(self.dur_weight @ nll)
            dz = self.lam * self.dur_weight * (MAX_RANK * _sigmoid(z) - self.dur_rank)
            # d log softplus(u) / du = sigmoid(u) / softplus(u), which tends to 1 as u -> -inf
            u = ud[self.dur_index]
            dlog = np.where(u < -30.0, 1.0, _sigmoid(u) / _softplus(np.maximum(u, -30.0)))
            grad[n : 2 * n] += np.bincount(self.dur_index, dz * c * dlog, minlength=n)
            grad[-1] = float(dz @ log_t)
        return f, grad

    def kink_margin(self, x) -> float:
        """Distance from the nearest L1 kink or min/max tie at ``x``."""
        tb, td, _ = self.unpack(x)
        tau = self._tau(tb, td)
        q, _, hi, lo = self._projection(tau)
        # A term spanning the whole range is identically +-1 while the
        # min/max selection holds, so a zero residual there is not a kink.
        plus, minus = self._plus[None, :], self._minus[None, :]
        full = ((plus == hi[:, None]) & (minus == lo[:, None])) | ((plus == lo[:, None]) & (minus == hi[:, None]))
        r = np.abs(q - self.G)[~full]
        margin = float(r.min()) if r.size else math.inf
        srt = np.sort(tau, axis=1)
        margin = min(margin, float((srt[:, 1] - srt[:, 0]).min()), float((srt[:, 3] - srt[:, 2]).min()))
        return margin


def check_connected(observations: Sequence[PairObservation], n_predicates: int) -> None:
    parent = list(range(n_predicates))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for o in observations:
        if not (0 <= o.i < n_predicates and 0 <= o.j < n_predicates):
            raise ValueError(f"observation ({o.i}, {o.j}) refers to an unknown predicate")
        parent[find(o.i)] = find(o.j)
    roots = {find(k) for k in range(n_predicates)}
    if len(roots) > 1:
        raise NotConnected(f"observations split the {n_predicates} predicates into {len(roots)} components")


def induce(
    observations: Sequence[PairObservation],
    n_predicates: int,
    cfg: Optional[InductionConfig] = None,
    ids: Optional[List[str]] = None,
    texts: Optional[List[str]] = None,
) -> InductionResult:
    """Fit a document timeline to pairwise observations."""
    cfg = cfg or InductionConfig()
    if n_predicates < 1:
        raise ValueError("need at least one predicate")
    check_connected(observations, n_predicates)
    objective = InductionObjective(observations, n_predicates, cfg.duration_weight)
    x0 = objective.initial_point(cfg.seed)
    x, f, iterations, status, trace = _descend(objective, x0, cfg)
    converged = status != "max_iters"
    if not converged:
        warnings.warn(
            f"induction stopped after {iterations} iterations without meeting tolerance {cfg.tolerance}",
            NoConvergence,
            stacklevel=2,
        )

    tb, td, c = objective.unpack(x)
    begins = tb - tb.min()
    timeline = DocumentTimeline(begins.tolist(), td.tolist(), ids=ids, texts=texts)
    residuals = objective.residuals(x)
    rel = float(objective.W @ residuals)
    return InductionResult(
        timeline=timeline,
        loss=f,
        relation_loss=rel,
        mean_pair_loss=float(residuals.mean()) if residuals.size else 0.0,
        iterations=iterations,
        converged=converged,
        status=status,
        residuals=residuals.tolist(),
        duration_coeff=float(c),
        trace=trace,
    )


SMOOTHING_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0)
_EXACT_FIT = 1e-14


def _descend(objective, x, cfg):
    """Minimize over a smoothing schedule.

    Each stage minimizes the relation loss with ``|r|`` replaced by
    ``sqrt(r**2 + mu**2) - mu``, warm-started from the previous stage; the
    last stage (``mu = 0``) works on the true objective, using
    ``sign(0) = 0`` at kinks.  A stage may use its share of the iterations
    left in ``cfg.max_iters``.  Returns the stage end with the lowest true
    objective.
    """
    trace = []
    iterations = 0
    best_x, best_f = x, objective.value(x)
    status = "max_iters"
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for stage, mu in enumerate(SMOOTHING_SCHEDULE):
            budget = max(1, (cfg.max_iters - iterations) // (len(SMOOTHING_SCHEDULE) - stage))
            x, _, used, status, stage_trace = descend(
                lambda p: objective.value(p, mu),
                lambda p: objective.value_and_grad(p, mu),
                x,
                max_iters=budget,
                step_size=cfg.step_size,
                tolerance=cfg.tolerance,
                exact_fit=_EXACT_FIT,
            )
            iterations += used
            trace.extend(stage_trace)
            true_f = objective.value(x)
            if true_f <= best_f:
                best_x, best_f = x, true_f
    return best_x, best_f, iterations, status, trace


def compare_timelines(a: DocumentTimeline, b: DocumentTimeline) -> dict:
    """Rank agreement of begins and of durations between two timelines."""
    if len(a) != len(b) or len(a) < 2:
        raise ValueError("timelines must have the same number (>= 2) of predicates")
    return {
        "begin_rho": spearman(a.begins, b.begins),
        "duration_rho": spearman(a.durations, b.durations),
    }


def finite_difference_check(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    h: float = 1e-6,
) -> float:
    """Max absolute gap between ``grad(x)`` and central differences of ``fun``."""
    x = np.asarray(x, dtype=float)
    analytic = np.asarray(grad(x), dtype=float)
    numeric = np.empty_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = h
        numeric[k] = (fun(x + step) - fun(x - step)) / (2.0 * h)
    return float(np.max(np.abs(analytic - numeric)))


def gradient_check(
    observations: Sequence[PairObservation],
    x,
    n_predicates: int,
    duration_weight: float = 0.0,
    margin: float = 1e-4,
    h: float = 1e-6,
) -> float:
    """Compare the analytic induction gradient with central differences at ``x``.

    ``x`` is a packed parameter vector (see :class:`InductionObjective`).
    Raises :class:`KinkNearby` when ``x`` is within ``margin`` of a point
    where the objective is not differentiable.
    """
    objective = InductionObjective(observations, n_predicates, duration_weight)
    x = np.asarray(x, dtype=float)
    found = objective.kink_margin(x)
    if found < margin:
        raise KinkNearby(f"nearest kink or tie at distance {found:.3g} < {margin}")
    return finite_difference_check(objective.value, lambda p: objective.value_and_grad(p)[1], x, h=h)
