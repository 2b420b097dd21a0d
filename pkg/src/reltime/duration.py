"""Ordinal event durations and distributions over them."""

import math
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import DomainError
from .timeline import check_quadruple, sigmoid

MAX_RANK = 10
NUM_CLASSES = MAX_RANK + 1
# -log of the smallest probability reported by duration_nll.
NLL_CAP = -math.log(1e-300)


class DurationClass(IntEnum):
    INSTANTANEOUS = 0
    SECONDS = 1
    MINUTES = 2
    HOURS = 3
    DAYS = 4
    WEEKS = 5
    MONTHS = 6
    YEARS = 7
    DECADES = 8
    CENTURIES = 9
    FOREVER = 10

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "DurationClass":
        try:
            return cls[label.upper()]
        except KeyError:
            raise ValueError(f"unknown duration class {label!r}") from None


DURATION_LABELS = tuple(d.label for d in DurationClass)


class DurationDistribution:
    """Probabilities over the eleven duration classes."""

    __slots__ = ("p",)

    def __init__(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (NUM_CLASSES,):
            raise ValueError(f"expected {NUM_CLASSES} probabilities, got shape {p.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        p.setflags(write=False)
        self.p = p

    def __getitem__(self, c: int) -> float:
        return float(self.p[c])

    def __len__(self) -> int:
        return NUM_CLASSES

    def __repr__(self) -> str:
        return f"DurationDistribution({np.array2string(self.p, precision=4)})"

    def mode(self) -> DurationClass:
        return DurationClass(int(np.argmax(self.p)))


_BINOM = np.array([math.comb(MAX_RANK, c) for c in range(NUM_CLASSES)], dtype=float)
_RANKS = np.arange(NUM_CLASSES)


def binomial_distribution(pi: float) -> DurationDistribution:
    """Binomial(10, pi) pmf over duration ranks; log-concave in the rank."""
    if not 0.0 <= pi <= 1.0:
        raise DomainError(f"binomial parameter must lie in [0, 1], got {pi}")
    p = _BINOM * np.power(pi, _RANKS) * np.power(1.0 - pi, MAX_RANK - _RANKS)
    # Rounding can leave the sum a few ulps off 1.
    return DurationDistribution(p / p.sum())


def binomial_mode(pi: float) -> DurationClass:
    return binomial_distribution(pi).mode()


def softmax_distribution(logits: Sequence[float]) -> DurationDistribution:
    z = np.asarray(logits, dtype=float)
    if z.shape != (NUM_CLASSES,) or not np.all(np.isfinite(z)):
        raise ValueError("expected 11 finite logits")
    ez = np.exp(z - z.max())
    return DurationDistribution(ez / ez.sum())


def duration_nll(dist: DurationDistribution, gold: int) -> float:
    """Cross-entropy of the gold class; capped at ``-log(1e-300)``."""
    p = dist[int(gold)]
    if p <= 1e-300:
        return NLL_CAP
    return -math.log(p)


def pi_from_relative_duration(t: Sequence[float], event: int) -> float:
    """Relative length ``e_k - b_k`` of event 1 or 2 in a normalized timeline."""
    if event not in (1, 2):
        raise ValueError("event must be 1 or 2")
    b, e = (t[0], t[1]) if event == 1 else (t[2], t[3])
    return min(max(e - b, 0.0), 1.0)


def pi_from_absolute_duration(t_dur: float, coeff: float) -> float:
    """``sigmoid(coeff * log(t_dur))`` for a positive duration."""
    if not t_dur > 0:
        raise DomainError(f"duration must be positive, got {t_dur}")
    return sigmoid(coeff * math.log(t_dur))


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def check_consistency(raw: Sequence[float], d1: int, d2: int) -> bool:
    """True unless slider spans and duration ranks order the events oppositely.

    An annotation is inconsistent when the event with the longer slider span
    was given the strictly shorter duration class, or vice versa.
    """
    check_quadruple(raw)
    b1, e1, b2, e2 = raw
    span_order = _sign((e1 - b1) - (e2 - b2))
    rank_order = _sign(int(d1) - int(d2))
    return span_order * rank_order >= 0
