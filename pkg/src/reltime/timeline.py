"""Pairwise relative timelines.

A pair of events is described by four points on a line: the beginning and
end of the first event and the beginning and end of the second.  Raw
annotations live on an arbitrary slider scale; normalizing shifts the
earliest point to 0 and stretches the latest to 1.  The normalized
quadruple can be rotated into four interpretable coordinates (priority,
containment, equality, shift) and back.
"""

import math
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateSliders

DEFAULT_EPSILON = 1e-6

# Rows of the rotation: coordinates @ ROTATION == 2 * sliders - 1.
ROTATION = np.array(
    [
        [-1.0, -1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0, -1.0],
        [-1.0, 1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0, 1.0],
    ]
)


class SliderQuadruple(NamedTuple):
    """Raw slider positions ``(b1, e1, b2, e2)`` on any scale."""

    b1: float
    e1: float
    b2: float
    e2: float


class RelativeTimeline(NamedTuple):
    """Normalized slider positions in ``[0, 1]``."""

    b1: float
    e1: float
    b2: float
    e2: float

    def swap(self) -> "RelativeTimeline":
        return RelativeTimeline(self.b2, self.e2, self.b1, self.e1)


class RelationCoordinates(NamedTuple):
    priority: float
    containment: float
    equality: float
    shift: float


class RelationHeadParams(NamedTuple):
    """Unconstrained outputs of a relation head: begin and length logits."""

    beta1: float
    delta1: float
    beta2: float
    delta2: float


class AllenRelation(str, Enum):
    BEFORE = "before"
    MEETS = "meets"
    OVERLAPS = "overlaps"
    STARTS = "starts"
    DURING = "during"
    FINISHES = "finishes"
    EQUAL = "equal"
    FINISHED_BY = "finished_by"
    CONTAINS = "contains"
    STARTED_BY = "started_by"
    OVERLAPPED_BY = "overlapped_by"
    MET_BY = "met_by"
    AFTER = "after"


class CoarseRelation(str, Enum):
    BEFORE = "BEFORE"
    AFTER = "AFTER"
    INCLUDES = "INCLUDES"
    IS_INCLUDED = "IS_INCLUDED"
    SIMULTANEOUS = "SIMULTANEOUS"
    VAGUE = "VAGUE"


COARSE_LABEL = {
    AllenRelation.BEFORE: CoarseRelation.BEFORE,
    AllenRelation.MEETS: CoarseRelation.BEFORE,
    AllenRelation.AFTER: CoarseRelation.AFTER,
    AllenRelation.MET_BY: CoarseRelation.AFTER,
    AllenRelation.CONTAINS: CoarseRelation.INCLUDES,
    AllenRelation.STARTED_BY: CoarseRelation.INCLUDES,
    AllenRelation.FINISHED_BY: CoarseRelation.INCLUDES,
    AllenRelation.DURING: CoarseRelation.IS_INCLUDED,
    AllenRelation.STARTS: CoarseRelation.IS_INCLUDED,
    AllenRelation.FINISHES: CoarseRelation.IS_INCLUDED,
    AllenRelation.EQUAL: CoarseRelation.SIMULTANEOUS,
    AllenRelation.OVERLAPS: CoarseRelation.VAGUE,
    AllenRelation.OVERLAPPED_BY: CoarseRelation.VAGUE,
}


class IntervalRelation(NamedTuple):
    allen: AllenRelation
    coarse: CoarseRelation


def check_quadruple(values: Sequence[float]) -> None:
    """Raise ``ValueError`` unless ``values`` is a finite, ordered quadruple."""
    if len(values) != 4:
        raise ValueError(f"expected 4 slider values, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"slider values must be finite: {tuple(values)}")
    b1, e1, b2, e2 = values
    if e1 < b1 or e2 < b2:
        raise ValueError(f"slider end precedes begin: {tuple(values)}")


def normalize_sliders(raw: Sequence[float]) -> RelativeTimeline:
    """Shift the smallest value to 0 and scale the largest to 1.

    >>> normalize_sliders([10, 20, 10, 20])
    RelativeTimeline(b1=0.0, e1=1.0, b2=0.0, e2=1.0)
    """
    check_quadruple(raw)
    lo = min(raw)
    shifted = [float(v) - lo for v in raw]
    span = max(shifted)
    if span == 0.0:
        raise DegenerateSliders(f"all slider values equal: {tuple(raw)}")
    return RelativeTimeline(*(v / span for v in shifted))


def normalize_array(raw) -> np.ndarray:
    """Row-wise :func:`normalize_sliders` for an ``(N, 4)`` array."""
    raw = np.asarray(raw, dtype=float)
    shifted = raw - raw.min(axis=1, keepdims=True)
    span = shifted.max(axis=1, keepdims=True)
    if np.any(span == 0.0):
        bad = int(np.flatnonzero(span[:, 0] == 0.0)[0])
        raise DegenerateSliders(f"row {bad}: all slider values equal")
    return shifted / span


def rotate(t: Sequence[float]) -> RelationCoordinates:
    """Map a relative timeline to (priority, containment, equality, shift)."""
    s = 2.0 * np.asarray(t, dtype=float) - 1.0
    return RelationCoordinates(*(float(v) for v in s @ ROTATION.T / 4.0))


def unrotate(r: Sequence[float]) -> SliderQuadruple:
    """Inverse of :func:`rotate`.

    The result is not renormalized, so coordinates that did not come from a
    relative timeline may yield values outside ``[0, 1]``.
    """
    s = (np.asarray(r, dtype=float) @ ROTATION + 1.0) / 2.0
    return SliderQuadruple(*(float(v) for v in s))


def rotate_array(timelines) -> np.ndarray:
    return (2.0 * np.asarray(timelines, dtype=float) - 1.0) @ ROTATION.T / 4.0


def unrotate_array(coords) -> np.ndarray:
    return (np.asarray(coords, dtype=float) @ ROTATION + 1.0) / 2.0


def sigmoid(x):
    """Numerically stable logistic function for scalars or arrays."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def head_params_to_timeline(p: Sequence[float]) -> RelativeTimeline:
    """Turn four unconstrained head outputs into a normalized timeline.

    Each event begins at ``sigmoid(beta)`` and ends at
    ``sigmoid(beta + |delta|)``, so its end never precedes its begin.
    """
    beta1, delta1, beta2, delta2 = (float(v) for v in p)
    if not all(math.isfinite(v) for v in (beta1, delta1, beta2, delta2)):
        raise ValueError(f"head parameters must be finite: {tuple(p)}")
    raw = sigmoid([beta1, beta1 + abs(delta1), beta2, beta2 + abs(delta2)])
    return normalize_sliders(raw.tolist())


def _cmp(x: float, y: float, epsilon: float) -> int:
    if abs(x - y) <= epsilon:
        return 0
    return -1 if x < y else 1


def interval_relation(t: Sequence[float], epsilon: float = DEFAULT_EPSILON) -> IntervalRelation:
    """Allen relation of the first event's interval to the second's.

    Endpoints closer than ``epsilon`` count as equal.  Point intervals are
    resolved in the order equal, starts/finishes, meets, the rest.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    b1, e1, b2, e2 = t
    bb = _cmp(b1, b2, epsilon)
    ee = _cmp(e1, e2, epsilon)
    if _cmp(e1, b2, epsilon) < 0:
        rel = AllenRelation.BEFORE
    elif _cmp(b1, e2, epsilon) > 0:
        rel = AllenRelation.AFTER
    elif bb == 0 and ee == 0:
        rel = AllenRelation.EQUAL
    elif bb == 0:
        rel = AllenRelation.STARTS if ee < 0 else AllenRelation.STARTED_BY
    elif ee == 0:
        rel = AllenRelation.FINISHES if bb > 0 else AllenRelation.FINISHED_BY
    elif _cmp(e1, b2, epsilon) == 0:
        rel = AllenRelation.MEETS
    elif _cmp(b1, e2, epsilon) == 0:
        rel = AllenRelation.MET_BY
    elif bb > 0 and ee < 0:
        rel = AllenRelation.DURING
    elif bb < 0 and ee > 0:
        rel = AllenRelation.CONTAINS
    elif bb < 0:
        rel = AllenRelation.OVERLAPS
    else:
        rel = AllenRelation.OVERLAPPED_BY
    return IntervalRelation(rel, COARSE_LABEL[rel])
