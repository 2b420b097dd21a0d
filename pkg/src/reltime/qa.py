"""Annotation quality control: ridit-scored confidence, rejection checks, agreement."""

import json
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .corpus import AnnotationRecord
from .duration import check_consistency
from .errors import MalformedAssignment
from .metrics import spearman
from .timeline import normalize_sliders

ASSIGNMENT_SIZE = 5
MIN_SECONDS = 60.0
INCONSISTENT_FRACTION = 0.6


class FlagKind(str, Enum):
    TIME = "TIME"
    CONSTANT_SLIDERS = "CONSTANT_SLIDERS"
    CONSTANT_DURATIONS = "CONSTANT_DURATIONS"
    INCONSISTENT = "INCONSISTENT"


@dataclass(frozen=True)
class QaFlag:
    kind: FlagKind
    detail: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "detail": self.detail}


@dataclass
class Assignment:
    annotator_id: str
    elapsed_seconds: float
    annotations: Sequence[AnnotationRecord]

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "elapsed_seconds": self.elapsed_seconds,
            "annotations": [a.to_dict() for a in self.annotations],
        }


def ridit_scores(ratings: Sequence[int]) -> List[float]:
    """Ridit score of each rating against the annotator's own ratings.

    A rating ``r`` maps to ``(#ratings below r + #ratings equal to r / 2) / n``.
    """
    ratings = [int(r) for r in ratings]
    if not ratings:
        return []
    n = len(ratings)
    counts = np.bincount(ratings, minlength=max(ratings) + 1)
    below = np.concatenate([[0], np.cumsum(counts)[:-1]])
    table = (below + 0.5 * counts) / n
    return [float(table[r]) for r in ratings]


def ridit_weights(records: Sequence[AnnotationRecord]) -> List[Tuple[float, float, float]]:
    """Per-record ``(w_rel, w_dur1, w_dur2)`` confidence weights.

    Relation confidences are scored against the annotator's relation
    ratings and duration confidences against the annotator's pooled
    duration ratings.
    """
    rel_idx: Dict[str, List[int]] = defaultdict(list)
    dur_idx: Dict[str, List[Tuple[int, int]]] = defaultdict(list)
    for k, r in enumerate(records):
        rel_idx[r.annotator_id].append(k)
        dur_idx[r.annotator_id].extend(((k, 1), (k, 2)))
    weights = [[0.0, 0.0, 0.0] for _ in records]
    for annotator, idx in rel_idx.items():
        for k, w in zip(idx, ridit_scores([records[k].conf_rel for k in idx])):
            weights[k][0] = w
    for annotator, idx in dur_idx.items():
        confs = [records[k].conf_dur1 if slot == 1 else records[k].conf_dur2 for k, slot in idx]
        for (k, slot), w in zip(idx, ridit_scores(confs)):
            weights[k][slot] = w
    return [tuple(w) for w in weights]


def validate_assignment(a: Assignment) -> List[QaFlag]:
    """Run the rejection checks on one five-annotation assignment.

    CONSTANT_DURATIONS is advisory: such assignments are meant for manual
    review, not automatic rejection.
    """
    if len(a.annotations) != ASSIGNMENT_SIZE:
        raise MalformedAssignment(f"assignment has {len(a.annotations)} annotations, expected {ASSIGNMENT_SIZE}")
    if a.elapsed_seconds < 0:
        raise MalformedAssignment("elapsed time must be nonnegative")
    flags = []
    if a.elapsed_seconds < MIN_SECONDS:
        flags.append(QaFlag(FlagKind.TIME, f"completed in {a.elapsed_seconds:g}s"))
    sliders = {v for r in a.annotations for v in r.sliders}
    if len(sliders) == 1:
        flags.append(QaFlag(FlagKind.CONSTANT_SLIDERS, f"every slider at {next(iter(sliders))!r}"))
    durations = {d for r in a.annotations for d in r.durations}
    if len(durations) == 1:
        flags.append(QaFlag(FlagKind.CONSTANT_DURATIONS, f"every duration is {next(iter(durations)).label}"))
    bad = sum(not check_consistency(r.sliders, r.dur1, r.dur2) for r in a.annotations)
    if bad / ASSIGNMENT_SIZE > INCONSISTENT_FRACTION:
        flags.append(QaFlag(FlagKind.INCONSISTENT, f"{bad} of {ASSIGNMENT_SIZE} annotations inconsistent"))
    return flags


def group_assignments(records: Sequence[AnnotationRecord]) -> List[Assignment]:
    """Chunk each annotator's records, in input order, into assignments of five.

    Annotators appear in order of first occurrence.  The assignment's elapsed
    time is the sum over its records.  A final chunk with fewer than five
    records is kept so the caller can decide how to treat it.
    """
    by_annotator: Dict[str, List[AnnotationRecord]] = {}
    for r in records:
        by_annotator.setdefault(r.annotator_id, []).append(r)
    out = []
    for annotator, recs in by_annotator.items():
        for k in range(0, len(recs), ASSIGNMENT_SIZE):
            chunk = recs[k : k + ASSIGNMENT_SIZE]
            out.append(Assignment(annotator, float(sum(r.elapsed_seconds for r in chunk)), chunk))
    return out


def qa_line(a: Assignment, flags: Sequence[QaFlag]) -> str:
    return json.dumps({"annotator_id": a.annotator_id, "flags": [f.to_dict() for f in flags]})


def iaa_report(shared: Sequence[Tuple[AnnotationRecord, AnnotationRecord]]) -> dict:
    """Agreement between two annotators on the items they both annotated."""
    if len(shared) < 2:
        raise ValueError("agreement needs at least two shared items")
    xs, ys, diffs = [], [], []
    for a, b in shared:
        xs.extend(normalize_sliders(a.sliders))
        ys.extend(normalize_sliders(b.sliders))
        diffs.extend((abs(int(a.dur1) - int(b.dur1)), abs(int(a.dur2) - int(b.dur2))))
    return {
        "slider_rho": spearman(xs, ys),
        "mean_duration_rank_diff": float(np.mean(diffs)),
    }
