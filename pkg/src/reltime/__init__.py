"""Fine-grained temporal relations and durations between event predicates."""

__version__ = "0.1.0"

from .duration import DurationClass, DurationDistribution, binomial_distribution, softmax_distribution
from .errors import (
    DegenerateInput,
    DegenerateSliders,
    DomainError,
    KinkNearby,
    MalformedAssignment,
    NoConvergence,
    NoPredicates,
    NotConnected,
    ReltimeError,
    SchemaError,
    SingularCovariance,
)
from .induction import DocumentTimeline, InductionConfig, PairObservation, induce
from .metrics import MetricReport, relation_loss, spearman
from .timeline import (
    AllenRelation,
    CoarseRelation,
    RelationCoordinates,
    RelativeTimeline,
    SliderQuadruple,
    interval_relation,
    normalize_sliders,
    rotate,
    unrotate,
)

__all__ = [
    "AllenRelation",
    "CoarseRelation",
    "DegenerateInput",
    "DegenerateSliders",
    "DocumentTimeline",
    "DomainError",
    "DurationClass",
    "DurationDistribution",
    "InductionConfig",
    "KinkNearby",
    "MalformedAssignment",
    "MetricReport",
    "NoConvergence",
    "NoPredicates",
    "NotConnected",
    "PairObservation",
    "RelationCoordinates",
    "RelativeTimeline",
    "ReltimeError",
    "SchemaError",
    "SingularCovariance",
    "SliderQuadruple",
    "binomial_distribution",
    "induce",
    "interval_relation",
    "normalize_sliders",
    "relation_loss",
    "rotate",
    "softmax_distribution",
    "spearman",
    "unrotate",
]
