"""Annotation records, dependency-based pair generation, and synthetic corpora."""

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .duration import DurationClass, binomial_mode, pi_from_absolute_duration
from .errors import NoPredicates, SchemaError
from .timeline import normalize_sliders

RECORD_FIELDS = (
    "document_id",
    "sentence_ids",
    "pred1_root",
    "pred1_span",
    "pred2_root",
    "pred2_span",
    "sliders",
    "dur1",
    "dur2",
    "conf_rel",
    "conf_dur1",
    "conf_dur2",
    "annotator_id",
    "elapsed_seconds",
)

PIVOT_RELATIONS = frozenset({"ccomp", "csubj", "xcomp"})


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotated predicate pair.

    Slider values keep the numeric type they were read with so that
    serialization reproduces the input exactly.
    """

    document_id: str
    sentence_ids: Tuple
    pred1_root: int
    pred1_span: Tuple[int, ...]
    pred2_root: int
    pred2_span: Tuple[int, ...]
    sliders: Tuple[float, float, float, float]
    dur1: DurationClass
    dur2: DurationClass
    conf_rel: int
    conf_dur1: int
    conf_dur2: int
    annotator_id: str
    elapsed_seconds: float

    @property
    def durations(self) -> Tuple[DurationClass, DurationClass]:
        return self.dur1, self.dur2

    @property
    def confidences(self) -> Tuple[int, int, int]:
        return self.conf_rel, self.conf_dur1, self.conf_dur2

    @property
    def pred1_key(self) -> str:
        return f"{self.sentence_ids[0]}:{self.pred1_root}"

    @property
    def pred2_key(self) -> str:
        return f"{self.sentence_ids[1]}:{self.pred2_root}"

    def to_dict(self) -> dict:
        return {
            "document_id": self.document_id,
            "sentence_ids": list(self.sentence_ids),
            "pred1_root": self.pred1_root,
            "pred1_span": list(self.pred1_span),
            "pred2_root": self.pred2_root,
            "pred2_span": list(self.pred2_span),
            "sliders": list(self.sliders),
            "dur1": self.dur1.label,
            "dur2": self.dur2.label,
            "conf_rel": self.conf_rel,
            "conf_dur1": self.conf_dur1,
            "conf_dur2": self.conf_dur2,
            "annotator_id": self.annotator_id,
            "elapsed_seconds": self.elapsed_seconds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return (_is_int(v) or isinstance(v, float)) and math.isfinite(v)


def record_from_dict(obj, line: Optional[int] = None) -> AnnotationRecord:
    """Validate a decoded JSON object and build an :class:`AnnotationRecord`."""

    def fail(name, message):
        raise SchemaError(message, line=line, field=name)

    if not isinstance(obj, dict):
        raise SchemaError("record must be a JSON object", line=line)
    for name in RECORD_FIELDS:
        if name not in obj:
            fail(name, "missing field")
    extra = sorted(set(obj) - set(RECORD_FIELDS))
    if extra:
        fail(extra[0], "unexpected field")

    if not isinstance(obj["document_id"], str):
        fail("document_id", "must be a string")
    sids = obj["sentence_ids"]
    if not isinstance(sids, list) or len(sids) != 2 or not all(isinstance(s, (str, int)) for s in sids):
        fail("sentence_ids", "must be a list of two ids")
    for k in (1, 2):
        root, span = obj[f"pred{k}_root"], obj[f"pred{k}_span"]
        if not _is_int(root):
            fail(f"pred{k}_root", "must be an integer token index")
        if not isinstance(span, list) or not span or not all(_is_int(i) for i in span):
            fail(f"pred{k}_span", "must be a nonempty list of token indices")
        if root not in span:
            fail(f"pred{k}_root", "root must lie inside the span")
    sliders = obj["sliders"]
    if not isinstance(sliders, list) or len(sliders) != 4 or not all(_is_real(v) for v in sliders):
        fail("sliders", "must be a list of four finite numbers")
    if sliders[1] < sliders[0] or sliders[3] < sliders[2]:
        fail("sliders", "slider end precedes begin")
    durs = []
    for name in ("dur1", "dur2"):
        try:
            durs.append(DurationClass.from_label(obj[name]))
        except (ValueError, AttributeError):
            fail(name, f"unknown duration class {obj[name]!r}")
    for name in ("conf_rel", "conf_dur1", "conf_dur2"):
        v = obj[name]
        if not _is_int(v) or not 0 <= v <= 4:
            fail(name, f"confidence must be an integer in 0..4, got {v!r}")
    if not isinstance(obj["annotator_id"], str):
        fail("annotator_id", "must be a string")
    elapsed = obj["elapsed_seconds"]
    if not _is_real(elapsed) or elapsed < 0:
        fail("elapsed_seconds", "must be a nonnegative number")

    return AnnotationRecord(
        document_id=obj["document_id"],
        sentence_ids=tuple(sids),
        pred1_root=obj["pred1_root"],
        pred1_span=tuple(obj["pred1_span"]),
        pred2_root=obj["pred2_root"],
        pred2_span=tuple(obj["pred2_span"]),
        sliders=tuple(sliders),
        dur1=durs[0],
        dur2=durs[1],
        conf_rel=obj["conf_rel"],
        conf_dur1=obj["conf_dur1"],
        conf_dur2=obj["conf_dur2"],
        annotator_id=obj["annotator_id"],
        elapsed_seconds=elapsed,
    )


def iter_jsonl(lines: Iterable[str]) -> Iterator[Tuple[int, object]]:
    """Yield ``(line_number, decoded_object)``, skipping blank lines."""
    for lineno, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            yield lineno, json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from None


def parse_annotations(lines: Iterable[str]) -> List[AnnotationRecord]:
    return [record_from_dict(obj, line=n) for n, obj in iter_jsonl(lines)]


def serialize_annotations(records: Iterable[AnnotationRecord]) -> str:
    return "".join(r.to_json() + "\n" for r in records)


# --- dependency input ------------------------------------------------------


@dataclass
class DependencySentence:
    """A dependency-parsed sentence.

    Token ids are 1-based as in CoNLL-U; ``heads[i]`` is the head of token
    ``i + 1`` with 0 marking the root.  ``predicates`` lists the root token
    ids of the sentence's predicates.
    """

    tokens: List[str]
    heads: List[int]
    deprels: List[str]
    predicates: List[int] = field(default_factory=list)
    sent_id: str = ""
    doc_id: str = ""

    def __post_init__(self):
        n = len(self.tokens)
        if len(self.heads) != n or len(self.deprels) != n:
            raise ValueError("tokens, heads and deprels must have equal length")
        roots = [i + 1 for i, h in enumerate(self.heads) if h == 0]
        if len(roots) != 1:
            raise ValueError(f"sentence {self.sent_id!r} must have exactly one root")
        for i, h in enumerate(self.heads):
            if not 0 <= h <= n or h == i + 1:
                raise ValueError(f"bad head {h} for token {i + 1}")
        for tok in range(1, n + 1):
            seen = set()
            node = tok
            while node != 0:
                if node in seen:
                    raise ValueError(f"sentence {self.sent_id!r}: heads contain a cycle")
                seen.add(node)
                node = self.heads[node - 1]
        for p in self.predicates:
            if not 1 <= p <= n:
                raise ValueError(f"predicate root {p} outside sentence")

    @property
    def root(self) -> int:
        return self.heads.index(0) + 1

    def form(self, token_id: int) -> str:
        return self.tokens[token_id - 1]

    def dependents(self, token_id: int) -> List[Tuple[int, str]]:
        return [(i + 1, rel) for i, (h, rel) in enumerate(zip(self.heads, self.deprels)) if h == token_id]

    def depth(self, token_id: int) -> int:
        d = 0
        while token_id != 0:
            token_id = self.heads[token_id - 1]
            d += 1
        return d


def read_conllu(lines: Iterable[str]) -> List[DependencySentence]:
    """Read ID, FORM, HEAD and DEPREL columns; multiword and empty nodes are skipped."""
    sentences = []
    tokens, heads, rels = [], [], []
    sent_id = doc_id = ""
    current_doc = ""

    def flush():
        nonlocal tokens, heads, rels, sent_id
        if tokens:
            sid = sent_id or str(len(sentences))
            sentences.append(DependencySentence(tokens, heads, rels, sent_id=sid, doc_id=current_doc))
        tokens, heads, rels, sent_id = [], [], [], ""

    for raw in lines:
        line = raw.rstrip("\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            key = key.strip()
            if key == "sent_id":
                sent_id = value.strip()
            elif key.startswith("newdoc"):
                current_doc = value.strip() or doc_id
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            raise ValueError(f"CoNLL-U line has {len(cols)} columns: {line!r}")
        if "-" in cols[0] or "." in cols[0]:
            continue
        tokens.append(cols[1])
        heads.append(int(cols[6]))
        rels.append(cols[7])
    flush()
    return sentences


def attach_predicates(sentences: Sequence[DependencySentence], sidecar: dict) -> None:
    """Set ``predicates`` on each sentence from a ``sent_id -> [roots]`` map."""
    for s in sentences:
        s.predicates = sorted(int(i) for i in sidecar.get(s.sent_id, []))
        s.__post_init__()


def _base_relation(deprel: str) -> str:
    return deprel.split(":")[0].lower()


def pivot_predicate(s: DependencySentence) -> int:
    """Root token id of the sentence's pivot predicate.

    Starts at the predicate highest in the tree (the syntactic root when it
    is a predicate) and follows clausal-complement and clausal-subject edges
    (ccomp, csubj, xcomp) to dependent predicates until none is left.  When
    a predicate governs several such dependents the leftmost one is taken.
    """
    if not s.predicates:
        raise NoPredicates(f"sentence {s.sent_id!r} has no predicates")
    preds = set(s.predicates)
    current = min(preds, key=lambda p: (s.depth(p), p))
    for _ in range(len(s.tokens)):
        nxt = [dep for dep, rel in s.dependents(current) if dep in preds and _base_relation(rel) in PIVOT_RELATIONS]
        if not nxt:
            break
        current = min(nxt)
    return current


PredicateRef = Tuple[int, int]  # (sentence position: 0 antecedent / 1 consequent, root token id)


def generate_pairs(
    antecedent: DependencySentence, consequent: DependencySentence
) -> List[Tuple[PredicateRef, PredicateRef]]:
    """All antecedent-internal pairs plus each consequent predicate with the pivot.

    Yields ``C(N, 2) + M`` pairs for ``N`` antecedent and ``M`` consequent
    predicates.  Within each pair the first element precedes the second in
    linear order.
    """
    if not antecedent.predicates:
        raise NoPredicates(f"sentence {antecedent.sent_id!r} has no predicates")
    within = [((0, a), (0, b)) for a, b in combinations(sorted(antecedent.predicates), 2)]
    if not consequent.predicates:
        return within
    pivot = pivot_predicate(antecedent)
    across = [((0, pivot), (1, c)) for c in sorted(consequent.predicates)]
    return within + across


# --- synthetic corpus ------------------------------------------------------


@dataclass
class SynthConfig:
    n_predicates: int = 6
    noise_sd: float = 0.0
    duration_coeff: float = 1.0
    seed: int = 0
    document_id: Optional[str] = None
    min_gap: float = 0.05

    def __post_init__(self):
        if self.n_predicates < 2:
            raise ValueError("n_predicates must be at least 2")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")


def _sample_timeline(n: int, min_gap: float, rng: np.random.Generator):
    while True:
        begins = np.sort(rng.uniform(0.0, float(n), size=n))
        rng.shuffle(begins)
        durations = np.exp(rng.uniform(-1.0, 1.0, size=n))
        ends = begins + durations
        points = np.sort(np.concatenate([begins, ends]))
        if np.min(np.diff(points)) >= min_gap:
            return begins - begins.min(), durations


def synth_document(cfg: SynthConfig):
    """Sample a ground-truth timeline and the pairwise data it implies.

    Returns ``(timeline, observations, records)``.  Observations cover the
    cycle of pairs ``(k, k + 1)`` and ``(0, n - 1)``.  Noise is added on the
    normalized slider scale, ends are clamped to their begins, and each pair
    is renormalized.  Duration classes are the binomial modes under
    ``pi = sigmoid(duration_coeff * log(duration))``.
    """
    from .induction import DocumentTimeline, PairObservation, project_pair

    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_predicates
    doc_id = cfg.document_id or f"synth-{cfg.seed}"
    begins, durations = _sample_timeline(n, cfg.min_gap, rng)
    ids = [f"{doc_id}-s{k}:2" for k in range(n)]
    timeline = DocumentTimeline(begins.tolist(), durations.tolist(), ids=ids, texts=[f"event{k}" for k in range(n)])
    classes = [binomial_mode(pi_from_absolute_duration(d, cfg.duration_coeff)) for d in durations]

    pairs = [(k, k + 1) for k in range(n - 1)]
    if n > 2:
        pairs.append((0, n - 1))
    observations, records = [], []
    for i, j in pairs:
        target = np.asarray(project_pair(timeline, i, j), dtype=float)
        if cfg.noise_sd > 0:
            target = target + rng.normal(0.0, cfg.noise_sd, size=4)
            for b, e in ((0, 1), (2, 3)):
                if target[e] < target[b]:
                    target[b] = target[e] = 0.5 * (target[b] + target[e])
            target = np.asarray(normalize_sliders(target.tolist()))
        observations.append(PairObservation(i, j, tuple(target.tolist()), 1.0, (classes[i], classes[j])))
        conf = rng.integers(0, 5, size=3)
        records.append(
            AnnotationRecord(
                document_id=doc_id,
                sentence_ids=(f"{doc_id}-s{i}", f"{doc_id}-s{j}"),
                pred1_root=2,
                pred1_span=(1, 2),
                pred2_root=2,
                pred2_span=(1, 2),
                sliders=tuple(round(100.0 * v, 10) for v in target.tolist()),
                dur1=classes[i],
                dur2=classes[j],
                conf_rel=int(conf[0]),
                conf_dur1=int(conf[1]),
                conf_dur2=int(conf[2]),
                annotator_id=f"synth-annotator-{int(rng.integers(0, 3))}",
                elapsed_seconds=float(rng.integers(60, 600)),
            )
        )
    return timeline, observations, records
