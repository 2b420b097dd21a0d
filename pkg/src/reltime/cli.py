"""Command-line interface.

Exit status is 0 on success, 1 for schema or validation errors and 2 for
numerical failures (non-convergence, singular covariance).  Data goes to
standard output or ``--out``; messages go to standard error.
"""

import argparse
import json
import math
import os
import sys
import warnings
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from typing import List

import numpy as np

from . import __version__
from .analysis import AttributionConfig, AttributionProblem, cca, coordinate_agreement, kl_attribution
from .corpus import (
    SynthConfig,
    attach_predicates,
    generate_pairs,
    iter_jsonl,
    parse_annotations,
    read_conllu,
    record_from_dict,
    serialize_annotations,
    synth_document,
)
from .duration import DurationClass
from .errors import (
    DegenerateInput,
    DegenerateSliders,
    MalformedAssignment,
    NoConvergence,
    NoPredicates,
    NotConnected,
    SchemaError,
    SingularCovariance,
)
from .induction import DocumentTimeline, InductionConfig, PairObservation, compare_timelines, induce
from .metrics import eval_durations, eval_relations
from .qa import ASSIGNMENT_SIZE, Assignment, group_assignments, qa_line, ridit_weights, validate_assignment
from .render import render_timeline_svg
from .timeline import normalize_array, normalize_sliders, rotate

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class NumericFailure(Exception):
    pass


def _finite(v):
    return v if v is None or math.isfinite(v) else None


def _dumps(obj) -> str:
    return json.dumps(obj, allow_nan=False)


def _read_lines(path: str) -> List[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.readlines()


def _write(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


# --- validate / aggregate / rotate ----------------------------------------


def _read_assignments(path: str) -> List[Assignment]:
    assignments, loose = [], []
    for lineno, obj in iter_jsonl(_read_lines(path)):
        if isinstance(obj, dict) and "annotations" in obj:
            for key in ("annotator_id", "elapsed_seconds"):
                if key not in obj:
                    raise SchemaError("missing field", line=lineno, field=key)
            if not isinstance(obj["annotations"], list):
                raise SchemaError("must be a list of annotation records", line=lineno, field="annotations")
            records = [record_from_dict(a, line=lineno) for a in obj["annotations"]]
            assignment = Assignment(obj["annotator_id"], float(obj["elapsed_seconds"]), records)
            if len(records) != ASSIGNMENT_SIZE:
                raise MalformedAssignment(f"line {lineno}: assignment has {len(records)} annotations")
            assignments.append(assignment)
        else:
            loose.append(record_from_dict(obj, line=lineno))
    for a in group_assignments(loose):
        if len(a.annotations) == ASSIGNMENT_SIZE:
            assignments.append(a)
        else:
            _log(f"skipping {len(a.annotations)} leftover records of annotator {a.annotator_id!r}")
    return assignments


def cmd_validate(args) -> int:
    lines = []
    for a in _read_assignments(args.input):
        lines.append(qa_line(a, validate_assignment(a)) + "\n")
    _write(args, "".join(lines))
    return EXIT_OK


def cmd_aggregate(args) -> int:
    records = parse_annotations(_read_lines(args.input))
    weights = ridit_weights(records)
    out = []
    for r, (w_rel, w_dur1, w_dur2) in zip(records, weights):
        out.append(
            _dumps(
                {
                    "document_id": r.document_id,
                    "sentence_ids": list(r.sentence_ids),
                    "pred1_root": r.pred1_root,
                    "pred2_root": r.pred2_root,
                    "annotator_id": r.annotator_id,
                    "timeline": list(normalize_sliders(r.sliders)),
                    "dur1": r.dur1.label,
                    "dur2": r.dur2.label,
                    "weights": {"rel": w_rel, "dur1": w_dur1, "dur2": w_dur2},
                }
            )
            + "\n"
        )
    _write(args, "".join(out))
    return EXIT_OK


def _slider_rows(path: str) -> List[dict]:
    rows = []
    for lineno, obj in iter_jsonl(_read_lines(path)):
        if not isinstance(obj, dict):
            raise SchemaError("expected a JSON object", line=lineno)
        key = "sliders" if "sliders" in obj else "timeline" if "timeline" in obj else None
        if key is None:
            raise SchemaError("missing field", line=lineno, field="sliders")
        values = obj[key]
        if not isinstance(values, list) or len(values) != 4:
            raise SchemaError("must be a list of four numbers", line=lineno, field=key)
        try:
            t = normalize_sliders(values)
        except DegenerateSliders as exc:
            raise SchemaError(str(exc), line=lineno, field=key) from None
        except (TypeError, ValueError) as exc:
            raise SchemaError(str(exc), line=lineno, field=key) from None
        rows.append({"obj": obj, "timeline": t, "line": lineno})
    return rows


def cmd_rotate(args) -> int:
    out = []
    for row in _slider_rows(args.input):
        obj = row["obj"]
        entry = OrderedDict((k, obj[k]) for k in ("document_id", "pred1_root", "pred2_root") if k in obj)
        entry.update(rotate(row["timeline"])._asdict())
        out.append(_dumps(entry) + "\n")
    _write(args, "".join(out))
    return EXIT_OK


# --- induce ---------------------------------------------------------------


def observations_from_records(records, weighted: bool = False):
    """Predicate ids (first-appearance order) and pair observations for one document."""
    index = OrderedDict()
    for r in records:
        for key in (r.pred1_key, r.pred2_key):
            index.setdefault(key, len(index))
    weights = ridit_weights(records) if weighted else [(1.0, 1.0, 1.0)] * len(records)
    observations = []
    for r, (w_rel, w_dur1, w_dur2) in zip(records, weights):
        i, j = index[r.pred1_key], index[r.pred2_key]
        if i == j:
            continue
        observations.append(
            PairObservation(
                i, j, tuple(normalize_sliders(r.sliders)), w_rel, (r.dur1, r.dur2), duration_weights=(w_dur1, w_dur2)
            )
        )
    return list(index), observations


def _induce_document(task):
    doc_id, records, cfg, weighted = task
    ids, observations = observations_from_records(records, weighted)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NoConvergence)
        result = induce(observations, len(ids), cfg, ids=ids, texts=ids)
    converged = not any(issubclass(w.category, NoConvergence) for w in caught)
    payload = result.timeline.to_dict(document_id=doc_id, loss=result.loss, iterations=result.iterations)
    return doc_id, payload, converged


def cmd_induce(args) -> int:
    records = parse_annotations(_read_lines(args.input))
    by_doc = OrderedDict()
    for r in records:
        by_doc.setdefault(r.document_id, []).append(r)
    cfg = InductionConfig(
        max_iters=args.max_iters, tolerance=args.tolerance, duration_weight=args.lam, seed=args.seed
    )
    tasks = [(doc, recs, cfg, args.weighted) for doc, recs in by_doc.items()]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_induce_document, tasks))
    else:
        results = [_induce_document(t) for t in tasks]

    _write(args, "".join(_dumps(payload) + "\n" for _, payload, _ in results))
    if args.svg:
        for doc_id, payload, _ in results:
            path = args.svg
            if len(results) > 1:
                stem, ext = os.path.splitext(args.svg)
                path = f"{stem}-{doc_id}{ext or '.svg'}"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(render_timeline_svg(DocumentTimeline.from_dict(payload)))
    failed = [doc for doc, _, ok in results if not ok]
    if failed:
        _log(f"induction did not converge for: {', '.join(failed)}")
        return EXIT_NUMERIC
    return EXIT_OK


# --- eval -----------------------------------------------------------------


def _payload_kind(obj) -> str:
    if not isinstance(obj, dict):
        return "unknown"
    if "predicates" in obj:
        return "timeline"
    has_sliders = "sliders" in obj or "timeline" in obj
    has_durations = "dur1" in obj or "duration" in obj
    if has_sliders and has_durations:
        return "annotation"
    if has_sliders:
        return "relation"
    if has_durations:
        return "duration"
    return "unknown"


def _durations_of(obj, lineno):
    labels = [obj[k] for k in ("dur1", "dur2", "duration") if k in obj]
    try:
        return [DurationClass.from_label(v) for v in labels]
    except (ValueError, AttributeError):
        raise SchemaError(f"unknown duration class in {labels!r}", line=lineno) from None


def _eval_timelines(gold_objs, pred_objs) -> dict:
    pred_by_doc = {o["document_id"]: DocumentTimeline.from_dict(o) for _, o in pred_objs}
    per_doc = []
    for _, obj in gold_objs:
        doc = obj["document_id"]
        if doc not in pred_by_doc:
            raise SchemaError(f"no predicted timeline for document {doc!r}")
        gold = DocumentTimeline.from_dict(obj)
        pred = pred_by_doc[doc]
        pos = {pid: k for k, pid in enumerate(pred.ids)}
        missing = [pid for pid in gold.ids if pid not in pos]
        if missing:
            raise SchemaError(f"document {doc!r}: predicted timeline lacks {missing[0]!r}")
        order = [pos[pid] for pid in gold.ids]
        aligned = DocumentTimeline(
            [pred.begins[k] for k in order], [pred.durations[k] for k in order], ids=list(gold.ids)
        )
        try:
            rhos = compare_timelines(gold, aligned)
        except (DegenerateInput, ValueError):
            rhos = {"begin_rho": math.nan, "duration_rho": math.nan}
        per_doc.append({"document_id": doc, **{k: _finite(v) for k, v in rhos.items()}})

    def mean(key):
        vals = [d[key] for d in per_doc if d[key] is not None]
        return float(np.mean(vals)) if vals else None

    return {"timelines": per_doc, "mean_begin_rho": mean("begin_rho"), "mean_duration_rho": mean("duration_rho")}


def cmd_eval(args) -> int:
    gold = list(iter_jsonl(_read_lines(args.gold)))
    pred = list(iter_jsonl(_read_lines(args.pred)))
    if not gold:
        raise SchemaError("gold file is empty")
    kinds = {_payload_kind(o) for _, o in gold} | {_payload_kind(o) for _, o in pred}
    if len(kinds) != 1 or "unknown" in kinds:
        raise SchemaError(f"cannot evaluate mixed or unrecognized payloads: {sorted(kinds)}")
    kind = kinds.pop()
    if kind == "timeline":
        report = _eval_timelines(gold, pred)
    else:
        if len(gold) != len(pred):
            raise SchemaError(f"gold has {len(gold)} items but pred has {len(pred)}")
        report = {}
        if kind in ("annotation", "duration"):
            g = [d for n, o in gold for d in _durations_of(o, n)]
            p = [d for n, o in pred for d in _durations_of(o, n)]
            report["duration"] = eval_durations(g, p).to_dict()
        if kind in ("annotation", "relation"):
            g = [r["timeline"] for r in _slider_rows(args.gold)]
            p = [r["timeline"] for r in _slider_rows(args.pred)]
            report["relation"] = eval_relations(g, p).to_dict()
        if len(report) == 1:
            report = next(iter(report.values()))
    _write(args, _dumps(report) + "\n")
    return EXIT_OK


# --- analyze --------------------------------------------------------------


def cmd_analyze(args) -> int:
    if args.kind == "cca":
        _require(args, "input")
        records = parse_annotations(_read_lines(args.input))
        X = np.array([[int(r.dur1), int(r.dur2)] for r in records], dtype=float)
        Y = normalize_array([r.sliders for r in records])
        report = {"correlations": cca(X, Y), "n": len(records)}
    elif args.kind == "coords":
        _require(args, "gold", "pred")
        g = [list(rotate(r["timeline"])) for r in _slider_rows(args.gold)]
        p = [list(rotate(r["timeline"])) for r in _slider_rows(args.pred)]
        try:
            report = coordinate_agreement(g, p)
        except DegenerateInput as exc:
            raise SchemaError(str(exc)) from None
    else:
        _require(args, "input")
        problems, names = [], None
        for lineno, obj in iter_jsonl(_read_lines(args.input)):
            try:
                problems.append(AttributionProblem(obj["weights"], obj["features"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(str(exc), line=lineno) from None
            names = obj.get("feature_names", names)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NoConvergence)
            result = kl_attribution(problems, AttributionConfig(max_iters=args.max_iters), feature_names=names)
        report = result.to_dict()
        if any(issubclass(w.category, NoConvergence) for w in caught):
            _write(args, _dumps(report) + "\n")
            raise NumericFailure("KL attribution did not converge")
    _write(args, _dumps(report) + "\n")
    return EXIT_OK


def _require(args, *names):
    missing = [f"--{n}" for n in names if not getattr(args, n, None)]
    if missing:
        raise SchemaError(f"analyze --kind {args.kind} needs {' '.join(missing)}")


# --- synth / pairs --------------------------------------------------------


def cmd_synth(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    annotations, truths = [], []
    for k in range(args.docs):
        cfg = SynthConfig(n_predicates=args.n, noise_sd=args.noise, duration_coeff=args.coeff, seed=args.seed + k)
        timeline, _, records = synth_document(cfg)
        annotations.extend(records)
        truths.append(timeline.to_dict(document_id=records[0].document_id, loss=0.0, iterations=0))
    ann_path = os.path.join(args.out, "annotations.jsonl")
    truth_path = os.path.join(args.out, "truth.jsonl")
    with open(ann_path, "w", encoding="utf-8") as fh:
        fh.write(serialize_annotations(annotations))
    with open(truth_path, "w", encoding="utf-8") as fh:
        fh.write("".join(_dumps(t) + "\n" for t in truths))
    _log(f"wrote {ann_path} and {truth_path}")
    return EXIT_OK


def cmd_pairs(args) -> int:
    sentences = read_conllu(_read_lines(args.conllu))
    with open(args.predicates, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    if not isinstance(sidecar, dict):
        raise SchemaError("predicate sidecar must map sentence ids to lists of token ids")
    attach_predicates(sentences, sidecar)
    out = []
    for ante, cons in zip(sentences, sentences[1:]):
        if ante.doc_id != cons.doc_id or not ante.predicates:
            continue
        pair_sents = (ante, cons)
        for (sa, ta), (sb, tb) in generate_pairs(ante, cons):
            a, b = pair_sents[sa], pair_sents[sb]
            out.append(
                _dumps(
                    {
                        "document_id": ante.doc_id,
                        "sentence_ids": [a.sent_id, b.sent_id],
                        "pred1_root": ta,
                        "pred1_form": a.form(ta),
                        "pred2_root": tb,
                        "pred2_form": b.form(tb),
                    }
                )
                + "\n"
            )
    _write(args, "".join(out))
    return EXIT_OK


# --- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reltime", description="Relative timelines, durations and document timelines.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="run rejection checks on annotation assignments")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("aggregate", help="normalize sliders and attach ridit confidence weights")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("rotate", help="rotate sliders into priority/containment/equality/shift")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rotate)

    p = sub.add_parser("induce", help="induce document timelines from pairwise annotations")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--weighted", action="store_true", help="weight losses by ridit-scored confidence")
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="CCA, attention attribution, or rotated-space agreement")
    p.add_argument("--kind", choices=("cca", "kl", "coords"), required=True)
    p.add_argument("--input")
    p.add_argument("--gold")
    p.add_argument("--pred")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="write a synthetic corpus with known timelines")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--coeff", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--docs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pairs", help="generate predicate pairs from CoNLL-U and a predicate sidecar")
    p.add_argument("--conllu", required=True)
    p.add_argument("--predicates", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pairs)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, MalformedAssignment, NotConnected, NoPredicates, DegenerateSliders) as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    except (NumericFailure, SingularCovariance) as exc:
        _log(f"numeric failure: {exc}")
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
