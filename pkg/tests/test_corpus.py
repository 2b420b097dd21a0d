import json
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_record
from reltime.corpus import (
    RECORD_FIELDS,
    DependencySentence,
    SynthConfig,
    attach_predicates,
    generate_pairs,
    parse_annotations,
    pivot_predicate,
    read_conllu,
    record_from_dict,
    serialize_annotations,
    synth_document,
)
from reltime.errors import NoPredicates, SchemaError
from reltime.timeline import check_quadruple

FLY = """# newdoc id = weblog-1
# sent_id = weblog-1-s1
1\tHas\thave\tAUX\t_\t_\t3\taux\t_\t_
2\tanyone\tanyone\tPRON\t_\t_\t3\tnsubj\t_\t_
3\tconsidered\tconsider\tVERB\t_\t_\t0\troot\t_\t_
4\tthat\tthat\tSCONJ\t_\t_\t9\tmark\t_\t_
5\tperhaps\tperhaps\tADV\t_\t_\t9\tadvmod\t_\t_
6\tGeorge\tGeorge\tPROPN\t_\t_\t7\tcompound\t_\t_
7\tBush\tBush\tPROPN\t_\t_\t9\tnsubj\t_\t_
8\tjust\tjust\tADV\t_\t_\t9\tadvmod\t_\t_
9\twanted\twant\tVERB\t_\t_\t3\tccomp\t_\t_
10\tto\tto\tPART\t_\t_\t11\tmark\t_\t_
11\tfly\tfly\tVERB\t_\t_\t9\txcomp\t_\t_
12\tjets\tjet\tNOUN\t_\t_\t11\tobj\t_\t_
13\t?\t?\tPUNCT\t_\t_\t3\tpunct\t_\t_

# sent_id = weblog-1-s2
1\tHe\the\tPRON\t_\t_\t2\tnsubj\t_\t_
2\tlikes\tlike\tVERB\t_\t_\t0\troot\t_\t_
2-3\tplanes'\t_\t_\t_\t_\t_\t_\t_\t_
3\tplanes\tplane\tNOUN\t_\t_\t2\tobj\t_\t_
"""


def sentence(heads, rels, predicates):
    return DependencySentence([f"w{k}" for k in range(1, len(heads) + 1)], heads, rels, predicates)


@st.composite
def random_sentences(draw, min_preds=0):
    n = draw(st.integers(2, 14))
    order = draw(st.permutations(range(1, n + 1)))
    heads = [0] * n
    for pos in range(1, n):
        heads[order[pos] - 1] = order[draw(st.integers(0, pos - 1))]
    rels = [draw(st.sampled_from(["ccomp", "xcomp", "csubj:pass", "obj", "advcl", "nsubj"])) for _ in range(n)]
    rels[order[0] - 1] = "root"
    preds = draw(st.lists(st.integers(1, n), unique=True, min_size=min_preds, max_size=n))
    return DependencySentence([f"w{k}" for k in range(n)], heads, rels, preds)


class TestAnnotationSchema:
    def test_round_trip(self):
        rec = make_record(sliders=(0, 12.5, 3, 100))
        text = serialize_annotations([rec, rec])
        assert parse_annotations(text.splitlines()) == [rec, rec]
        assert serialize_annotations(parse_annotations(text.splitlines())) == text
        assert list(json.loads(text.splitlines()[0])) == list(RECORD_FIELDS)

    def test_keys(self):
        rec = make_record()
        assert (rec.pred1_key, rec.pred2_key) == ("doc-1-s0:2", "doc-1-s1:3")

    @pytest.mark.parametrize(
        "override, field",
        [
            ({"conf_rel": 7}, "conf_rel"),
            ({"conf_dur2": -1}, "conf_dur2"),
            ({"sliders": [10, 5, 0, 100]}, "sliders"),
            ({"sliders": [0, 5, 0]}, "sliders"),
            ({"dur1": "fortnights"}, "dur1"),
            ({"pred1_root": 9}, "pred1_root"),
            ({"elapsed_seconds": -3}, "elapsed_seconds"),
            ({"colour": "red"}, "colour"),
        ],
    )
    def test_violations(self, override, field):
        obj = make_record().to_dict()
        obj.update(override)
        lines = [make_record().to_json(), json.dumps(obj)]
        with pytest.raises(SchemaError) as info:
            parse_annotations(lines)
        assert info.value.line == 2 and info.value.field == field
        assert str(info.value).startswith(f"line 2, field '{field}'")

    def test_missing_field(self):
        obj = make_record().to_dict()
        del obj["annotator_id"]
        with pytest.raises(SchemaError, match="annotator_id"):
            record_from_dict(obj, line=1)

    def test_bad_json(self):
        with pytest.raises(SchemaError, match="line 3"):
            parse_annotations([make_record().to_json(), "", "{oops"])


class TestConllu:
    def test_read(self):
        sents = read_conllu(FLY.splitlines(keepends=True))
        assert [s.sent_id for s in sents] == ["weblog-1-s1", "weblog-1-s2"]
        assert {s.doc_id for s in sents} == {"weblog-1"}
        assert sents[1].tokens == ["He", "likes", "planes"]
        assert sents[0].root == 3 and sents[0].form(11) == "fly"

    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            sentence([0, 3, 2], ["root", "obj", "obj"], [])

    def test_two_roots_rejected(self):
        with pytest.raises(ValueError):
            sentence([0, 0], ["root", "root"], [])


class TestPivot:
    def test_fly(self):
        sents = read_conllu(FLY.splitlines())
        attach_predicates(sents, {"weblog-1-s1": [3, 9, 11], "weblog-1-s2": [2]})
        s = sents[0]
        assert s.form(pivot_predicate(s)) == "fly"

    def test_root_without_complements(self):
        s = sentence([0, 1, 1], ["root", "advcl", "obj"], [1, 2])
        assert pivot_predicate(s) == 1

    def test_chain(self):
        s = sentence([0, 1, 2, 3], ["root", "ccomp", "ccomp", "obj"], [1, 2, 3])
        assert pivot_predicate(s) == 3

    def test_non_predicate_link_stops(self):
        # the ccomp dependent is not a predicate, so the walk stays at the root
        s = sentence([0, 1, 2], ["root", "ccomp", "xcomp"], [1, 3])
        assert pivot_predicate(s) == 1

    def test_leftmost_dependent(self):
        s = sentence([0, 1, 1], ["root", "xcomp", "ccomp"], [1, 2, 3])
        assert pivot_predicate(s) == 2

    def test_no_predicates(self):
        with pytest.raises(NoPredicates):
            pivot_predicate(sentence([0], ["root"], []))

    @settings(max_examples=200)
    @given(random_sentences(min_preds=1))
    def test_terminates_at_predicate(self, s):
        assert pivot_predicate(s) in s.predicates


class TestPairs:
    @pytest.mark.parametrize("n, m, expected", [(3, 2, 5), (1, 0, 0), (2, 3, 4)])
    def test_counts(self, n, m, expected):
        ante = sentence([0] + [1] * 3, ["root"] + ["obj"] * 3, list(range(1, n + 1)))
        cons = sentence([0] + [1] * 3, ["root"] + ["obj"] * 3, list(range(1, m + 1)))
        assert len(generate_pairs(ante, cons)) == expected

    def test_no_antecedent_predicates(self):
        with pytest.raises(NoPredicates):
            generate_pairs(sentence([0], ["root"], []), sentence([0], ["root"], [1]))

    @settings(max_examples=1000, deadline=None)
    @given(random_sentences(min_preds=1), random_sentences())
    def test_count_property(self, ante, cons):
        pairs = generate_pairs(ante, cons)
        n, m = len(ante.predicates), len(cons.predicates)
        assert len(pairs) == comb(n, 2) + m
        assert len(set(pairs)) == len(pairs)
        pivot = (0, pivot_predicate(ante))
        assert all(a == pivot for a, b in pairs if b[0] == 1)


class TestSynth:
    def test_deterministic(self):
        a = synth_document(SynthConfig(seed=5))
        b = synth_document(SynthConfig(seed=5))
        assert a[0] == b[0] and a[2] == b[2]
        assert [o.target for o in a[1]] == [o.target for o in b[1]]

    def test_connected_pairs(self):
        tl, obs, recs = synth_document(SynthConfig(n_predicates=5, seed=2))
        assert [(o.i, o.j) for o in obs] == [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]
        assert len(recs) == len(obs)
        assert min(tl.begins) == 0.0

    def test_noiseless_targets_exact(self):
        from reltime.induction import project_pair

        tl, obs, _ = synth_document(SynthConfig(n_predicates=6, seed=9))
        for o in obs:
            assert tuple(project_pair(tl, o.i, o.j)) == o.target

    def test_noisy_sliders_valid(self):
        for seed in range(1000):
            _, obs, recs = synth_document(SynthConfig(n_predicates=3, noise_sd=0.05, seed=seed))
            for o, r in zip(obs, recs):
                check_quadruple(o.target)
                assert min(o.target) == 0.0 and max(o.target) == 1.0
                check_quadruple(r.sliders)

    def test_records_reparse(self):
        _, _, recs = synth_document(SynthConfig(n_predicates=4, noise_sd=0.02, seed=1))
        assert parse_annotations(serialize_annotations(recs).splitlines()) == recs

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SynthConfig(n_predicates=1)
        with pytest.raises(ValueError):
            SynthConfig(noise_sd=-0.1)
