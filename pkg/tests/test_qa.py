import json
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_record
from reltime.errors import MalformedAssignment
from reltime.qa import (
    Assignment,
    FlagKind,
    group_assignments,
    iaa_report,
    qa_line,
    ridit_scores,
    ridit_weights,
    validate_assignment,
)

CLEAN = [
    make_record((0, 30, 10, 90), "minutes", "hours"),
    make_record((0, 50, 50, 100), "days", "days"),
    make_record((5, 80, 0, 20), "years", "weeks"),
    make_record((0, 100, 0, 100), "seconds", "seconds"),
    make_record((10, 20, 0, 100), "hours", "decades"),
]
# long slider span paired with a short duration class, as in the think/do example
INCONSISTENT = make_record((0, 53, 20, 30), "minutes", "years")


def kinds(flags):
    return {f.kind for f in flags}


class TestRidit:
    def test_examples(self):
        assert ridit_scores([4, 4, 4]) == [0.5, 0.5, 0.5]
        np.testing.assert_allclose(ridit_scores([0, 1, 2, 3, 4]), [0.1, 0.3, 0.5, 0.7, 0.9], atol=1e-15)
        scores = ridit_scores([4, 4, 2])
        assert scores[2] == pytest.approx(1 / 6, abs=1e-15)
        assert scores[0] == scores[1] == pytest.approx(2 / 3, abs=1e-15)

    def test_empty(self):
        assert ridit_scores([]) == []

    @given(st.lists(st.integers(0, 4), min_size=1, max_size=60))
    def test_properties(self, ratings):
        scores = ridit_scores(ratings)
        assert all(0 < s < 1 for s in scores)
        assert np.mean(scores) == pytest.approx(0.5, abs=1e-12)
        by_rating = sorted(zip(ratings, scores))
        assert all(a[1] <= b[1] for a, b in zip(by_rating, by_rating[1:]))

    def test_weights_per_annotator(self):
        recs = [
            make_record(conf=(4, 0, 4), annotator="a"),
            make_record(conf=(4, 4, 4), annotator="a"),
            make_record(conf=(2, 1, 1), annotator="a"),
            make_record(conf=(0, 3, 3), annotator="b"),
        ]
        w = ridit_weights(recs)
        assert [x[0] for x in w[:3]] == pytest.approx([2 / 3, 2 / 3, 1 / 6])
        assert w[3] == (0.5, 0.5, 0.5)
        # durations pooled over the annotator's six duration ratings 0,4,4,4,1,1
        assert w[0][1] == pytest.approx(0.5 / 6)
        assert w[0][2] == pytest.approx((3 + 1.5) / 6)
        assert w[2][1] == w[2][2] == pytest.approx((1 + 1) / 6)


class TestValidate:
    def test_clean(self):
        assert validate_assignment(Assignment("ann-1", 300, CLEAN)) == []

    def test_fast(self):
        flags = validate_assignment(Assignment("ann-1", 45, CLEAN))
        assert kinds(flags) == {FlagKind.TIME}

    def test_boundary_minute(self):
        assert validate_assignment(Assignment("ann-1", 60, CLEAN)) == []

    def test_constant_sliders(self):
        recs = [make_record((50, 50, 50, 50), "hours", d) for d in ("days", "weeks", "hours", "years", "days")]
        assert kinds(validate_assignment(Assignment("ann-1", 300, recs))) == {FlagKind.CONSTANT_SLIDERS}

    def test_constant_durations(self):
        recs = [make_record(r.sliders, "days", "days") for r in CLEAN]
        assert kinds(validate_assignment(Assignment("ann-1", 300, recs))) == {FlagKind.CONSTANT_DURATIONS}

    @pytest.mark.parametrize("bad, flagged", [(3, False), (4, True), (5, True)])
    def test_inconsistent_rate(self, bad, flagged):
        recs = [INCONSISTENT] * bad + CLEAN[: 5 - bad]
        expected = {FlagKind.INCONSISTENT} if flagged else set()
        assert kinds(validate_assignment(Assignment("ann-1", 300, recs))) == expected

    def test_combined(self):
        recs = [INCONSISTENT] * 4 + CLEAN[:1]
        assert kinds(validate_assignment(Assignment("ann-1", 10, recs))) == {FlagKind.TIME, FlagKind.INCONSISTENT}

    @pytest.mark.parametrize("n", [4, 6])
    def test_wrong_size(self, n):
        with pytest.raises(MalformedAssignment):
            validate_assignment(Assignment("ann-1", 300, (CLEAN * 2)[:n]))

    def test_order_independent(self):
        recs = [INCONSISTENT] * 4 + CLEAN[:1]
        results = {tuple(validate_assignment(Assignment("a", 30, list(p)))) for p in permutations(recs)}
        assert len(results) == 1

    def test_qa_line(self):
        a = Assignment("ann-1", 45, CLEAN)
        line = json.loads(qa_line(a, validate_assignment(a)))
        assert line["annotator_id"] == "ann-1"
        assert [f["kind"] for f in line["flags"]] == ["TIME"]


class TestGrouping:
    def test_groups_by_annotator(self):
        recs = [make_record(annotator="a" if k % 2 else "b", elapsed_seconds=10.0 + k) for k in range(12)]
        groups = group_assignments(recs)
        assert [(g.annotator_id, len(g.annotations)) for g in groups] == [("b", 5), ("b", 1), ("a", 5), ("a", 1)]
        assert groups[0].elapsed_seconds == sum(10.0 + k for k in (0, 2, 4, 6, 8))


class TestIaa:
    def test_identical(self):
        shared = [(r, r) for r in CLEAN]
        assert iaa_report(shared) == {"slider_rho": 1.0, "mean_duration_rank_diff": 0.0}

    def test_reversed(self):
        a = make_record((0, 0, 100, 100), "hours", "days")
        b = make_record((100, 100, 0, 0), "years", "days")
        report = iaa_report([(a, b), (a, b)])
        assert report["slider_rho"] == -1.0
        assert report["mean_duration_rank_diff"] == 2.0

    def test_degenerate(self):
        with pytest.raises(ValueError):
            iaa_report([(CLEAN[0], CLEAN[0])])
