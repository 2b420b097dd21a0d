import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import finite, quadruples, random_timelines, relative_timelines
from reltime.errors import DegenerateSliders
from reltime.timeline import (
    ROTATION,
    AllenRelation,
    CoarseRelation,
    RelationCoordinates,
    RelativeTimeline,
    head_params_to_timeline,
    interval_relation,
    normalize_array,
    normalize_sliders,
    rotate,
    rotate_array,
    unrotate,
    unrotate_array,
)


class TestNormalize:
    @pytest.mark.parametrize(
        "raw, expected",
        [
            ([24, 66, 24, 90], [0, 42 / 66, 0, 1]),
            ([0, 1, 0, 1], [0, 1, 0, 1]),
            ([10, 20, 10, 20], [0, 1, 0, 1]),
        ],
    )
    def test_examples(self, raw, expected):
        np.testing.assert_allclose(normalize_sliders(raw), expected, atol=1e-15)

    def test_rounded_example(self):
        assert round(normalize_sliders([24, 66, 24, 90]).e1, 4) == 0.6364

    def test_degenerate(self):
        with pytest.raises(DegenerateSliders):
            normalize_sliders([5, 5, 5, 5])

    @pytest.mark.parametrize("raw", [[1, 0, 0, 1], [0, 1, 1, 0.5], [0, 1, 0], [0, float("nan"), 0, 1]])
    def test_invalid(self, raw):
        with pytest.raises(ValueError):
            normalize_sliders(raw)

    def test_returns_named_tuple(self):
        t = normalize_sliders([0, 2, 1, 4])
        assert isinstance(t, RelativeTimeline)
        assert t.e2 == 1.0 and t.b2 == 0.25

    @given(quadruples())
    def test_idempotent(self, q):
        t = normalize_sliders(q)
        np.testing.assert_allclose(normalize_sliders(t), t, atol=1e-12)

    @given(quadruples(), st.floats(1e-3, 1e3), finite)
    def test_affine_invariance(self, q, a, b):
        np.testing.assert_allclose(normalize_sliders([a * v + b for v in q]), normalize_sliders(q), atol=1e-9)

    @given(quadruples())
    def test_preserves_pairwise_order(self, q):
        t = normalize_sliders(q)
        for i in range(4):
            for j in range(4):
                if q[i] < q[j]:
                    assert t[i] <= t[j]

    def test_array_matches_scalar(self, rng):
        raw = random_timelines(rng, 50) * 37 + 4
        out = normalize_array(raw)
        for row, expected in zip(out, raw):
            np.testing.assert_allclose(row, normalize_sliders(expected), atol=1e-15)


class TestRotation:
    @pytest.mark.parametrize(
        "t, r",
        [
            ([0, 0.5, 0.5, 1], (0.5, 0, 0.5, 0)),
            ([0, 1, 0, 1], (0, 0, 1, 0)),
            ([0, 1, 0.25, 0.75], (0, 0.25, 0.75, 0)),
        ],
    )
    def test_examples(self, t, r):
        assert rotate(t) == pytest.approx(r, abs=0)
        np.testing.assert_array_equal(unrotate(r), t)

    def test_matrix_is_orthogonal_up_to_scale(self):
        np.testing.assert_array_equal(ROTATION @ ROTATION.T, 4 * np.eye(4))

    def test_definition(self, rng):
        # R M = 2S - 1
        t = random_timelines(rng, 100)
        np.testing.assert_allclose(rotate_array(t) @ ROTATION, 2 * t - 1, atol=1e-14)

    def test_field_names(self):
        r = rotate([0, 1, 0, 1])
        assert isinstance(r, RelationCoordinates)
        assert r.equality == 1 and r.priority == 0 and r.containment == 0 and r.shift == 0

    def test_round_trip_bulk(self, rng):
        t = random_timelines(rng, 10_000)
        np.testing.assert_allclose(unrotate_array(rotate_array(t)), t, atol=1e-12)

    @given(relative_timelines())
    def test_swap_negates_priority_and_containment(self, t):
        r, s = rotate(t), rotate(t.swap())
        assert s.priority == pytest.approx(-r.priority, abs=1e-12)
        assert s.containment == pytest.approx(-r.containment, abs=1e-12)
        assert s.equality == pytest.approx(r.equality, abs=1e-12)
        assert s.shift == pytest.approx(r.shift, abs=1e-12)

    @given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
    def test_rotate_inverts_unrotate(self, r):
        np.testing.assert_allclose(rotate(unrotate(r)), r, atol=1e-12)


class TestRelationHead:
    def test_example(self):
        np.testing.assert_allclose(head_params_to_timeline((-2, 1, 0, 1)), [0, 0.2447, 0.6224, 1], atol=5e-5)

    def test_oracle(self):
        sig = lambda x: 1 / (1 + np.exp(-x))
        raw = np.array([sig(-2), sig(-1), sig(0), sig(1)])
        expected = (raw - raw.min()) / (raw - raw.min()).max()
        np.testing.assert_allclose(head_params_to_timeline((-2, 1, 0, 1)), expected, atol=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateSliders):
            head_params_to_timeline((0, 0, 0, 0))

    def test_abs_delta(self):
        assert head_params_to_timeline((0, -3, 1, 2)) == head_params_to_timeline((0, 3, 1, 2))

    @settings(max_examples=300)
    @given(st.lists(st.floats(-30, 30), min_size=4, max_size=4))
    def test_ends_after_begins(self, p):
        try:
            t = head_params_to_timeline(p)
        except DegenerateSliders:
            return
        assert t.e1 >= t.b1 and t.e2 >= t.b2


class TestIntervalRelation:
    @pytest.mark.parametrize(
        "t, allen, coarse",
        [
            ([0, 0.5, 0.5, 1], AllenRelation.MEETS, CoarseRelation.BEFORE),
            ([0, 1, 0, 1], AllenRelation.EQUAL, CoarseRelation.SIMULTANEOUS),
            ([0, 1, 0.25, 0.75], AllenRelation.CONTAINS, CoarseRelation.INCLUDES),
            ([0, 0.4, 0.6, 1], AllenRelation.BEFORE, CoarseRelation.BEFORE),
            ([0.6, 1, 0, 0.4], AllenRelation.AFTER, CoarseRelation.AFTER),
            ([0.5, 1, 0, 0.5], AllenRelation.MET_BY, CoarseRelation.AFTER),
            ([0, 0.6, 0.4, 1], AllenRelation.OVERLAPS, CoarseRelation.VAGUE),
            ([0.4, 1, 0, 0.6], AllenRelation.OVERLAPPED_BY, CoarseRelation.VAGUE),
            ([0, 0.5, 0, 1], AllenRelation.STARTS, CoarseRelation.IS_INCLUDED),
            ([0, 1, 0, 0.5], AllenRelation.STARTED_BY, CoarseRelation.INCLUDES),
            ([0.5, 1, 0, 1], AllenRelation.FINISHES, CoarseRelation.IS_INCLUDED),
            ([0, 1, 0.5, 1], AllenRelation.FINISHED_BY, CoarseRelation.INCLUDES),
            ([0.25, 0.75, 0, 1], AllenRelation.DURING, CoarseRelation.IS_INCLUDED),
        ],
    )
    def test_all_thirteen(self, t, allen, coarse):
        rel = interval_relation(t, epsilon=1e-9)
        assert rel.allen is allen and rel.coarse is coarse

    def test_epsilon_absorbs_noise(self):
        assert interval_relation([0, 0.5, 0.5 + 1e-8, 1]).allen is AllenRelation.MEETS
        assert interval_relation([0, 0.5, 0.5 + 1e-8, 1], epsilon=1e-9).allen is AllenRelation.BEFORE

    @given(relative_timelines())
    def test_converse_under_swap(self, t):
        converse = {
            "before": "after",
            "meets": "met_by",
            "overlaps": "overlapped_by",
            "starts": "started_by",
            "during": "contains",
            "finishes": "finished_by",
            "equal": "equal",
        }
        converse.update({v: k for k, v in converse.items()})
        a = interval_relation(t).allen.value
        b = interval_relation(t.swap()).allen.value
        assert converse[a] == b
