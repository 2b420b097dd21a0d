import numpy as np
import pytest
from hypothesis import strategies as st

from reltime.timeline import normalize_sliders

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


@st.composite
def quadruples(draw):
    b1, e1 = sorted((draw(finite), draw(finite)))
    b2, e2 = sorted((draw(finite), draw(finite)))
    if max(b1, e1, b2, e2) - min(b1, e1, b2, e2) < 1e-6:
        e2 = e2 + 1.0
    return [b1, e1, b2, e2]


@st.composite
def relative_timelines(draw):
    return normalize_sliders(draw(quadruples()))


def random_timelines(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` valid relative timelines as rows."""
    raw = rng.uniform(0, 100, size=(n, 4))
    raw[:, 0:2].sort(axis=1)
    raw[:, 2:4].sort(axis=1)
    lo = raw.min(axis=1, keepdims=True)
    return (raw - lo) / (raw.max(axis=1, keepdims=True) - lo)


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


def make_record(sliders=(0, 60, 20, 100), dur1="hours", dur2="days", conf=(4, 4, 4), annotator="ann-1", **kw):
    from reltime.corpus import record_from_dict

    obj = {
        "document_id": "doc-1",
        "sentence_ids": ["doc-1-s0", "doc-1-s1"],
        "pred1_root": 2,
        "pred1_span": [1, 2],
        "pred2_root": 3,
        "pred2_span": [3],
        "sliders": list(sliders),
        "dur1": dur1,
        "dur2": dur2,
        "conf_rel": conf[0],
        "conf_dur1": conf[1],
        "conf_dur2": conf[2],
        "annotator_id": annotator,
        "elapsed_seconds": 60.0,
    }
    obj.update(kw)
    return record_from_dict(obj)


# --- acceptance criteria reporting -------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, summary): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    number, summary = marker.args
    measured = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _criteria[number] = (report.passed, summary, measured)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        passed, summary, measured = _criteria[number]
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {summary}"
        if measured:
            line += f" [{measured}]"
        terminalreporter.write_line(line)
