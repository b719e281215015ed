import json
import math

import numpy as np
from hypothesis import given, strategies as st

from spinc_lab import report as rp

json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-10 ** 6, 10 ** 6) | st.floats(allow_nan=True) | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=5), inner, max_size=4),
    max_leaves=20)


def _norm(v):
    """Map NaN/inf to the string encoding used by the serializer."""
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
    if isinstance(v, list):
        return [_norm(x) for x in v]
    if isinstance(v, dict):
        return {k: _norm(x) for k, x in v.items()}
    return v


@given(json_values)
def test_dumps_round_trip(obj):
    text = rp.dumps(obj)
    assert json.loads(text) == _norm(obj)
    assert rp.dumps(json.loads(text)) == rp.dumps(_norm(obj))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip_exact(x):
    assert float(rp.format_float(x)) == x


def test_sorted_keys_and_numpy():
    text = rp.dumps({"b": np.float64(0.1), "a": np.arange(3), "c": np.bool_(True), "z": 1 + 2j})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    body = json.loads(text)
    assert body == {"a": [0, 1, 2], "b": 0.1, "c": True, "z": [1.0, 2.0]}


def test_check_modes():
    assert rp.check("x", "a", 1e-6, 1e-5).passed
    assert not rp.check("x", "a", 1e-4, 1e-5).passed
    assert rp.check("x", "a", 3.0, 2.0, mode="min").passed
    assert not rp.check("x", "a", float("nan"), 1.0).passed


def test_report_summary_and_timing(tmp_path):
    r = rp.Report("verify gauss", {"seed": 1},
                  [rp.check("a", "anchor", 1e-7, 1e-5), rp.check("b", "anchor", 9.0, 0.0, asserted=False)],
                  {"k": 1}, {"wall_seconds": 1.5})
    s = r.summary()
    assert s == {"asserted": 1, "passed": 1, "total": 2, "worst_residual": 1e-7, "all_passed": True}
    text = r.to_json()
    body = json.loads(text)
    assert body["schema"] == rp.SCHEMA and "timing" in body
    assert "timing" not in json.loads(rp.strip_timing(text))
    p = tmp_path / "sub" / "r.json"
    rp.write_atomic(str(p), text)
    assert rp.load(str(p)) == body
    assert [x.name for x in p.parent.iterdir()] == ["r.json"]
