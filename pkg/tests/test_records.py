import copy
import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lyapsteer import records as R
from lyapsteer.cocycle import Cocycle
from lyapsteer.steering import SteeringConfig, steer
from lyapsteer.symbolic import Dyadic, ShiftSystem


@given(st.fractions())
def test_num_roundtrip_fraction(x):
    assert R.parse_num(R.num(x)) == x


@given(st.integers(0, 200))
def test_num_roundtrip_dyadic(j):
    d = Dyadic(j)
    assert R.parse_num(R.num(d)) == d


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_num_roundtrip_float(x):
    assert R.parse_num(R.num(x)) == x


@pytest.fixture(scope="module")
def doc():
    S = ShiftSystem.full_shift("abc")
    co = Cocycle.diagonal_exact([[2, -1], [1, -2], [3, -3]])
    gens = [S.word(t) for t in "abc"]
    tr = steer(SteeringConfig((2, -2), Fraction(1, 24), 3), S, co, gens)
    return json.loads(R.dumps(R.trace_to_json(tr, S, co)))


def test_dumps_deterministic(doc):
    assert R.dumps(doc) == R.dumps(json.loads(R.dumps(doc)))


def test_load_and_verify(doc):
    tr, S, co = R.load_trace(doc)
    assert len(tr.steps) == 4
    rep = R.verify_trace(doc, samples=4)
    assert rep["verified"], rep["failures"]


def test_csv(doc):
    lines = R.convergence_csv(doc).strip().splitlines()
    assert len(lines) == 1 + len(doc["steps"])


@pytest.mark.parametrize("mutate", [
    lambda d: d["steps"][2].__setitem__("alpha", d["steps"][2]["alpha"] + 1),
    lambda d: d["steps"][1].__setitem__("spectrum", [str(float(R.parse_num(v)) * (1 + 1e-6))
                                                     for v in d["steps"][1]["spectrum"]]),
    lambda d: d["steps"][3].__setitem__("k", 1),
])
def test_corruption_detected(doc, mutate):
    bad = copy.deepcopy(doc)
    mutate(bad)
    try:
        rep = R.verify_trace(bad, samples=4)
    except R.TraceFormatError:
        return
    assert not rep["verified"] and rep["failures"]


def test_bad_format_rejected():
    with pytest.raises(R.TraceFormatError):
        R.load_trace({"format": "other"})
