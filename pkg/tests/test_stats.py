import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvrpisa.stats import STAT_NAMES, StatSummary, summary_names
from oracles import two_pass_summary

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def close(a, b, tol=1e-12):
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=0, max_size=40))
def test_matches_two_pass_reference(values):
    got = StatSummary.of(values)
    ref = two_pass_summary(values)
    for name in ("min", "max", "mean", "median", "sd", "var"):
        assert close(getattr(got, name), ref[name], 1e-9 if name in ("sd", "var") else 1e-12), name
    # higher moments lose precision on nearly-constant samples; compare where well conditioned
    if ref["var"] > 1e-6 * max(1.0, abs(ref["mean"])) ** 2:
        assert close(got.skew, ref["skew"], 1e-9)
        assert close(got.kurtosis, ref["kurtosis"], 1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=1, max_size=40))
def test_invariants(values):
    s = StatSummary.of(values)
    assert s.min <= s.median <= s.max
    assert close(s.sd, math.sqrt(s.var))
    assert all(math.isfinite(getattr(s, n)) for n in STAT_NAMES)


def test_constant_sample():
    s = StatSummary.of([3.0] * 7)
    assert (s.sd, s.var, s.skew, s.kurtosis) == (0.0, 0.0, 0.0, 0.0)
    assert s.mean == s.median == 3.0


def test_empty_and_single():
    assert StatSummary.of([]) == StatSummary()
    s = StatSummary.of([2.5])
    assert s.min == s.max == s.mean == s.median == 2.5 and s.var == 0


def test_known_values():
    s = StatSummary.of([1, 2, 3, 4, 10])
    assert s.mean == 4 and s.median == 3
    assert s.var == pytest.approx(12.5)
    dev = np.array([-3, -2, -1, 0, 6.0])
    assert s.skew == pytest.approx(np.mean(dev**3) / 12.5**1.5)


def test_feature_names():
    assert summary_names("NN3") == [f"NN3_{s}" for s in STAT_NAMES]
    assert set(StatSummary.of([1, 2]).as_features("X")) == set(summary_names("X"))
