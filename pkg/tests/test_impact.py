import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from eventimpact.control import ControlDesign, ControlSeries
from eventimpact.errors import InsufficientDataError, NumericError, ValidationError
from eventimpact.impact import (DECISIONS, ImpactEstimate, aggregate, decide, estimate_impact, log_compress,
                                prefilter, rank_terms, read_report_csv, relative_effect, report_csv, report_json)
from eventimpact.series import DailySeries

D = dt.date(2016, 6, 1)
finite = st.floats(-1e4, 1e4, allow_nan=False)


def test_relative_effect_examples():
    assert relative_effect([5, 6, 7], [5, 6, 7]) == 0.0
    assert relative_effect([110, 120, 130], [100, 100, 100]) == 20.0
    assert relative_effect([50, 50], [100, 100]) == -50.0


def test_relative_effect_errors():
    with pytest.raises(NumericError):
        relative_effect([1, 2], [1, -1])
    with pytest.raises(ValidationError):
        relative_effect([1], [1, 2])
    with pytest.raises(ValidationError):
        relative_effect([], [])


@given(st.lists(st.floats(1, 1e4), min_size=1, max_size=14), st.data())
def test_relative_effect_antisymmetric(c, data):
    d = data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(c), max_size=len(c)))
    c, d = np.array(c), np.array(d)
    assume(abs(d.sum()) <= c.sum())
    up, down = relative_effect(c + d, c), relative_effect(c - d, c)
    assert up == pytest.approx(-down, abs=1e-9 * (1 + abs(up)))


def test_decide_examples():
    assert decide((3.2, 9.1), 100) == "increase"
    assert decide((-4, 5), 100) == "none"
    assert decide((-9, -1), 100) == "decrease"
    assert decide((0.1, 900), 100, width_cap=2.0) == "inconclusive"
    with pytest.raises(ValidationError):
        decide((0, 1), 1, width_cap=0)


@given(finite, finite, st.floats(0, 1e4), st.floats(-1e4, 1e4), st.floats(0.1, 10))
def test_decide_monotone_under_widening(a, b, w, cum, cap):
    low, high = min(a, b), max(a, b)
    before = decide((low, high), cum, cap)
    after = decide((low - w, high + w), cum, cap)
    assert after in DECISIONS
    if before == "increase":
        assert after in ("increase", "none", "inconclusive")
    if before == "decrease":
        assert after in ("decrease", "none", "inconclusive")
    if before in ("none", "inconclusive"):
        assert after in ("none", "inconclusive")


def _design(n_post, c=1000.0):
    pre = DailySeries(D - dt.timedelta(days=30), np.full(30, 10.0 + c), offset=c)
    return ControlDesign(D, pre, np.zeros((30, 0)), np.zeros((n_post, 0)), (), c, event_id="ev")


def test_degenerate_control():
    treated = DailySeries(D - dt.timedelta(days=30), np.full(37, 10.0))
    mean = np.full(7, 1010.0)
    ctl = ControlSeries(mean, np.tile(mean, (100, 1)))
    est = estimate_impact(treated, _design(7), ctl, term="t")
    assert est.abs_effect == 0 and est.ci90 == (0, 0) and est.decision == "none"


def test_estimate_scales_and_nesting(rng):
    treated = DailySeries(D, np.full(7, 30.0))
    draws = 1020 + rng.normal(0, 2, (1000, 7))
    ctl = ControlSeries(draws.mean(axis=0), draws)
    est = estimate_impact(treated, _design(7), ctl, term="t", variant="users")
    assert est.abs_effect == pytest.approx(70.0, abs=1.0)
    assert est.rel_effect_pct == pytest.approx(100 * 70 / 7140, abs=0.02)
    assert est.ci95[0] <= est.ci90[0] <= est.ci90[1] <= est.ci95[1]
    assert est.decision == "increase" and est.n_draws == 1000


def test_estimate_dimension_mismatch():
    treated = DailySeries(D, np.full(7, 30.0))
    ctl = ControlSeries(np.zeros(5), np.zeros((100, 5)))
    with pytest.raises(ValidationError):
        estimate_impact(treated, _design(7), ctl)


def test_prefilter():
    win = (D, D + dt.timedelta(days=6))
    zeros = DailySeries(D, np.zeros(7))
    msgs = DailySeries(D, [0, 3, 30, 2, 0, 0, 1])
    assert not prefilter([zeros], win)
    assert prefilter([msgs], win)
    assert not prefilter([DailySeries(D, [29.999] * 7)], win)
    users = DailySeries(D, [12, 0, 0, 0, 0, 0, 0])
    msgs45 = DailySeries(D, [45, 0, 0, 0, 0, 0, 0])
    assert prefilter([users, msgs45], win)


def _est(event, term, rel, variant="messages"):
    return ImpactEstimate(event, term, variant, rel, rel, (rel - 1, rel + 1), (rel - 2, rel + 2), "none")


@given(st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("xyz"), st.integers(-5, 5)), max_size=20))
def test_rank_terms(rows):
    ests = [_est(e, t, float(r)) for e, t, r in rows]
    ranked = rank_terms(ests)
    assert sorted(map(id, ranked)) == sorted(map(id, ests))
    keys = [(-e.rel_effect_pct, e.term) for e in ranked]
    assert keys == sorted(keys)
    assert rank_terms(list(reversed(ests))) == ranked


def test_aggregate_examples():
    a = aggregate([_est("e1", "a", 5.0), _est("e2", "a", 5.0)], seed=1)
    assert a.mean_rel_effect == 5.0 and a.ci95 == (5.0, 5.0) and a.n == 2
    b = aggregate([_est("e1", "a", 0.0), _est("e1", "b", 10.0)], seed=1)
    assert b.mean_rel_effect == 5.0
    assert set(b.ci95) <= {0.0, 5.0, 10.0}
    with pytest.raises(InsufficientDataError):
        aggregate([_est("e1", "a", 1.0)])
    with pytest.raises(InsufficientDataError):
        aggregate([_est("e1", "a", 1.0), _est("e1", "a", 3.0, "users")])


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=10), st.randoms())
def test_aggregate_permutation_invariant(vals, r):
    ests = [_est(f"e{i}", "t", v) for i, v in enumerate(vals)]
    shuffled = ests[:]
    r.shuffle(shuffled)
    a, b = aggregate(ests, n_boot=500, seed=3), aggregate(shuffled, n_boot=500, seed=3)
    assert a.mean_rel_effect == pytest.approx(b.mean_rel_effect, abs=1e-9)
    assert a.ci95 == b.ci95


def test_aggregate_selector():
    ests = [_est("e1", "a", 1.0), _est("e2", "a", 3.0), _est("e1", "b", 100.0)]
    agg = aggregate(ests, selector=lambda e: e.term == "a", n_boot=100, label="a")
    assert agg.mean_rel_effect == 2.0 and agg.label == "a"


def test_log_compress():
    assert log_compress(100) == pytest.approx(4.6052, abs=1e-4)
    assert log_compress(-100) == pytest.approx(-4.6052, abs=1e-4)
    assert log_compress(0.5) == 0.0


@given(st.floats(1, 1e12))
def test_log_compress_odd(x):
    assert log_compress(-x) == -log_compress(x)


def test_report_roundtrip(tmp_path):
    ests = [_est("e1", "ban islam", 2.5), _est("e2", "x,y", -1 / 3)]
    text = report_csv(ests)
    assert text.splitlines()[0] == ("event_id,term,variant,abs_effect,rel_effect_pct,"
                                    "ci90_low,ci90_high,ci95_low,ci95_high,decision")
    p = tmp_path / "r.csv"
    p.write_text(text)
    back = read_report_csv(p)
    assert [e.row() for e in back] == [e.row() for e in ests]
    assert '"rel_effect_pct": 2.5' in report_json(ests)
