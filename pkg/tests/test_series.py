import datetime as dt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eventimpact.errors import DataAvailabilityError, FormatError, RangeError, ValidationError
from eventimpact.series import (DailySeries, align, as_date, event_window, from_daily_counts, lag_window,
                                lag_window_with_source, read_series_csv, shift_constant, slice_series,
                                write_series_csv)

D = dt.date(2016, 1, 4)
day = lambda k: D + dt.timedelta(days=k)  # noqa: E731

values = st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=60)


def test_slice_single_day():
    s = DailySeries(dt.date(2016, 1, 1), np.arange(31.0))
    out = slice_series(s, dt.date(2016, 1, 5), dt.date(2016, 1, 5))
    assert len(out) == 1 and out.values[0] == 4.0 and out.start == dt.date(2016, 1, 5)


def test_slice_full_span_identity():
    s = DailySeries(D, [3, 1, 4])
    assert slice_series(s, s.start, s.end) == s


def test_slice_by_weekday():
    s = DailySeries(D, [3, 1, 4, 1, 5])
    assert list(slice_series(s, day(1), day(3)).values) == [1, 4, 1]


def test_slice_out_of_range_names_missing_days():
    s = DailySeries(D, [1, 2, 3])
    with pytest.raises(RangeError) as info:
        slice_series(s, day(-2), day(1))
    assert info.value.missing == [(day(-2), day(-1))]
    assert "2016-01-02" in str(info.value)


def test_slice_reversed_range_rejected():
    s = DailySeries(D, [1, 2, 3])
    with pytest.raises(ValidationError):
        slice_series(s, day(2), day(1))


@given(values, st.data())
def test_slice_composition(vals, data):
    s = DailySeries(D, vals)
    n = len(vals)
    a = data.draw(st.integers(0, n - 1))
    b = data.draw(st.integers(a, n - 1))
    c = data.draw(st.integers(a, b))
    e = data.draw(st.integers(c, b))
    outer = slice_series(s, day(a), day(b))
    assert slice_series(outer, day(c), day(e)) == slice_series(s, day(c), day(e))


def test_shift_examples():
    assert list(shift_constant(DailySeries(D, [0, 0, 0]), 1000).values) == [1000, 1000, 1000]
    assert list(shift_constant(DailySeries(D, [2, 5]), 1000).values) == [1002, 1005]
    s = DailySeries(D, [2, 5])
    assert shift_constant(s, 0) == s


def test_shift_records_offset():
    s = shift_constant(shift_constant(DailySeries(D, [1, 2]), 10), 5)
    assert s.offset == 15


@given(values, st.floats(-1e6, 1e6, allow_nan=False))
def test_shift_roundtrip_bitwise(vals, a):
    s = DailySeries(D, vals)
    back = shift_constant(shift_constant(s, a), -a)
    assert back.offset == 0
    assert np.array_equal(back.values.view(np.int64), s.values.view(np.int64))


def test_values_read_only():
    s = DailySeries(D, [1, 2])
    with pytest.raises(ValueError):
        s.values[0] = 5


def test_empty_series_rejected():
    with pytest.raises(ValidationError):
        DailySeries(D, [])


def test_event_window():
    assert event_window(day(100), 77, 7) == (day(23), day(106))


def test_lag_window_matches_index_arithmetic():
    # event on day 450 of 500 so that the 1-year-earlier window is in range
    s = DailySeries(D, np.arange(500.0))
    w = lag_window(s, day(450), 365, 77, 7, -365)
    assert list(w.values) == list(np.arange(450 - 365 - 77, 450 - 365 + 7, dtype=float))


def test_lag_window_day_400_needs_fallback():
    # 400 - 365 - 77 < 0: the primary window runs off the start
    s = DailySeries(D, np.arange(900.0))
    w, used = lag_window_with_source(s, day(400), 365, 77, 7, -365)
    assert used == -365
    assert w.values[0] == 400 + 365 - 77


def test_lag_window_default_shape():
    s = DailySeries(D, np.arange(800.0))
    w = lag_window(s, day(600), 365, 77, 7, -365)
    assert len(w) == 84 and w.start == day(600 - 365 - 77)


@given(st.integers(0, 40))
def test_lag_zero_is_event_window(k):
    s = DailySeries(D, np.arange(120.0) ** 1.5)
    ev = day(30 + k)
    first, last = event_window(ev, 30, 7)
    assert lag_window(s, ev, 0, 30, 7, 365) == slice_series(s, first, last)


def test_lag_window_fallback_and_failure():
    s = DailySeries(D, np.arange(200.0))
    w, used = lag_window_with_source(s, day(100), 161, 30, 7, -35)
    assert used == -35 and w.start == day(100 + 35 - 30)
    with pytest.raises(DataAvailabilityError) as info:
        lag_window(s, day(100), 161, 30, 7, -365)
    assert info.value.missing


def test_lag_window_primary_preferred():
    s = DailySeries(D, np.arange(1000.0))
    _, used = lag_window_with_source(s, day(500), 365, 77, 7, -365)
    assert used == 365


@given(st.lists(values, min_size=1, max_size=4), st.data())
def test_align_entries(cols, data):
    n = min(len(c) for c in cols)
    series = [DailySeries(D, c) for c in cols]
    a = data.draw(st.integers(0, n - 1))
    b = data.draw(st.integers(a, n - 1))
    M = align(series, day(a), day(b))
    assert M.shape == (b - a + 1, len(cols))
    for r in range(M.shape[0]):
        for j, c in enumerate(cols):
            assert M[r, j] == c[a + r]


def test_align_gap_names_series():
    good = DailySeries(D, [1, 2, 3], name="good")
    short = DailySeries(D, [1], name="short")
    with pytest.raises(RangeError, match="short"):
        align([good, short], D, day(2))


def test_zero_fill_and_csv_roundtrip(tmp_path):
    s = from_daily_counts({day(0): 2, day(3): 5}, day(0), day(4))
    assert list(s.values) == [2, 0, 0, 5, 0]
    p = tmp_path / "s.csv"
    write_series_csv(DailySeries(D, [1, 2.5, 0]), p)
    assert p.read_text() == "date,value\n2016-01-04,1\n2016-01-05,2.5\n2016-01-06,0\n"
    assert read_series_csv(p) == DailySeries(D, [1, 2.5, 0])


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("day,count\n2016-01-01,1\n")
    with pytest.raises(FormatError):
        read_series_csv(p)
    p.write_text("date,value\n2016-01-02,1\n2016-01-01,1\n")
    with pytest.raises(FormatError):
        read_series_csv(p)


def test_as_date_utc():
    ts = dt.datetime(2016, 1, 1, 23, 30, tzinfo=dt.timezone(dt.timedelta(hours=-5)))
    assert as_date(ts) == dt.date(2016, 1, 2)
    with pytest.raises(FormatError):
        as_date("2016-13-01")
