import datetime as dt

import pytest
from hypothesis import given, strategies as st

from eventimpact.errors import FormatError
from eventimpact.events import Event, bundled_events_path, dedupe_same_week, load_events

MON = dt.date(2017, 6, 19)


def ev(i, offset, victims):
    return Event(f"e{i}", MON + dt.timedelta(days=offset), victims=victims)


def test_dedupe_examples():
    assert dedupe_same_week([ev(1, 0, 3), ev(2, 4, 20)]) == [ev(2, 4, 20)]
    assert dedupe_same_week([ev(1, 0, 3)]) == [ev(1, 0, 3)]
    assert dedupe_same_week([ev(1, 0, 5), ev(2, 3, 5), ev(3, 6, 2)]) == [ev(1, 0, 5)]
    assert dedupe_same_week([ev(1, 0, 1), ev(2, 7, 1)]) == [ev(1, 0, 1), ev(2, 7, 1)]


@given(st.lists(st.tuples(st.integers(0, 60), st.integers(0, 50)), max_size=12, unique_by=lambda t: t[0]),
       st.randoms())
def test_dedupe_properties(rows, r):
    events = [ev(i, d, v) for i, (d, v) in enumerate(rows)]
    out = dedupe_same_week(events)
    assert set(out) <= set(events)
    days = sorted(e.date for e in out)
    assert all((b - a).days >= 7 for a, b in zip(days, days[1:]))
    shuffled = events[:]
    r.shuffle(shuffled)
    assert dedupe_same_week(shuffled) == out


def test_bundled_events():
    events = load_events(bundled_events_path())
    assert [e.id for e in events][:2] == ["orlando-2016", "istanbul-airport-2016"]
    assert {e.type for e in events} == {"islamist_terrorism", "islamophobic"}
    assert events == sorted(events, key=lambda e: e.date)


@pytest.mark.parametrize("row", [
    "a,2016-01-01,x,islamist_terrorism,US,1\na,2016-01-02,y,islamophobic,US,1",
    "a,2016-01-01,x,riot,US,1",
    "a,2016-02-30,x,islamophobic,US,1",
    "a,2016-01-01,x,islamophobic,US,many",
])
def test_load_errors(tmp_path, row):
    p = tmp_path / "ev.csv"
    p.write_text("id,date,name,type,country,victims\n" + row + "\n")
    with pytest.raises(FormatError):
        load_events(p)
