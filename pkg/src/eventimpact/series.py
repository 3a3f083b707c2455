"""Date-indexed daily count series.

A :class:`DailySeries` is a start date plus one float per consecutive UTC day.
Instances are immutable: the value array is flagged read-only on construction,
so a series can be shared freely between worker tasks.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataAvailabilityError, FormatError, RangeError, ValidationError

ONE_DAY = dt.timedelta(days=1)


def as_date(value) -> dt.date:
    """Coerce an ISO string, ``date`` or ``datetime`` to a calendar day.

    ``datetime`` values are converted to UTC before truncation; naive ones are
    taken to already be UTC.
    """
    if isinstance(value, dt.datetime):
        if value.tzinfo is not None:
            value = value.astimezone(dt.timezone.utc)
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, str):
        try:
            return dt.date.fromisoformat(value.strip())
        except ValueError as exc:
            raise FormatError(f"invalid ISO date {value!r}") from exc
    raise ValidationError(f"cannot interpret {value!r} as a date")


def date_range(start, end) -> list[dt.date]:
    start, end = as_date(start), as_date(end)
    return [start + dt.timedelta(days=i) for i in range((end - start).days + 1)]


@dataclass(frozen=True, eq=False)
class DailySeries:
    """Contiguous daily values starting at ``start``.

    Parameters
    ----------
    start : date
        First day covered.
    values : array_like
        One value per day; stored as a read-only float64 copy.
    offset : float
        Constant added by :func:`shift_constant` since ingestion.
    name : str
        Free-form label carried through transforms.
    """

    start: dt.date
    values: np.ndarray
    offset: float = 0.0
    name: str = field(default="", compare=False)
    # unshifted values, kept so that shifting back to offset 0 is bit-exact
    raw: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "start", as_date(self.start))
        vals = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if vals.size < 1:
            raise ValidationError("a series needs at least one value")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.raw is None and self.offset == 0:
            object.__setattr__(self, "raw", vals)
        elif self.raw is not None and self.raw is not vals:
            raw = np.array(self.raw, dtype=np.float64, copy=True).reshape(-1)
            raw.flags.writeable = False
            object.__setattr__(self, "raw", raw)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, DailySeries):
            return NotImplemented
        return (
            self.start == other.start
            and self.offset == other.offset
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"DailySeries(start={self.start.isoformat()}, end={self.end.isoformat()}, "
            f"n={len(self)}, offset={self.offset:g}, name={self.name!r})"
        )

    @property
    def end(self) -> dt.date:
        return self.start + dt.timedelta(days=len(self) - 1)

    @property
    def dates(self) -> list[dt.date]:
        return date_range(self.start, self.end)

    def index_of(self, day) -> int:
        return (as_date(day) - self.start).days

    def covers(self, first, last) -> bool:
        return as_date(first) >= self.start and as_date(last) <= self.end

    def __getitem__(self, day) -> float:
        i = self.index_of(day)
        if not 0 <= i < len(self):
            raise RangeError(f"{as_date(day)} outside {self.start}..{self.end}", missing=[as_date(day)])
        return float(self.values[i])

    def slice(self, first, last) -> DailySeries:
        return slice_series(self, first, last)

    def shift(self, c: float) -> DailySeries:
        return shift_constant(self, c)


def _missing_span(s: DailySeries, first: dt.date, last: dt.date) -> list[tuple[dt.date, dt.date]]:
    spans = []
    if first < s.start:
        spans.append((first, min(last, s.start - ONE_DAY)))
    if last > s.end:
        spans.append((max(first, s.end + ONE_DAY), last))
    return spans


def slice_series(s: DailySeries, first, last) -> DailySeries:
    """Return the sub-series covering ``[first, last]`` inclusive."""
    first, last = as_date(first), as_date(last)
    if first > last:
        raise ValidationError(f"empty range: {first} > {last}")
    if not s.covers(first, last):
        spans = _missing_span(s, first, last)
        desc = ", ".join(f"{a}..{b}" for a, b in spans)
        raise RangeError(f"series {s.name or '<unnamed>'} is missing {desc}", missing=spans)
    i = s.index_of(first)
    j = s.index_of(last)
    raw = None if s.raw is None else s.raw[i : j + 1].copy()
    return DailySeries(first, s.values[i : j + 1], offset=s.offset, name=s.name, raw=raw)


def shift_constant(s: DailySeries, c: float) -> DailySeries:
    """Add ``c`` to every value, recording it in ``offset``."""
    if c == 0:
        return s
    offset = s.offset + c
    if s.raw is None:
        return DailySeries(s.start, s.values + c, offset=offset, name=s.name)
    if offset == 0:
        return DailySeries(s.start, s.raw, name=s.name)
    return DailySeries(s.start, s.raw + offset, offset=offset, name=s.name, raw=s.raw)


def event_window(event, pre_days: int, post_days: int) -> tuple[dt.date, dt.date]:
    """``[event - pre_days, event + post_days - 1]``."""
    event = as_date(event)
    return event - dt.timedelta(days=pre_days), event + dt.timedelta(days=post_days - 1)


def lag_window_with_source(
    s: DailySeries,
    event,
    lag_days: int,
    pre_days: int,
    post_days: int,
    fallback_lag_days: int | None = None,
) -> tuple[DailySeries, int]:
    """Like :func:`lag_window` but also return the displacement actually used."""
    if pre_days + post_days < 1:
        raise ValidationError("pre_days + post_days must be >= 1")
    first, last = event_window(event, pre_days, post_days)
    tried = []
    for lag in (lag_days, fallback_lag_days):
        if lag is None:
            continue
        a = first - dt.timedelta(days=lag)
        b = last - dt.timedelta(days=lag)
        if s.covers(a, b):
            return slice_series(s, a, b), lag
        tried.append((lag, a, b, _missing_span(s, a, b)))
    desc = "; ".join(
        f"lag {lag}: {a}..{b} (missing {', '.join(f'{x}..{y}' for x, y in miss)})"
        for lag, a, b, miss in tried
    )
    raise DataAvailabilityError(
        f"no usable window for series {s.name or '<unnamed>'}: {desc}",
        missing=[m for *_, miss in tried for m in miss],
    )


def lag_window(s, event, lag_days, pre_days, post_days, fallback_lag_days=None) -> DailySeries:
    """Event-aligned window displaced ``lag_days`` into the past.

    The window has ``pre_days + post_days`` days and is aligned to
    ``[event - pre_days, event + post_days - 1]`` before displacement.
    Negative lags displace into the future. If the primary window is not fully
    covered by ``s``, ``fallback_lag_days`` is tried instead.
    """
    return lag_window_with_source(s, event, lag_days, pre_days, post_days, fallback_lag_days)[0]


def align(series: Sequence[DailySeries], first, last) -> np.ndarray:
    """Stack ``series`` over ``[first, last]`` into a (days, len(series)) matrix."""
    first, last = as_date(first), as_date(last)
    n = (last - first).days + 1
    out = np.empty((n, len(series)))
    for j, s in enumerate(series):
        try:
            out[:, j] = slice_series(s, first, last).values
        except RangeError as exc:
            raise RangeError(f"column {j} ({s.name or '<unnamed>'}): {exc}", missing=exc.missing) from exc
    return out


def from_daily_counts(counts: Mapping, first, last, name: str = "") -> DailySeries:
    """Materialize a ``{date: count}`` mapping over a range, zero-filling gaps."""
    first, last = as_date(first), as_date(last)
    days = date_range(first, last)
    return DailySeries(first, [counts.get(d, 0) for d in days], name=name)


def read_series_csv(path, name: str | None = None) -> DailySeries:
    """Read a ``date,value`` CSV. Interior gaps are zero-filled."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["date", "value"]:
            raise FormatError(f"{path}: expected header 'date,value'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((as_date(row["date"]), float(row["value"])))
            except (TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    days = [d for d, _ in rows]
    if any(b <= a for a, b in zip(days, days[1:])):
        raise FormatError(f"{path}: dates must be strictly ascending")
    return from_daily_counts(dict(rows), days[0], days[-1], name=name if name is not None else path.stem)


def write_series_csv(s: DailySeries, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for d, v in zip(s.dates, s.values):
            w.writerow([d.isoformat(), format_number(v)])


def format_number(v: float) -> str:
    """Shortest round-tripping text for a float; integral values without '.0'."""
    v = float(v)
    if np.isfinite(v) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def concat(parts: Iterable[DailySeries]) -> DailySeries:
    parts = list(parts)
    for a, b in zip(parts, parts[1:]):
        if b.start != a.end + ONE_DAY:
            raise ValidationError("series are not contiguous")
    return DailySeries(parts[0].start, np.concatenate([p.values for p in parts]), offset=parts[0].offset)
