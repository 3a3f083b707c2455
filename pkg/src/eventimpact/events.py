"""Event registry: loading and same-week de-duplication."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import FormatError
from .series import as_date

EVENT_TYPES = ("islamist_terrorism", "islamophobic")
FIELDS = ("id", "date", "name", "type", "country", "victims")


@dataclass(frozen=True)
class Event:
    id: str
    date: dt.date
    name: str = ""
    type: str = "islamist_terrorism"
    country: str = ""
    victims: int = 0

    def __post_init__(self):
        object.__setattr__(self, "date", as_date(self.date))
        if self.type not in EVENT_TYPES:
            raise FormatError(f"event {self.id}: type must be one of {EVENT_TYPES}, got {self.type!r}")
        if self.victims < 0:
            raise FormatError(f"event {self.id}: negative victim count")


def load_events(path) -> list[Event]:
    """Parse an ``id,date,name,type,country,victims`` CSV, sorted by date."""
    path = Path(path)
    events, seen = [], set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise FormatError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            eid = row["id"].strip()
            if eid in seen:
                raise FormatError(f"{path}:{lineno}: duplicate event id {eid!r}")
            seen.add(eid)
            try:
                victims = int(row["victims"]) if row["victims"].strip() else 0
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad victims value {row['victims']!r}") from exc
            try:
                events.append(Event(eid, as_date(row["date"]), row["name"].strip(), row["type"].strip(),
                                    row["country"].strip(), victims))
            except FormatError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return sorted(events, key=lambda e: (e.date, e.id))


def bundled_events_path() -> Path:
    return Path(str(resources.files("eventimpact") / "data" / "events.csv"))


def dedupe_same_week(events, window_days: int = 7) -> list[Event]:
    """Keep one event per cluster of events less than ``window_days`` apart.

    Clusters are chained: a, b, c with a-b and b-c each under a week form one
    cluster even if a-c is not. The event with most victims wins; ties go to
    the earlier date, then the smaller id.
    """
    ordered = sorted(events, key=lambda e: (e.date, e.id))
    clusters: list[list[Event]] = []
    for e in ordered:
        if clusters and (e.date - clusters[-1][-1].date).days < window_days:
            clusters[-1].append(e)
        else:
            clusters.append([e])
    return [min(c, key=lambda e: (-e.victims, e.date, e.id)) for c in clusters]
