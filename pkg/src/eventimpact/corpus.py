"""Message ingestion, term matching, and per-term daily series.

Records come from JSONL files, one object per line::

    {"platform": "twitter_like", "id": "1", "ts": "2016-06-12T08:00:00Z",
     "user": "u1", "text": "...", "kind": "message", "parent_id": null}

Twitter-like platforms yield ``messages``, ``messages_dedup`` and ``users``
series; reddit-like platforms yield ``posts``, ``comments`` and ``users``.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import FormatError, ValidationError
from .series import DailySeries, as_date, from_daily_counts

log = logging.getLogger(__name__)

PLATFORMS = ("twitter_like", "reddit_like")
KINDS = ("message", "post", "comment")
PLATFORM_VARIANTS = {
    "twitter_like": ("messages", "messages_dedup", "users"),
    "reddit_like": ("posts", "comments", "users"),
}

# letters/digits/apostrophes, optionally led by a single '#'
_TOKEN = re.compile(r"#?(?:[^\W_]|')+")
_REPOST = re.compile(r"^\s*rt\s+@\w+:?", re.IGNORECASE)


@dataclass(frozen=True)
class MessageRecord:
    platform: str
    id: str
    timestamp: dt.datetime
    user: str
    text: str
    kind: str = "message"
    parent_id: str | None = None

    @property
    def day(self) -> dt.date:
        return as_date(self.timestamp)


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; hashtags keep their leading ``#``."""
    tokens = []
    for tok in _TOKEN.findall(text.lower()):
        if tok.lstrip("#").strip("'"):
            tokens.append(tok)
    return tokens


def term_tokens(term) -> tuple[str, ...]:
    return tuple(getattr(term, "tokens", None) or tokenize(getattr(term, "text", term)))


def matches(term, text: str) -> bool:
    """All tokens of ``term`` occur somewhere in ``text`` (order-free)."""
    needed = term_tokens(term)
    if not needed:
        return False
    have = set(tokenize(text))
    return all(t in have for t in needed)


def strip_repost(text: str) -> str:
    """Remove one leading ``RT @handle`` / ``RT @handle:`` prefix."""
    return _REPOST.sub("", text, count=1).strip()


def _parse_ts(value: str) -> dt.datetime:
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    ts = dt.datetime.fromisoformat(value)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=dt.timezone.utc)
    return ts.astimezone(dt.timezone.utc)


def parse_record(obj: dict) -> MessageRecord:
    try:
        platform = obj["platform"]
        kind = obj.get("kind", "message")
        rec = MessageRecord(
            platform=platform,
            id=str(obj["id"]),
            timestamp=_parse_ts(obj["ts"]),
            user=str(obj["user"]),
            text=str(obj["text"]),
            kind=kind,
            parent_id=None if obj.get("parent_id") in (None, "") else str(obj["parent_id"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad record: {exc}") from exc
    if platform not in PLATFORMS:
        raise FormatError(f"unknown platform {platform!r}")
    if kind not in KINDS:
        raise FormatError(f"unknown kind {kind!r}")
    if kind == "comment" and rec.parent_id is None:
        raise FormatError(f"comment {rec.id} has no parent_id")
    return rec


class JsonlReader:
    """Iterate records of a JSONL file, skipping (and counting) bad lines.

    Raises :class:`FormatError` at the end of iteration when more than
    ``max_bad_fraction`` of the non-blank lines were malformed.
    """

    def __init__(self, path, max_bad_fraction: float = 0.1):
        self.path = Path(path)
        self.max_bad_fraction = max_bad_fraction
        self.n_lines = 0
        self.n_bad = 0

    def __iter__(self) -> Iterator[MessageRecord]:
        with self.path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                self.n_lines += 1
                try:
                    yield parse_record(json.loads(line))
                except (json.JSONDecodeError, FormatError) as exc:
                    self.n_bad += 1
                    log.debug("%s:%d skipped: %s", self.path, lineno, exc)
        if self.n_lines and self.n_bad / self.n_lines > self.max_bad_fraction:
            raise FormatError(f"{self.path}: {self.n_bad} of {self.n_lines} lines malformed")


def ingest_jsonl(path) -> list[MessageRecord]:
    records = list(JsonlReader(path))
    seen = set()
    for r in records:
        key = (r.platform, r.id)
        if key in seen:
            raise FormatError(f"{path}: duplicate id {r.id!r} on {r.platform}")
        seen.add(key)
    return records


def write_jsonl(records: Iterable[MessageRecord], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            obj = {
                "platform": r.platform, "id": r.id,
                "ts": r.timestamp.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
                "user": r.user, "text": r.text, "kind": r.kind,
            }
            if r.parent_id is not None:
                obj["parent_id"] = r.parent_id
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def build_term_series(
    messages: Sequence[MessageRecord],
    term,
    variant: str,
    range_,
    platform: str | None = None,
    comments: str = "parent_or_own",
) -> DailySeries:
    """Daily counts of one variant for one term over ``range_ = (first, last)``.

    ``comments`` controls how reddit-like comments are attributed to a term:
    ``"parent_or_own"`` (parent post matched, or the comment itself matches)
    or ``"parent"`` (parent post matched only).
    """
    first, last = (as_date(d) for d in range_)
    if first > last:
        raise ValidationError("empty date range")
    if comments not in ("parent_or_own", "parent"):
        raise ValidationError(f"unknown comment mode {comments!r}")
    if platform is None:
        if variant in ("posts", "comments"):
            platform = "reddit_like"
        elif variant != "users":
            platform = "twitter_like"
        else:
            seen = {r.platform for r in messages}
            if len(seen) > 1:
                raise ValidationError("records from several platforms: pass platform= for the users variant")
            platform = seen.pop() if seen else "twitter_like"
    if variant not in PLATFORM_VARIANTS[platform]:
        raise ValidationError(f"variant {variant!r} not valid for {platform}")
    tokens = term_tokens(term)
    name = f"{getattr(term, 'text', term)}:{variant}"

    def hit(r):
        return bool(tokens) and all(t in set(tokenize(r.text)) for t in tokens)

    recs = [r for r in messages if r.platform == platform]
    buckets: dict[dt.date, set] = defaultdict(set)

    if platform == "twitter_like":
        for r in recs:
            d = r.day
            if not (first <= d <= last) or not hit(r):
                continue
            if variant == "messages":
                buckets[d].add(r.id)
            elif variant == "messages_dedup":
                buckets[d].add(strip_repost(r.text))
            else:
                buckets[d].add(r.user)
    else:
        matched_posts = {r.id for r in recs if r.kind == "post" and hit(r)}
        for r in recs:
            d = r.day
            if not first <= d <= last:
                continue
            if r.kind == "post":
                counted = r.id in matched_posts
            elif r.kind == "comment":
                counted = r.parent_id in matched_posts or (comments == "parent_or_own" and hit(r))
            else:
                counted = False
            if not counted:
                continue
            if variant == "posts" and r.kind == "post":
                buckets[d].add(r.id)
            elif variant == "comments" and r.kind == "comment":
                buckets[d].add(r.id)
            elif variant == "users":
                buckets[d].add(r.user)
    counts = {d: len(v) for d, v in buckets.items()}
    return from_daily_counts(counts, first, last, name=name)
