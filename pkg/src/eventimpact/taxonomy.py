"""Four-dimension labelling of terms: vote resolution, framing and distributions."""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import FormatError, ValidationError


class Stance(str, Enum):
    FAVORABLE = "favorable"
    UNFAVORABLE = "unfavorable"
    COMMENTARY = "commentary"
    NEUTRAL = "neutral"


class Target(str, Enum):
    MUSLIMS_ISLAM = "muslims_islam"
    RELIGIOUS_OTHER = "religious_other"
    ARABS_MENA = "arabs_mena"
    ETHNIC_OTHER = "ethnic_other"
    IMMIGRANTS = "immigrants"
    NON_IMMIGRANTS = "non_immigrants"


class Severity(str, Enum):
    PROMOTES_VIOLENCE = "promotes_violence"
    INTIMIDATES = "intimidates"
    OFFENDS_DISCRIMINATES = "offends_discriminates"
    NOT_APPLICABLE = "not_applicable"


class Frame(str, Enum):
    CAUSES = "causes"
    SOLUTIONS = "solutions"
    BOTH = "both"
    NONE = "none"


DIMENSIONS: dict[str, type[Enum]] = {"stance": Stance, "target": Target, "severity": Severity, "frame": Frame}
# labels meaning "no category applies"; left out of distribution tables
NOT_APPLICABLE = {"severity": Severity.NOT_APPLICABLE.value, "frame": Frame.NONE.value}

NEEDS_MORE = "needs_more"
UNRESOLVED = "unresolved"
ANNOTATION_FIELDS = ("subject_id", "dimension", "label", "annotator")


def check_label(dimension: str, label: str) -> str:
    enum = DIMENSIONS.get(dimension)
    if enum is None:
        raise ValidationError(f"unknown dimension {dimension!r}")
    try:
        return enum(label).value
    except ValueError as exc:
        raise ValidationError(f"{label!r} is not a {dimension} label") from exc


@dataclass(frozen=True)
class Annotation:
    subject: str
    dimension: str
    label: str
    annotator: str = ""

    def __post_init__(self):
        object.__setattr__(self, "label", check_label(self.dimension, self.label))


def resolve_label(annotations: Sequence[Annotation], min_votes: int = 3, max_votes: int = 5) -> str:
    """Strict-majority vote over one subject's labels in one dimension.

    Returns the winning label, ``"needs_more"`` while fewer than
    ``min_votes`` are in or no majority exists below ``max_votes``, and
    ``"unresolved"`` once ``max_votes`` are in without a majority.
    """
    if not 1 <= min_votes <= max_votes:
        raise ValidationError("need 1 <= min_votes <= max_votes")
    keys = {(a.subject, a.dimension) for a in annotations}
    if len(keys) > 1:
        raise ValidationError(f"annotations mix subjects/dimensions: {sorted(keys)}")
    n = len(annotations)
    if n < min_votes:
        return NEEDS_MORE
    label, top = max(Counter(a.label for a in annotations).items(), key=lambda kv: (kv[1], kv[0]))
    if 2 * top > n:
        return label
    return NEEDS_MORE if n < max_votes else UNRESOLVED


_FRAME_ORDER = (Frame.CAUSES.value, Frame.SOLUTIONS.value, Frame.BOTH.value, Frame.NONE.value)


def term_frame(message_frames: Sequence[str], max_gap: int = 1) -> str:
    """Term-level frame from the frames of messages containing the term.

    When causes and solutions are both present, each at least as frequent as
    none, and their counts differ by at most ``max_gap``, the term is framed
    as both. Votes for both support that outcome rather than compete with
    it, so they do not enter the comparison.
    Otherwise the most frequent frame wins, ties broken in the order
    causes, solutions, both, none.
    """
    if not message_frames:
        raise ValidationError("term_frame needs at least one message frame")
    counts = Counter(check_label("frame", f) for f in message_frames)
    c, s = counts[Frame.CAUSES.value], counts[Frame.SOLUTIONS.value]
    if min(c, s) >= max(counts[Frame.NONE.value], 1) and abs(c - s) <= max_gap:
        return Frame.BOTH.value
    return max(_FRAME_ORDER, key=lambda f: (counts[f], -_FRAME_ORDER.index(f)))


def distribution(terms: Iterable, dimensions: Sequence[str] = tuple(DIMENSIONS)) -> dict[str, dict[str, float]]:
    """Percent of labelled terms carrying each label, per dimension.

    The denominator is the number of terms with any label in that dimension.
    "Does not apply" labels (severity not_applicable, frame none) count in
    the denominator but are not listed, so a column may sum below 100.
    """
    terms = list(terms)
    table: dict[str, dict[str, float]] = {}
    for dim in dimensions:
        labels = [getattr(t, dim, "") for t in terms]
        labels = [check_label(dim, lab) for lab in labels if lab]
        n = len(labels)
        counts = Counter(labels)
        skip = NOT_APPLICABLE.get(dim)
        table[dim] = {
            e.value: (100.0 * counts[e.value] / n if n else 0.0) for e in DIMENSIONS[dim] if e.value != skip
        }
    return table


def distribution_csv(table: Mapping[str, Mapping[str, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("dimension", "label", "percent"))
    for dim, row in table.items():
        for label, pct in row.items():
            w.writerow((dim, label, f"{pct:.1f}"))
    return buf.getvalue()


def read_annotations(path) -> list[Annotation]:
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(ANNOTATION_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise FormatError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(Annotation(row["subject_id"].strip(), row["dimension"].strip(),
                                      row["label"].strip(), row["annotator"].strip()))
            except ValidationError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return out


def resolve_all(annotations: Iterable[Annotation], min_votes: int = 3, max_votes: int = 5) -> dict[tuple[str, str], str]:
    groups: dict[tuple[str, str], list[Annotation]] = defaultdict(list)
    for a in annotations:
        groups[(a.subject, a.dimension)].append(a)
    return {k: resolve_label(v, min_votes, max_votes) for k, v in sorted(groups.items())}


def apply_annotations(terms, annotations, message_terms: Mapping[str, Sequence[str]] | None = None,
                      min_votes: int = 3, max_votes: int = 5, frame_max_gap: int = 1) -> list:
    """Fill taxonomy columns of ``terms`` from crowd annotations.

    Subjects equal to a term's text label that term. Frame annotations on
    other subjects are message-level; ``message_terms`` maps each message id
    to the terms it contains, and each term gets :func:`term_frame` over the
    resolved frames of its messages. Unresolved votes leave a column empty.
    """
    resolved = resolve_all(annotations, min_votes, max_votes)
    by_text = {t.text: t for t in terms}
    updates: dict[str, dict[str, str]] = defaultdict(dict)
    msg_frames: dict[str, list[str]] = defaultdict(list)
    for (subject, dim), label in resolved.items():
        if label in (NEEDS_MORE, UNRESOLVED):
            continue
        if subject in by_text:
            updates[subject][dim] = label
        elif dim == "frame" and message_terms:
            for term in message_terms.get(subject, ()):
                msg_frames[term].append(label)
    for term, frames in msg_frames.items():
        if term in by_text and "frame" not in updates[term]:
            updates[term]["frame"] = term_frame(frames, frame_max_gap)
    return [replace(t, **updates[t.text]) if t.text in updates else t for t in terms]


def parse_selector(text: str) -> dict[str, frozenset[str]]:
    """Parse ``"target=muslims_islam&severity=promotes_violence|intimidates"``.

    Keys are taxonomy dimensions, ``event_type`` or ``variant``; ``|``
    separates alternatives, ``&`` joins conditions.
    """
    cond: dict[str, frozenset[str]] = {}
    for part in filter(None, (p.strip() for p in text.split("&"))):
        key, sep, vals = part.partition("=")
        key = key.strip()
        if not sep or not vals.strip():
            raise ValidationError(f"bad selector clause {part!r}")
        values = frozenset(v.strip() for v in vals.split("|"))
        if key in ("event_type", "variant"):
            pass
        elif key in DIMENSIONS:
            for v in values:
                check_label(key, v)
        else:
            raise ValidationError(f"unknown selector key {key!r}")
        cond[key] = values
    if not cond:
        raise ValidationError("empty selector")
    return cond


def make_selector(text: str, terms_by_text: Mapping, event_types: Mapping[str, str] | None = None) -> Callable:
    """Predicate over impact estimates built from a selector string."""
    cond = parse_selector(text)
    event_types = event_types or {}

    def select(est) -> bool:
        term = terms_by_text.get(est.term)
        for key, values in cond.items():
            if key == "event_type":
                value = event_types.get(est.event_id, "")
            elif key == "variant":
                value = est.variant
            else:
                value = getattr(term, key, "") if term is not None else ""
            if value not in values:
                return False
        return True

    return select
