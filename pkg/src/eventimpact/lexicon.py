"""Query-term lexicon: normalization, n-gram expansion and list merging."""

from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import tokenize
from .errors import FormatError, ValidationError

SOURCES = ("bootstrap", "external", "expanded")
STATUSES = ("candidate", "accepted", "rejected")
# lower index wins on collision
PRECEDENCE = {s: i for i, s in enumerate(SOURCES)}
LEXICON_FIELDS = ("term", "source", "status", "stance", "target", "severity", "frame")

TWITTER_THRESHOLDS = {1: 300, 2: 150, 3: 75}
REDDIT_THRESHOLDS = {1: 300, 2: 120, 3: 50}


def normalize(raw: str) -> str:
    """Canonical term text: lowercase tokens, article ``a`` dropped, single spaces."""
    return " ".join(t for t in tokenize(raw) if t != "a")


@dataclass(frozen=True)
class Term:
    text: str
    source: str = "bootstrap"
    status: str = "accepted"
    stance: str = ""
    target: str = ""
    severity: str = ""
    frame: str = ""
    tokens: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        canon = normalize(self.text)
        if not canon:
            raise ValidationError(f"term {self.text!r} has no tokens after normalization")
        if self.source not in SOURCES:
            raise ValidationError(f"unknown source {self.source!r}")
        if self.status not in STATUSES:
            raise ValidationError(f"unknown status {self.status!r}")
        object.__setattr__(self, "text", canon)
        object.__setattr__(self, "tokens", tuple(canon.split(" ")))

    def taxonomy(self) -> dict[str, str]:
        return {"stance": self.stance, "target": self.target, "severity": self.severity, "frame": self.frame}


@lru_cache(maxsize=None)
def bundled_stopwords() -> frozenset[str]:
    text = (resources.files("eventimpact") / "data" / "stopwords_en.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class ExpansionConfig:
    """Frequency thresholds per n-gram length and the stopword list to drop.

    ``stopwords`` is ``"english"`` (bundled list), ``"none"``, or an explicit
    collection of words. ``fold_plural`` merges a trailing plural ``s`` on the
    last token of each n-gram.
    """

    thresholds: Mapping[int, float] = field(default_factory=lambda: dict(TWITTER_THRESHOLDS))
    max_ngram: int = 3
    stopwords: str | frozenset = "english"
    fold_plural: bool = False

    def __post_init__(self):
        th = {int(k): v for k, v in dict(self.thresholds).items()}
        object.__setattr__(self, "thresholds", th)
        if self.max_ngram < 1:
            raise ValidationError("max_ngram must be >= 1")
        for n in range(1, self.max_ngram + 1):
            if n not in th:
                raise ValidationError(f"no threshold for {n}-grams")
            if not th[n] >= 1:
                raise ValidationError(f"threshold for {n}-grams must be >= 1")
        if isinstance(self.stopwords, str) and self.stopwords not in ("english", "none"):
            raise ValidationError(f"unknown stopword list {self.stopwords!r}")

    @classmethod
    def for_platform(cls, platform: str, **kw) -> ExpansionConfig:
        table = REDDIT_THRESHOLDS if platform == "reddit_like" else TWITTER_THRESHOLDS
        return cls(thresholds=dict(table), **kw)

    def stopword_set(self) -> frozenset[str]:
        if self.stopwords == "english":
            return bundled_stopwords()
        if self.stopwords == "none":
            return frozenset()
        return frozenset(self.stopwords)


def _fold(gram: tuple[str, ...]) -> tuple[str, ...]:
    last = gram[-1]
    if len(last) > 3 and last.endswith("s") and not last.endswith("ss"):
        return gram[:-1] + (last[:-1],)
    return gram


def message_ngrams(text: str, max_ngram: int, stopwords: frozenset, fold_plural: bool = False) -> Counter:
    """Occurrence counts of contiguous 1..max_ngram grams in one message."""
    toks = [t for t in tokenize(text) if t not in stopwords]
    out: Counter = Counter()
    for n in range(1, max_ngram + 1):
        for i in range(len(toks) - n + 1):
            gram = tuple(toks[i : i + n])
            out[_fold(gram) if fold_plural else gram] += 1
    return out


def _count_chunk(args) -> Counter:
    texts, max_ngram, stop, fold = args
    total: Counter = Counter()
    for t in texts:
        total.update(message_ngrams(t, max_ngram, stop, fold))
    return total


def count_ngrams(texts: Sequence[str], cfg: ExpansionConfig, jobs: int = 1) -> Counter:
    stop = cfg.stopword_set()
    texts = list(texts)
    if jobs <= 1 or len(texts) < 1000:
        return _count_chunk((texts, cfg.max_ngram, stop, cfg.fold_plural))
    size = -(-len(texts) // jobs)
    chunks = [(texts[i : i + size], cfg.max_ngram, stop, cfg.fold_plural) for i in range(0, len(texts), size)]
    total: Counter = Counter()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_count_chunk, chunks):
            total.update(part)
    return total


def expand_candidates(
    messages: Iterable, cfg: ExpansionConfig | None = None, lexicon: Iterable[Term] = (), jobs: int = 1
) -> list[tuple[str, int]]:
    """Frequent n-grams of matched messages that are not yet lexicon terms.

    ``messages`` may hold strings or records with a ``text`` attribute. The
    result is sorted by descending frequency, then term text.
    """
    cfg = cfg or ExpansionConfig()
    texts = [m if isinstance(m, str) else m.text for m in messages]
    known = {t.text for t in lexicon}
    counts = count_ngrams(texts, cfg, jobs)
    out = []
    for gram, freq in counts.items():
        text = " ".join(gram)
        if freq >= cfg.thresholds[len(gram)] and text not in known:
            out.append((text, freq))
    return sorted(out, key=lambda kv: (-kv[1], kv[0]))


def merge(lists: Iterable[Iterable[Term]]) -> list[Term]:
    """Union of term lists deduplicated by canonical text.

    On collision the higher-precedence source wins (bootstrap, then external,
    then expanded); among equals the first occurrence is kept, with taxonomy
    columns filled from later duplicates where it has none.
    """
    best: dict[str, Term] = {}
    for terms in lists:
        for term in terms:
            if not isinstance(term, Term):
                term = Term(term)
            cur = best.get(term.text)
            if cur is None:
                best[term.text] = term
                continue
            win, lose = (term, cur) if PRECEDENCE[term.source] < PRECEDENCE[cur.source] else (cur, term)
            filled = {k: v or getattr(lose, k) for k, v in win.taxonomy().items()}
            best[term.text] = replace(win, **filled)
    return [best[k] for k in sorted(best)]


def terms_from_strings(raw: Iterable[str], source: str = "bootstrap", status: str = "accepted") -> list[Term]:
    return [Term(r, source=source, status=status) for r in raw if normalize(r)]


def read_lexicon(path) -> list[Term]:
    """Read a lexicon CSV; only ``term`` is required, other columns default."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "term" not in reader.fieldnames:
            raise FormatError(f"{path}: missing 'term' column")
        terms = []
        for lineno, row in enumerate(reader, start=2):
            kw = {k: (row.get(k) or "").strip() for k in LEXICON_FIELDS[1:]}
            kw["source"] = kw["source"] or "bootstrap"
            kw["status"] = kw["status"] or "accepted"
            try:
                terms.append(Term(row["term"], **kw))
            except ValidationError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return terms


def lexicon_csv(terms: Iterable[Term]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LEXICON_FIELDS)
    for t in terms:
        w.writerow([t.text, t.source, t.status, t.stance, t.target, t.severity, t.frame])
    return buf.getvalue()


def candidates_csv(candidates: Iterable[tuple[str, int]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("term", "frequency"))
    w.writerows(candidates)
    return buf.getvalue()


def read_candidates(path, status: str = "candidate") -> list[Term]:
    """Load a candidate CSV back as expanded terms.

    An optional ``status`` column carries the reviewers' accept/reject call.
    """
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [
            Term(row["term"], source="expanded", status=(row.get("status") or status).strip())
            for row in csv.DictReader(fh)
        ]


def accepted(terms: Iterable[Term]) -> list[Term]:
    return [t for t in terms if t.status == "accepted"]
