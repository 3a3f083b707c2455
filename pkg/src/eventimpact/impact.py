"""Effect estimation, decision rule, ranking and category aggregation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .control import ControlDesign, ControlSeries
from .errors import InsufficientDataError, NumericError, ValidationError
from .series import DailySeries, format_number, slice_series

INCREASE, DECREASE, NONE, INCONCLUSIVE = "increase", "decrease", "none", "inconclusive"
DECISIONS = (INCREASE, DECREASE, NONE, INCONCLUSIVE)
VARIANTS = ("messages", "messages_dedup", "users", "posts", "comments")

REPORT_FIELDS = (
    "event_id", "term", "variant", "abs_effect", "rel_effect_pct",
    "ci90_low", "ci90_high", "ci95_low", "ci95_high", "decision",
)


@dataclass(frozen=True)
class ImpactEstimate:
    event_id: str
    term: str
    variant: str
    abs_effect: float
    rel_effect_pct: float
    ci90: tuple[float, float]
    ci95: tuple[float, float]
    decision: str
    n_draws: int = 0
    seed: int = 0

    def row(self) -> dict:
        return {
            "event_id": self.event_id,
            "term": self.term,
            "variant": self.variant,
            "abs_effect": self.abs_effect,
            "rel_effect_pct": self.rel_effect_pct,
            "ci90_low": self.ci90[0],
            "ci90_high": self.ci90[1],
            "ci95_low": self.ci95[0],
            "ci95_high": self.ci95[1],
            "decision": self.decision,
        }

    @classmethod
    def from_row(cls, row: dict) -> ImpactEstimate:
        f = lambda k: float(row[k])  # noqa: E731
        return cls(
            str(row["event_id"]), str(row["term"]), str(row["variant"]), f("abs_effect"), f("rel_effect_pct"),
            (f("ci90_low"), f("ci90_high")), (f("ci95_low"), f("ci95_high")), str(row["decision"]),
        )


@dataclass(frozen=True)
class AggregateEstimate:
    label: str
    mean_rel_effect: float
    ci95: tuple[float, float]
    n: int


def relative_effect(t, c) -> float:
    """Percent lift of ``t`` over ``c``: ``100 * sum(t - c) / sum(c)``."""
    t = np.asarray(t, dtype=float)
    c = np.asarray(c, dtype=float)
    if t.shape != c.shape or t.ndim != 1 or t.size < 1:
        raise ValidationError(f"need equal-length nonempty vectors, got {t.shape} and {c.shape}")
    denom = c.sum()
    if denom == 0:
        raise NumericError("relative effect undefined: control sums to zero")
    return float(100.0 * (t - c).sum() / denom)


def decide(ci90: tuple[float, float], cum_control: float, width_cap: float = 5.0) -> str:
    """Classify an effect from the 90% interval of the cumulative difference.

    An interval wider than ``width_cap`` times the cumulative control (floored
    at 1) is inconclusive whatever its sign.
    """
    if width_cap <= 0:
        raise ValidationError("width_cap must be positive")
    low, high = ci90
    if (high - low) / max(1.0, abs(cum_control)) > width_cap:
        return INCONCLUSIVE
    if low > 0:
        return INCREASE
    if high < 0:
        return DECREASE
    return NONE


def estimate_impact(
    treated: DailySeries,
    design: ControlDesign,
    control: ControlSeries,
    term: str = "",
    variant: str = "messages",
    width_cap: float = 5.0,
) -> ImpactEstimate:
    """Compare the observed post window with its synthesized control.

    ``abs_effect`` is on the original count scale. ``rel_effect_pct`` is taken
    on the shifted scale the control was synthesized on. Intervals are
    percentiles of the cumulative difference over the control draws.
    """
    first, last = design.post_range
    t = slice_series(treated, first, last).values
    if control.mean.shape != t.shape or control.draws.shape[1] != t.size:
        raise ValidationError(
            f"control covers {control.mean.size} days, post window has {t.size}"
        )
    C = design.shift_c
    t_shift = t + C
    abs_effect = float((t_shift - control.mean).sum())
    rel = relative_effect(t_shift, control.mean)
    cum = (t_shift[None, :] - control.draws).sum(axis=1)
    q = np.percentile(cum, [2.5, 5.0, 95.0, 97.5])
    ci90 = (float(q[1]), float(q[2]))
    ci95 = (float(q[0]), float(q[3]))
    cum_control = float((control.mean - C).sum())
    return ImpactEstimate(
        event_id=design.event_id,
        term=term,
        variant=variant,
        abs_effect=abs_effect,
        rel_effect_pct=rel,
        ci90=ci90,
        ci95=ci95,
        decision=decide(ci90, cum_control, width_cap),
        n_draws=int(control.draws.shape[0]),
        seed=control.seed,
    )


def prefilter(series_variants: Sequence[DailySeries], window, min_peak: float = 30) -> bool:
    """True when any variant reaches ``min_peak`` on some day of ``window``.

    Pass the message-count and user-count variants of one term.
    """
    first, last = window
    for s in series_variants:
        if slice_series(s, first, last).values.max() >= min_peak:
            return True
    return False


def rank_terms(estimates: Iterable[ImpactEstimate]) -> list[ImpactEstimate]:
    return sorted(estimates, key=lambda e: (-e.rel_effect_pct, e.term, e.event_id, e.variant))


def aggregate(
    estimates: Sequence[ImpactEstimate],
    selector: Callable[[ImpactEstimate], bool] | None = None,
    n_boot: int = 10_000,
    seed: int = 0,
    label: str = "",
) -> AggregateEstimate:
    """Mean relative effect of a category with a bootstrap 95% interval.

    The resampling unit is the (event, term) pair; variants of one pair that
    are all selected are averaged first.
    """
    chosen = [e for e in estimates if selector is None or selector(e)]
    by_pair: dict[tuple[str, str], list[float]] = {}
    for e in chosen:
        by_pair.setdefault((e.event_id, e.term), []).append(e.rel_effect_pct)
    if len(by_pair) < 2:
        raise InsufficientDataError(f"category {label!r} matches {len(by_pair)} (event, term) pairs; need >= 2")
    values = np.array([np.mean(by_pair[k]) for k in sorted(by_pair)])
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    boot = values[idx].mean(axis=1)
    low, high = np.percentile(boot, [2.5, 97.5])
    return AggregateEstimate(label, float(values.mean()), (float(low), float(high)), int(values.size))


def log_compress(rel_effect_pct: float) -> float:
    """``sign(x) * ln|x|`` for ``|x| >= 1``; sub-unit effects map to 0."""
    x = float(rel_effect_pct)
    if abs(x) < 1:
        return 0.0
    return math.copysign(math.log(abs(x)), x)


def _fmt(v):
    return format_number(v) if isinstance(v, float) else str(v)


def report_csv(estimates: Iterable[ImpactEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    for e in estimates:
        row = e.row()
        w.writerow([_fmt(row[k]) for k in REPORT_FIELDS])
    return buf.getvalue()


def report_json(estimates: Iterable[ImpactEstimate]) -> str:
    return json.dumps([e.row() for e in estimates], indent=1) + "\n"


def read_report_csv(path) -> list[ImpactEstimate]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [ImpactEstimate.from_row(r) for r in csv.DictReader(fh)]


def aggregate_csv(rows: Iterable[AggregateEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["category", "mean_rel_effect", "ci95_low", "ci95_high", "n"])
    for a in rows:
        w.writerow([a.label, _fmt(a.mean_rel_effect), _fmt(a.ci95[0]), _fmt(a.ci95[1]), a.n])
    return buf.getvalue()


def as_dict(a: AggregateEstimate) -> dict:
    return asdict(a)
