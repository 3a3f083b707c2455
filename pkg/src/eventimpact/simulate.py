"""Synthetic series with known effects, and calibration of the full pipeline.

Treated and exogenous series share a latent factor: a weekly cycle, a linear
trend and a slow random walk. Each series adds its own count noise. An
optional multiplicative lift is applied to the treated mean over the post
window, so the true effect is known exactly.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .control import ControlConfig, ModelConfig, build_design, synthesize_control
from .events import Event
from .impact import DECREASE, INCREASE, estimate_impact
from .series import DailySeries
from .errors import ValidationError


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one synthetic (treated, exogenous) draw.

    ``event_day`` is the 0-based index of the event within ``n_days``.
    ``factor_sd`` is the daily step of the shared random walk, as a fraction
    of the base rate. ``effect`` is the multiplicative lift over the post
    window (0 for no effect).
    """

    n_days: int = 540
    event_day: int = 460
    post_days: int = 7
    base_rate: float = 200.0
    weekly_amplitude: float = 0.15
    trend_slope: float = 0.0
    factor_sd: float = 0.01
    noise_model: str = "poisson_like"
    shared_factor_loading: float = 1.0
    n_exogenous: int = 3
    exogenous_rate: float = 500.0
    effect: float = 0.0
    shift_c: float = 1000.0
    start: dt.date = dt.date(2016, 1, 1)
    seed: int = 0

    def __post_init__(self):
        if self.base_rate <= 0:
            raise ValidationError("base_rate must be positive")
        if self.event_day < 77 or self.event_day + self.post_days > self.n_days:
            raise ValidationError("event window must have >= 77 pre days and fit inside n_days")
        if self.noise_model not in ("poisson_like", "gaussian"):
            raise ValidationError(f"unknown noise model {self.noise_model!r}")


@dataclass(frozen=True, eq=False)
class SimPair:
    treated: DailySeries
    exogenous: dict[str, DailySeries]
    event: Event
    true_rel_effect: float
    # noise-free post-window means with and without the effect
    expected_treated: np.ndarray
    expected_control: np.ndarray


def _noise(rng, mean, model):
    mean = np.clip(mean, 0.0, None)
    if model == "gaussian":
        return mean + rng.standard_normal(mean.shape) * np.sqrt(mean)
    # Gaussian with variance = mean once the rate is high enough, else Poisson
    out = np.where(mean >= 30, mean + rng.standard_normal(mean.shape) * np.sqrt(mean), rng.poisson(mean))
    return np.clip(np.round(out), 0.0, None)


def simulate_pair(cfg: SimConfig) -> SimPair:
    rng = np.random.default_rng(cfg.seed)
    t = np.arange(cfg.n_days)
    walk = np.cumsum(rng.standard_normal(cfg.n_days) * cfg.factor_sd)
    walk -= walk[cfg.event_day]
    weekly = cfg.weekly_amplitude * np.sin(2 * np.pi * t / 7)
    drift = cfg.trend_slope * (t - cfg.event_day) / cfg.base_rate

    base = cfg.base_rate * np.clip(1.0 + weekly + walk + drift, 0.05, None)
    lift = np.ones(cfg.n_days)
    post = slice(cfg.event_day, cfg.event_day + cfg.post_days)
    lift[post] += cfg.effect
    treated = _noise(rng, base * lift, cfg.noise_model)

    exogenous = {}
    for j in range(cfg.n_exogenous):
        ex_mean = cfg.exogenous_rate * np.clip(1.0 + weekly + cfg.shared_factor_loading * walk + drift, 0.05, None)
        exogenous[f"exo{j}"] = DailySeries(cfg.start, _noise(rng, ex_mean, cfg.noise_model), name=f"exo{j}")

    event = Event(f"sim-{cfg.seed}", cfg.start + dt.timedelta(days=cfg.event_day), "simulated")
    return SimPair(
        treated=DailySeries(cfg.start, treated, name="treated"),
        exogenous=exogenous,
        event=event,
        true_rel_effect=100.0 * cfg.effect,
        expected_treated=(base * lift)[post].copy(),
        expected_control=base[post].copy(),
    )


@dataclass(frozen=True)
class CalibrationReport:
    trials: int
    fpr: float
    detection: float
    bias: float
    coverage: float
    decisions: dict = field(default_factory=dict)

    def to_json(self) -> str:
        # a rate undefined for this design (fpr with an effect, detection
        # without) is written as null
        nul = lambda v: None if isinstance(v, float) and math.isnan(v) else v  # noqa: E731
        payload = {"trials": self.trials, "fpr": nul(self.fpr), "detection": nul(self.detection),
                   "bias": nul(self.bias), "coverage": nul(self.coverage)}
        return json.dumps(payload, sort_keys=False) + "\n"


@dataclass(frozen=True)
class TrialResult:
    seed: int
    decision: str
    rel_effect_pct: float
    true_rel_shifted: float
    covered: bool


def trial_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary labels."""
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "little") >> 1


def run_trial(cfg: SimConfig, control_cfg=None, model_cfg=None, n_draws: int = 1000, width_cap: float = 5.0) -> TrialResult:
    pair = simulate_pair(cfg)
    ccfg = control_cfg or ControlConfig(post_days=cfg.post_days, exogenous_ids=tuple(sorted(pair.exogenous)))
    design = build_design(pair.treated, pair.exogenous, pair.event, ccfg, c=cfg.shift_c)
    control = synthesize_control(design, model_cfg or ModelConfig(), n_draws=n_draws,
                                 seed=trial_seed("calibration", cfg.seed))
    est = estimate_impact(pair.treated, design, control, term="simulated", width_cap=width_cap)
    true_cum = float((pair.expected_treated - pair.expected_control).sum())
    true_rel = 100.0 * true_cum / float((pair.expected_control + cfg.shift_c).sum())
    return TrialResult(cfg.seed, est.decision, est.rel_effect_pct, true_rel, bool(est.ci90[0] <= true_cum <= est.ci90[1]))


def _run_one(args):
    return run_trial(*args)


def run_calibration(
    template: SimConfig,
    n_trials: int,
    seeds=None,
    jobs: int = 1,
    control_cfg: ControlConfig | None = None,
    model_cfg: ModelConfig | None = None,
    n_draws: int = 1000,
    width_cap: float = 5.0,
) -> CalibrationReport:
    """Run the control + impact pipeline on ``n_trials`` simulated pairs.

    ``seeds`` defaults to ``template.seed, template.seed + 1, ...``. Bias is
    measured against the true effect expressed on the same shifted scale as
    the estimate. ``fpr`` counts increase/decrease calls among trials with no
    injected effect; ``detection`` counts correctly signed calls among trials
    with one.
    """
    if seeds is None:
        seeds = [template.seed + i for i in range(n_trials)]
    seeds = list(seeds)[:n_trials]
    if len(seeds) < n_trials:
        raise ValidationError(f"{n_trials} trials requested but only {len(seeds)} seeds given")
    tasks = [(replace(template, seed=int(s)), control_cfg, model_cfg, n_draws, width_cap) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_one(t) for t in tasks]
    return summarize(results, template.effect)


def summarize(results, effect: float) -> CalibrationReport:
    n = len(results)
    decisions = {}
    for r in results:
        decisions[r.decision] = decisions.get(r.decision, 0) + 1
    signif = sum(r.decision in (INCREASE, DECREASE) for r in results)
    if effect == 0:
        fpr, detection = signif / n, float("nan")
    else:
        want = INCREASE if effect > 0 else DECREASE
        fpr, detection = float("nan"), sum(r.decision == want for r in results) / n
    bias = float(np.mean([r.rel_effect_pct - r.true_rel_shifted for r in results]))
    coverage = sum(r.covered for r in results) / n
    return CalibrationReport(n, fpr, detection, bias, coverage, dict(sorted(decisions.items())))


def sim_config_dict(cfg: SimConfig) -> dict:
    d = asdict(cfg)
    d["start"] = cfg.start.isoformat()
    return d


_FILLER = ("people", "today", "news", "world", "really", "think", "city", "new", "week", "said")


def simulate_messages(
    term_counts: dict[str, np.ndarray],
    start,
    platform: str = "twitter_like",
    repost_prob: float = 0.2,
    n_users: int = 400,
    comments_per_post: float = 2.0,
    background_per_day: int = 0,
    seed: int = 0,
) -> list:
    """Message-level corpus whose per-term originating counts are given.

    On a twitter-like platform day ``d`` gets ``term_counts[term][d]``
    messages containing the term, each turned into a repost of an earlier
    same-day message with probability ``repost_prob``. On a reddit-like
    platform the counts are posts, each followed by a Poisson number of
    comments (mean ``comments_per_post``) that do not repeat the term.
    ``background_per_day`` adds messages matching no term.
    """
    from .corpus import MessageRecord

    rng = np.random.default_rng(seed)
    start = dt.datetime.combine(start if isinstance(start, dt.date) else dt.date.fromisoformat(start),
                                dt.time(), tzinfo=dt.timezone.utc)
    n_days = max(len(v) for v in term_counts.values())
    out, serial = [], 0

    def new_id():
        nonlocal serial
        serial += 1
        return f"m{serial:07d}"

    def filler(k):
        return " ".join(rng.choice(_FILLER, size=k))

    for d in range(n_days):
        day0 = start + dt.timedelta(days=d)
        stamp = lambda: day0 + dt.timedelta(seconds=int(rng.integers(0, 86400)))  # noqa: E731
        for term in sorted(term_counts):
            n = int(term_counts[term][d]) if d < len(term_counts[term]) else 0
            todays = []
            for _ in range(n):
                user = f"u{int(rng.integers(n_users))}"
                if platform == "twitter_like":
                    if todays and rng.random() < repost_prob:
                        src = todays[int(rng.integers(len(todays)))]
                        text = f"RT @{src.user}: {src.text}"
                    else:
                        text = f"{filler(2)} {term} {filler(1)}"
                    rec = MessageRecord(platform, new_id(), stamp(), user, text, "message")
                    if not text.startswith("RT @"):
                        todays.append(rec)
                    out.append(rec)
                else:
                    post = MessageRecord(platform, new_id(), stamp(), user, f"{filler(2)} {term}", "post")
                    out.append(post)
                    for _ in range(int(rng.poisson(comments_per_post))):
                        out.append(MessageRecord(platform, new_id(), post.timestamp, f"u{int(rng.integers(n_users))}",
                                                 filler(3), "comment", post.id))
        for _ in range(background_per_day):
            kind = "message" if platform == "twitter_like" else "post"
            out.append(MessageRecord(platform, new_id(), stamp(), f"u{int(rng.integers(n_users))}", filler(4), kind))
    return out
