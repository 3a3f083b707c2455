"""Counterfactual (synthetic control) construction for one event and one series.

The training window is the ``pre_days`` days before the event; the post
window is the event day and the following ``post_days - 1`` days. Covariates
are the treated series itself displaced by each configured lag (with a
fallback displacement when the primary one runs off the data), plus any
exogenous reference series aligned with the event window.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field

import numpy as np

from . import ssm
from .errors import DataAvailabilityError, RangeError, ValidationError
from .series import DailySeries, as_date, event_window, lag_window_with_source, shift_constant, slice_series

log = logging.getLogger(__name__)

DEFAULT_LAGS = ((365, -365), (161, -35))


@dataclass(frozen=True)
class ControlConfig:
    pre_days: int = 77
    post_days: int = 7
    lag_specs: tuple[tuple[int, int], ...] = DEFAULT_LAGS
    exogenous_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lag_specs", tuple(tuple(int(v) for v in spec) for spec in self.lag_specs))
        object.__setattr__(self, "exogenous_ids", tuple(self.exogenous_ids))
        if self.pre_days < 28:
            raise ValidationError("pre_days must be >= 28")
        if self.post_days < 1:
            raise ValidationError("post_days must be >= 1")
        span = self.pre_days + self.post_days
        for lag, fallback in self.lag_specs:
            # primary lags must not overlap the event window; fallbacks only need
            # to point somewhere other than the window itself
            if abs(lag) <= span:
                raise ValidationError(f"lag {lag} overlaps the {span}-day event window")
            if fallback == 0:
                raise ValidationError("fallback lag 0 is the event window itself")


@dataclass(frozen=True)
class ModelConfig:
    trend: bool = True
    weekly_seasonal: bool = False
    optimizer: ssm.OptimizerConfig = field(default_factory=ssm.OptimizerConfig)


@dataclass(frozen=True, eq=False)
class ControlDesign:
    event_date: dt.date
    treated_pre: DailySeries
    X_pre: np.ndarray
    X_post: np.ndarray
    covariate_labels: tuple[str, ...]
    shift_c: float
    # (label, requested lag, lag actually used) per lag covariate
    lag_sources: tuple[tuple[str, int, int], ...] = ()
    event_id: str = ""

    @property
    def pre_days(self) -> int:
        return len(self.treated_pre)

    @property
    def post_days(self) -> int:
        return self.X_post.shape[0]

    @property
    def post_range(self) -> tuple[dt.date, dt.date]:
        return self.event_date, self.event_date + dt.timedelta(days=self.post_days - 1)

    @property
    def fallbacks_used(self) -> tuple[str, ...]:
        return tuple(label for label, lag, used in self.lag_sources if lag != used)


@dataclass(frozen=True, eq=False)
class ControlSeries:
    mean: np.ndarray
    draws: np.ndarray
    model: ssm.FittedModel | None = None
    dropped_covariates: tuple[str, ...] = ()
    degenerate: bool = False
    seed: int = 0


def build_design(
    treated: DailySeries,
    exogenous: dict[str, DailySeries] | None,
    event,
    cfg: ControlConfig | None = None,
    c: float = 0.0,
) -> ControlDesign:
    """Assemble the training target and covariate matrices for one event.

    Parameters
    ----------
    treated : DailySeries
        Observed series of the term. Must cover the training window and every
        lag window (after fallback).
    exogenous : dict
        Reference series keyed by id; only ``cfg.exogenous_ids`` are used, in
        that order.
    event : Event or date
    cfg : ControlConfig
    c : float
        Constant added to the target and to every covariate.
    """
    cfg = cfg or ControlConfig()
    exogenous = exogenous or {}
    event_date = as_date(getattr(event, "date", event))
    event_id = getattr(event, "id", "") or ""
    first, last = event_window(event_date, cfg.pre_days, cfg.post_days)
    pre_last = event_date - dt.timedelta(days=1)

    try:
        treated_pre = slice_series(treated, first, pre_last)
    except RangeError as exc:
        raise DataAvailabilityError(f"training window unavailable: {exc}", missing=exc.missing) from exc

    columns, labels, sources = [], [], []
    for lag, fallback in cfg.lag_specs:
        label = f"lag{lag}"
        try:
            window, used = lag_window_with_source(treated, event_date, lag, cfg.pre_days, cfg.post_days, fallback)
        except DataAvailabilityError as exc:
            raise DataAvailabilityError(f"{label}: {exc}", missing=exc.missing) from exc
        if used != lag:
            log.debug("event %s: %s fell back to displacement %d", event_date, label, used)
        columns.append(window.values)
        labels.append(label)
        sources.append((label, lag, used))
    for ex_id in cfg.exogenous_ids:
        if ex_id not in exogenous:
            raise ValidationError(f"exogenous series {ex_id!r} not supplied")
        try:
            columns.append(slice_series(exogenous[ex_id], first, last).values)
        except RangeError as exc:
            raise RangeError(f"exogenous {ex_id!r}: {exc}", missing=exc.missing) from exc
        labels.append(ex_id)

    n = cfg.pre_days + cfg.post_days
    X = np.column_stack(columns) + c if columns else np.zeros((n, 0))
    return ControlDesign(
        event_date=event_date,
        treated_pre=shift_constant(treated_pre, c),
        X_pre=X[: cfg.pre_days].copy(),
        X_post=X[cfg.pre_days :].copy(),
        covariate_labels=tuple(labels),
        shift_c=float(c),
        lag_sources=tuple(sources),
        event_id=str(event_id),
    )


def _standardize(X_pre: np.ndarray, X_post: np.ndarray, labels):
    # Affine changes of a covariate are absorbed by the diffuse level and
    # coefficient states, so centering/scaling only improves conditioning.
    # Columns constant over training are collinear with the level: dropped.
    if X_pre.shape[1] == 0:
        return X_pre, X_post, ()
    center = X_pre.mean(axis=0)
    scale = X_pre.std(axis=0)
    keep = scale > 1e-12 * (1.0 + np.abs(center))
    dropped = tuple(lab for lab, k in zip(labels, keep) if not k)
    center, scale = center[keep], scale[keep]
    return (X_pre[:, keep] - center) / scale, (X_post[:, keep] - center) / scale, dropped


def synthesize_control(
    design: ControlDesign, model_cfg: ModelConfig | None = None, n_draws: int = 1000, seed: int = 0
) -> ControlSeries:
    """Fit the structural model on the training window and forecast the post window.

    Returned means and draws are on the same (shifted) scale as the design.
    The fit itself runs on unshifted data. Centering would absorb the shift
    anyway, but the likelihood surface has flat ridges on which rounding
    differences of order 1e-13 can move the optimum, so removing the shift
    first makes the forecast bit-for-bit independent of it for count data.
    """
    model_cfg = model_cfg or ModelConfig()
    C = design.shift_c
    y = design.treated_pre.values - C
    level = float(y.mean())
    X_pre, X_post, dropped = _standardize(design.X_pre - C, design.X_post - C, design.covariate_labels)
    if dropped:
        log.debug("event %s: dropping constant covariates %s", design.event_date, dropped)
    spec = ssm.ModelSpec(
        has_trend=model_cfg.trend,
        has_weekly_seasonal=model_cfg.weekly_seasonal,
        n_covariates=X_pre.shape[1],
    )
    fitted = ssm.fit_mle(spec, y - level, X_pre, model_cfg.optimizer)
    fc = ssm.forecast(fitted, X_post, design.post_days, n_draws=n_draws, seed=seed)
    return ControlSeries(
        mean=fc.mean_path + (level + C),
        draws=fc.draws + (level + C),
        model=fitted,
        dropped_covariates=dropped,
        degenerate=bool(np.ptp(y) == 0),
        seed=int(seed),
    )
