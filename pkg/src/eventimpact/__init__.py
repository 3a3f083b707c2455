"""Counterfactual impact of events on daily term-frequency series."""

__version__ = "0.1.0"

from .control import ControlConfig, ModelConfig, build_design, synthesize_control  # noqa: E402
from .errors import (DataAvailabilityError, EventImpactError, FitError, FormatError,  # noqa: E402
                     InsufficientDataError, NumericError, RangeError, ValidationError)
from .events import Event, dedupe_same_week, load_events  # noqa: E402
from .impact import (ImpactEstimate, aggregate, decide, estimate_impact, log_compress,  # noqa: E402
                     prefilter, rank_terms, relative_effect)
from .series import DailySeries, event_window, lag_window, shift_constant, slice_series  # noqa: E402
from .ssm import ModelSpec, OptimizerConfig, VarianceParams, fit_mle, forecast, kalman_filter  # noqa: E402

__all__ = [
    "ControlConfig", "ModelConfig", "build_design", "synthesize_control",
    "DataAvailabilityError", "EventImpactError", "FitError", "FormatError", "InsufficientDataError",
    "NumericError", "RangeError", "ValidationError",
    "Event", "dedupe_same_week", "load_events",
    "ImpactEstimate", "aggregate", "decide", "estimate_impact", "log_compress", "prefilter", "rank_terms",
    "relative_effect",
    "DailySeries", "event_window", "lag_window", "shift_constant", "slice_series",
    "ModelSpec", "OptimizerConfig", "VarianceParams", "fit_mle", "forecast", "kalman_filter",
]
