"""Walk through one event study on simulated data.

A term's daily message count gets a +40% lift during the week after an
event. We build the control design (the term's own series one year and
~5 months earlier plus three reference series), synthesize a counterfactual
with the structural time-series model, and read off the effect.

Run:  python3 demos/event_study.py [output_dir]
"""

import datetime as dt
import sys
from pathlib import Path

import numpy as np

from eventimpact import ControlConfig, ModelConfig, build_design, estimate_impact, synthesize_control
from eventimpact.plots import three_panel_svg
from eventimpact.series import slice_series
from eventimpact.simulate import SimConfig, simulate_pair


def main(out_dir: Path) -> None:
    cfg = SimConfig(base_rate=120.0, effect=0.4, weekly_amplitude=0.2, seed=11)
    pair = simulate_pair(cfg)
    print(f"event {pair.event.id} on {pair.event.date}; injected lift {pair.true_rel_effect:+.0f}%")

    ccfg = ControlConfig(post_days=cfg.post_days, exogenous_ids=tuple(sorted(pair.exogenous)))
    design = build_design(pair.treated, pair.exogenous, pair.event, ccfg, c=1000.0)
    print(f"training days {design.pre_days}, covariates {', '.join(design.covariate_labels)}")

    control = synthesize_control(design, ModelConfig(), n_draws=2000, seed=1)
    p = control.model.params
    print(f"fitted variances: obs {p.obs_var:.1f}, level {p.level_var:.3g}, trend {p.trend_var:.3g}")

    est = estimate_impact(pair.treated, design, control, term="demo term")
    lo, hi = est.ci90
    print(f"cumulative effect {est.abs_effect:+.0f} messages over {design.post_days} days "
          f"(90% interval {lo:+.0f} to {hi:+.0f})")
    print(f"relative effect on the shifted scale {est.rel_effect_pct:+.2f}%  ->  decision: {est.decision}")
    truth = (pair.expected_treated - pair.expected_control).sum()
    print(f"true cumulative effect {truth:+.0f}; within the 90% interval: {lo <= truth <= hi}")

    # picture: 28 training days plus the post window, on the original scale
    first, last = design.post_range
    window = slice_series(pair.treated, first - dt.timedelta(days=28), last)
    C = design.shift_c
    n_pre = 28
    pre_nan = np.full(n_pre, np.nan)
    mean = np.r_[pre_nan, control.mean - C]
    low = np.r_[pre_nan, np.percentile(control.draws, 5, axis=0) - C]
    high = np.r_[pre_nan, np.percentile(control.draws, 95, axis=0) - C]
    dates = [d.isoformat() for d in window.dates]
    svg = three_panel_svg(dates, window.values, mean, low, high, n_pre, title="demo term")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "event_study.svg").write_text(svg)
    print(f"wrote {out_dir / 'event_study.svg'}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output"))
