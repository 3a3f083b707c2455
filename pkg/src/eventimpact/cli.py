"""Command-line pipeline: lexicon, series, impact, aggregate, calibrate, report.

Every command writes into ``--out``. Primary outputs are pure functions of
the inputs, the config and ``--seed``; run timestamps go to ``*.meta.json``
sidecars only. Exit codes: 0 success, 2 validation error, 3 data
availability, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import io
import json
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import control_config, expansion_config, load_config, model_config
from .control import build_design, synthesize_control
from .corpus import PLATFORM_VARIANTS, build_term_series, ingest_jsonl, matches
from .errors import (DataAvailabilityError, EventImpactError, InsufficientDataError, ValidationError)
from .events import bundled_events_path, dedupe_same_week, load_events
from .impact import (aggregate, aggregate_csv, estimate_impact, log_compress, prefilter, rank_terms,
                     read_report_csv, report_csv, report_json)
from .lexicon import (accepted, candidates_csv, expand_candidates, lexicon_csv, merge, read_lexicon,
                      terms_from_strings)
from .plots import effects_svg, impact_svg, three_panel_svg
from .series import as_date, format_number, read_series_csv, slice_series, write_series_csv
from .simulate import SimConfig, run_calibration, sim_config_dict, trial_seed
from .taxonomy import DIMENSIONS, apply_annotations, distribution, distribution_csv, make_selector, read_annotations

log = logging.getLogger("eventimpact")
Z90 = 1.6448536269514722


# ---------------------------------------------------------------- helpers

def slug(*parts: str) -> str:
    """Filesystem-safe name; a short hash keeps distinct inputs distinct."""
    raw = "__".join(parts)
    base = re.sub(r"[^a-z0-9]+", "-", raw.lower()).strip("-")[:60] or "x"
    return f"{base}-{hashlib.sha1(raw.encode()).hexdigest()[:8]}"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_meta(path: Path, args, extra: dict) -> None:
    meta = {
        "command": args.command,
        "created": dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "version": __version__,
        "seed": args.seed,
        "jobs": args.jobs,
        "config": args.config,
    }
    meta.update(extra)
    _write(path, json.dumps(meta, indent=1, sort_keys=True, default=str) + "\n")


def _num(v) -> str:
    return "" if v is None or not math.isfinite(v) else format_number(v)


def _pool_map(fn, tasks, jobs: int, initializer=None, initargs=()):
    """Ordered map, in-process for ``jobs <= 1``."""
    if jobs <= 1 or len(tasks) <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs, initializer=initializer, initargs=initargs) as pool:
        return list(pool.map(fn, tasks))


def _read_terms(path) -> list:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_lexicon(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    return terms_from_strings(l for l in lines if l.strip() and not l.lstrip().startswith("#!"))


def _corpus(paths, platform: str | None = None) -> list:
    records = []
    for p in paths:
        records.extend(ingest_jsonl(p))
    if platform:
        records = [r for r in records if r.platform == platform]
    return records


# ---------------------------------------------------------------- lexicon

def cmd_lexicon(args, cfg) -> int:
    out = Path(args.out)
    if args.action == "normalize":
        terms = [replace(t, source=args.source) for t in _read_terms(args.input)]
        merged = merge([terms])
        _write(out / "lexicon.csv", lexicon_csv(merged))
        log.info("%d terms -> %d canonical", len(terms), len(merged))
    elif args.action == "merge":
        lists = []
        for src in ("bootstrap", "external", "expanded"):
            for path in getattr(args, src) or ():
                lists.append([replace(t, source=src) for t in _read_terms(path)])
        for path in args.lexicon or ():
            lists.append(read_lexicon(path))
        merged = merge(lists)
        _write(out / "lexicon.csv", lexicon_csv(merged))
        log.info("merged %d lists into %d terms", len(lists), len(merged))
    elif args.action == "expand":
        lex = read_lexicon(args.lexicon)
        records = _corpus(args.corpus, args.platform)
        live = accepted(lex)
        matched = [r for r in records if any(matches(t, r.text) for t in live)]
        ecfg = expansion_config(cfg, args.platform)
        cands = expand_candidates(matched, ecfg, lexicon=lex, jobs=args.jobs)
        _write(out / "candidates.csv", candidates_csv(cands))
        log.info("%d matched messages, %d candidates", len(matched), len(cands))
    elif args.action == "annotate":
        lex = read_lexicon(args.lexicon)
        anns = read_annotations(args.annotations)
        message_terms = None
        if args.corpus:
            message_terms = {}
            for r in _corpus(args.corpus):
                hit = [t.text for t in lex if matches(t, r.text)]
                if hit:
                    message_terms[r.id] = hit
        tx = cfg["taxonomy"]
        labelled = apply_annotations(lex, anns, message_terms, int(tx["min_votes"]), int(tx["max_votes"]),
                                     int(tx["frame_max_gap"]))
        _write(out / "lexicon.csv", lexicon_csv(labelled))
        _write(out / "distribution.csv", distribution_csv(distribution(accepted(labelled))))
    return 0


# ---------------------------------------------------------------- series

_RECORDS: list = []


def _init_records(records):
    global _RECORDS
    _RECORDS = records


def _series_task(task):
    term, variants, first, last, platform, mode = task
    return [build_term_series(_RECORDS, term, v, (first, last), platform, mode) for v in variants]


def cmd_series(args, cfg) -> int:
    out = Path(args.out) / "series"
    platform = args.platform
    terms = accepted(read_lexicon(args.lexicon))
    records = _corpus(args.corpus, platform)
    first, last = as_date(args.start), as_date(args.end)
    variants = args.variants or list(PLATFORM_VARIANTS[platform])
    for v in variants:
        if v not in PLATFORM_VARIANTS[platform]:
            raise ValidationError(f"variant {v!r} not valid for {platform}")
    mode = args.comments or cfg["lexicon"]["comment_mode"]
    tasks = [(t, variants, first, last, platform, mode) for t in terms]
    results = _pool_map(_series_task, tasks, args.jobs, _init_records, (records,))
    index = {"platform": platform, "first": first.isoformat(), "last": last.isoformat(), "series": []}
    for term, series in zip(terms, results):
        for v, s in zip(variants, series):
            name = slug(term.text, v) + ".csv"
            write_series_csv(s, out / name)
            index["series"].append({"term": term.text, "variant": v, "file": name})
    _write(out / "index.json", json.dumps(index, indent=1) + "\n")
    log.info("%d terms x %d variants from %d records", len(terms), len(variants), len(records))
    return 0


def load_store(path) -> tuple[dict, dict]:
    """Series store as ``({(term, variant): DailySeries}, index)``."""
    path = Path(path)
    index = json.loads((path / "index.json").read_text(encoding="utf-8"))
    store = {}
    for entry in index["series"]:
        store[(entry["term"], entry["variant"])] = read_series_csv(path / entry["file"], name=entry["term"])
    return store, index


# ---------------------------------------------------------------- impact

_SHARED: dict = {}


def _init_impact(shared):
    global _SHARED
    _SHARED = shared


def _impact_task(task):
    event, term, variant, seed = task
    sh = _SHARED
    treated = sh["store"][(term, variant)]
    try:
        design = build_design(treated, sh["exogenous"], event, sh["control_cfg"], c=sh["shift_c"])
        control = synthesize_control(design, sh["model_cfg"], n_draws=sh["n_draws"], seed=seed)
        est = estimate_impact(treated, design, control, term=term, variant=variant, width_cap=sh["width_cap"])
    except EventImpactError as exc:
        return ("error", type(exc).__name__, exc.exit_code, str(exc))
    return ("ok", est, _control_rows(treated, design, control, est))


def _control_rows(treated, design, control, est) -> list[list[str]]:
    """Per-day observed, counterfactual and 90% band on the original scale."""
    C = design.shift_c
    level = float(design.treated_pre.values.mean())
    filt = control.model.filter
    pre_mean = filt.one_step_means + level - C
    pre_sd = np.sqrt(np.clip(filt.one_step_vars, 0.0, None))
    pre_mean[: filt.burn_in] = np.nan
    lo_pre, hi_pre = pre_mean - Z90 * pre_sd, pre_mean + Z90 * pre_sd
    post_lo, post_hi = np.percentile(control.draws - C, [5.0, 95.0], axis=0)
    mean = np.concatenate([pre_mean, control.mean - C])
    lo = np.concatenate([lo_pre, post_lo])
    hi = np.concatenate([hi_pre, post_hi])
    first = design.treated_pre.start
    last = design.post_range[1]
    obs = slice_series(treated, first, last)
    n_pre = design.pre_days
    rows = []
    for k, (d, o, m, a, b) in enumerate(zip(obs.dates, obs.values, mean, lo, hi)):
        rows.append([est.event_id, est.term, est.variant, d.isoformat(), "pre" if k < n_pre else "post",
                     _num(o), _num(m), _num(a), _num(b)])
    return rows


CONTROL_FIELDS = ("event_id", "term", "variant", "date", "window", "observed", "counterfactual", "low90", "high90")


def _read_exogenous(specs) -> dict:
    out = {}
    for spec in specs or ():
        key, sep, path = spec.partition("=")
        if not sep:
            raise ValidationError(f"--exogenous expects ID=PATH, got {spec!r}")
        out[key.strip()] = read_series_csv(path.strip(), name=key.strip())
    return out


def cmd_impact(args, cfg) -> int:
    out = Path(args.out)
    store, index = load_store(args.series)
    events = load_events(args.events or bundled_events_path())
    if args.dedupe:
        events = dedupe_same_week(events, int(cfg["events"]["dedupe_window_days"]))
    exogenous = _read_exogenous(args.exogenous)
    ccfg = control_config(cfg, exogenous_ids=sorted(exogenous) if args.exogenous else None)
    ic = cfg["impact"]
    terms = sorted({t for t, _ in store})
    if args.lexicon:
        allowed = {t.text for t in accepted(read_lexicon(args.lexicon))}
        terms = [t for t in terms if t in allowed]
    wanted = args.variants or ic["variants"]
    min_peak = float(ic["min_peak"])

    tasks, skipped = [], []
    for ev in events:
        post = (ev.date, ev.date + dt.timedelta(days=ccfg.post_days - 1))
        for term in terms:
            variants = [v for v in wanted if (term, v) in store]
            gate = [store[(term, v)] for v in ic["prefilter_variants"] if (term, v) in store]
            gate = gate or [store[(term, v)] for v in variants]
            try:
                ok = prefilter(gate, post, min_peak)
            except DataAvailabilityError as exc:
                ok = False
                log.warning("event %s term %r: %s", ev.id, term, exc)
            except EventImpactError as exc:
                ok = False
                log.warning("event %s term %r: post window not covered (%s)", ev.id, term, exc)
            if not ok:
                log.info("skip event %s term %r: peak below %g", ev.id, term, min_peak)
                skipped.append({"event_id": ev.id, "term": term, "reason": "prefilter"})
                continue
            for v in variants:
                tasks.append((ev, term, v, trial_seed(args.seed, ev.id, term, v)))

    shared = {
        "store": store, "exogenous": exogenous, "control_cfg": ccfg, "model_cfg": model_config(cfg),
        "shift_c": float(cfg["control"]["shift_c"]), "n_draws": int(ic["n_draws"]), "width_cap": float(ic["width_cap"]),
    }
    results = _pool_map(_impact_task, tasks, args.jobs, _init_impact, (shared,))

    estimates, control_rows, errors = [], [], []
    for (ev, term, v, _), res in zip(tasks, results):
        if res[0] == "ok":
            estimates.append(res[1])
            control_rows.extend(res[2])
        else:
            log.warning("event %s term %r variant %s failed: %s", ev.id, term, v, res[3])
            errors.append({"event_id": ev.id, "term": term, "variant": v, "error": res[1], "exit_code": res[2],
                           "message": res[3]})

    _write(out / "impact.csv", report_csv(estimates))
    _write(out / "impact.json", report_json(estimates))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONTROL_FIELDS)
    w.writerows(control_rows)
    _write(out / "controls.csv", buf.getvalue())
    _write_meta(out / "impact.meta.json", args, {
        "platform": index.get("platform"), "tasks": len(tasks), "estimates": len(estimates),
        "skipped": skipped, "errors": errors, "seeds": {f"{e}|{t}|{v}": s for e, t, v, s in
                                                        ((ev.id, t, v, s) for ev, t, v, s in tasks)},
    })
    log.info("%d estimates, %d skipped by prefilter, %d failed", len(estimates), len(skipped), len(errors))
    if tasks and not estimates:
        return max(e["exit_code"] for e in errors)
    return 0


# ---------------------------------------------------------------- aggregate

def default_selectors() -> dict[str, str]:
    sels = {}
    for ev_type in ("islamist_terrorism", "islamophobic"):
        for dim, enum in DIMENSIONS.items():
            for label in enum:
                sels[f"{ev_type}/{dim}={label.value}"] = f"event_type={ev_type}&{dim}={label.value}"
    return sels


def cmd_aggregate(args, cfg) -> int:
    out = Path(args.out)
    estimates = read_report_csv(args.impact)
    terms = {t.text: t for t in read_lexicon(args.lexicon)}
    events = load_events(args.events or bundled_events_path())
    ev_types = {e.id: e.type for e in events}
    if args.select:
        sels = {}
        for s in args.select:
            label, sep, expr = s.partition(":")
            if not sep:
                label, expr = s, s
            sels[label.strip()] = expr.strip()
    else:
        sels = default_selectors()
    n_boot = int(cfg["impact"]["n_boot"])
    rows, points = [], []
    for label, expr in sels.items():
        sel = make_selector(expr, terms, ev_types)
        try:
            rows.append(aggregate(estimates, sel, n_boot=n_boot, seed=trial_seed(args.seed, label), label=label))
        except InsufficientDataError as exc:
            log.info("category %s skipped: %s", label, exc)
            continue
        for e in estimates:
            if sel(e):
                points.append([label, e.event_id, e.term, e.variant, _num(e.rel_effect_pct),
                               _num(log_compress(e.rel_effect_pct))])
    _write(out / "aggregate.csv", aggregate_csv(rows))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("category", "event_id", "term", "variant", "rel_effect_pct", "compressed"))
    w.writerows(points)
    _write(out / "aggregate_points.csv", buf.getvalue())
    if rows:
        _write(out / "aggregate.svg", effects_svg(
            [r.label for r in rows], [log_compress(r.mean_rel_effect) for r in rows],
            [log_compress(r.ci95[0]) for r in rows], [log_compress(r.ci95[1]) for r in rows],
            "mean relative effect, sign(x)*ln|x|"))
    log.info("%d of %d categories aggregated", len(rows), len(sels))
    if sels and not rows:
        raise InsufficientDataError("no category matched at least two (event, term) pairs")
    return 0


# ---------------------------------------------------------------- calibrate

def cmd_calibrate(args, cfg) -> int:
    out = Path(args.out)
    overrides = {"seed": args.seed, "effect": args.effect}
    for key in ("base_rate", "n_days", "event_day", "noise_model", "weekly_amplitude", "trend_slope", "factor_sd"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    template = SimConfig(**overrides)
    ccfg = control_config(cfg, exogenous_ids=tuple(f"exo{j}" for j in range(template.n_exogenous)))
    ccfg = replace(ccfg, post_days=template.post_days)
    report = run_calibration(template, args.trials, jobs=args.jobs, control_cfg=ccfg, model_cfg=model_config(cfg),
                             n_draws=int(cfg["impact"]["n_draws"]), width_cap=float(cfg["impact"]["width_cap"]))
    _write(out / "calibration.json", report.to_json())
    _write_meta(out / "calibration.meta.json", args, {"template": sim_config_dict(template),
                                                       "decisions": report.decisions})
    print(report.to_json(), end="")
    return 0


# ---------------------------------------------------------------- report

def cmd_report(args, cfg) -> int:
    out = Path(args.out)
    estimates = rank_terms(read_report_csv(args.impact))
    _write(out / "ranking.csv", report_csv(estimates))
    if not args.controls:
        return 0
    paths: dict[tuple, list] = {}
    with open(args.controls, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            paths.setdefault((row["event_id"], row["term"], row["variant"]), []).append(row)
    f = lambda s: float(s) if s != "" else float("nan")  # noqa: E731
    chosen = estimates if args.top is None else estimates[: args.top]
    for e in chosen:
        rows = paths.get((e.event_id, e.term, e.variant))
        if not rows:
            continue
        dates = [r["date"] for r in rows]
        obs, mean, lo, hi = ([f(r[k]) for r in rows] for k in ("observed", "counterfactual", "low90", "high90"))
        ev_idx = next(k for k, r in enumerate(rows) if r["window"] == "post")
        title = f"{e.event_id} / {e.term} / {e.variant}: {e.rel_effect_pct:+.1f}% ({e.decision})"
        name = slug(e.event_id, e.term, e.variant)
        _write(out / "plots" / f"{name}.svg", impact_svg(dates, obs, mean, lo, hi, ev_idx, title))
        _write(out / "plots" / f"{name}.panels.svg", three_panel_svg(dates, obs, mean, lo, hi, ev_idx, title))
    return 0


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eventimpact", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="TOML file overriding the bundled defaults")
    p.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", default=".", help="output directory (default .)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    lx = sub.add_parser("lexicon", help="build and maintain the term lexicon")
    lsub = lx.add_subparsers(dest="action", required=True)
    n = lsub.add_parser("normalize", help="canonicalize a term list into lexicon.csv")
    n.add_argument("input", help="text file (one term per line) or lexicon CSV")
    n.add_argument("--source", default="bootstrap", choices=("bootstrap", "external", "expanded"))
    m = lsub.add_parser("merge", help="merge term lists by source precedence")
    for src in ("bootstrap", "external", "expanded"):
        m.add_argument(f"--{src}", action="append", metavar="PATH")
    m.add_argument("--lexicon", action="append", metavar="PATH", help="lexicon CSV keeping its own sources")
    e = lsub.add_parser("expand", help="frequent n-gram candidates from matched messages")
    e.add_argument("--lexicon", required=True)
    e.add_argument("--corpus", nargs="+", required=True, help="JSONL message files")
    e.add_argument("--platform", default="twitter_like", choices=tuple(PLATFORM_VARIANTS))
    a = lsub.add_parser("annotate", help="resolve crowd annotations into taxonomy columns")
    a.add_argument("--lexicon", required=True)
    a.add_argument("--annotations", required=True)
    a.add_argument("--corpus", nargs="*", help="JSONL files for message-level frame annotations")

    s = sub.add_parser("series", help="per-term daily series from JSONL corpora")
    s.add_argument("--corpus", nargs="+", required=True)
    s.add_argument("--lexicon", required=True)
    s.add_argument("--start", required=True)
    s.add_argument("--end", required=True)
    s.add_argument("--platform", default="twitter_like", choices=tuple(PLATFORM_VARIANTS))
    s.add_argument("--variants", nargs="+")
    s.add_argument("--comments", choices=("parent_or_own", "parent"))

    i = sub.add_parser("impact", help="counterfactual impact per event, term and variant")
    i.add_argument("--series", required=True, help="series store directory")
    i.add_argument("--events", help="events CSV (default: bundled)")
    i.add_argument("--exogenous", action="append", metavar="ID=PATH")
    i.add_argument("--lexicon", help="restrict to accepted terms of this lexicon")
    i.add_argument("--variants", nargs="+")
    i.add_argument("--dedupe", action="store_true", help="keep one event per week (most victims)")

    g = sub.add_parser("aggregate", help="mean relative effect per taxonomy category")
    g.add_argument("--impact", required=True)
    g.add_argument("--lexicon", required=True)
    g.add_argument("--events")
    g.add_argument("--select", action="append", metavar="LABEL:EXPR",
                   help="e.g. 'muslim-violent:target=muslims_islam&severity=promotes_violence'")

    c = sub.add_parser("calibrate", help="simulation study of the estimator")
    c.add_argument("--trials", type=int, default=500)
    c.add_argument("--effect", type=float, default=0.0, help="multiplicative lift (0.5 = +50%%)")
    c.add_argument("--base-rate", type=float, dest="base_rate")
    c.add_argument("--n-days", type=int, dest="n_days")
    c.add_argument("--event-day", type=int, dest="event_day")
    c.add_argument("--noise-model", choices=("poisson_like", "gaussian"), dest="noise_model")
    c.add_argument("--weekly-amplitude", type=float, dest="weekly_amplitude")
    c.add_argument("--trend-slope", type=float, dest="trend_slope")
    c.add_argument("--factor-sd", type=float, dest="factor_sd")

    r = sub.add_parser("report", help="ranking table and SVG plots")
    r.add_argument("--impact", required=True)
    r.add_argument("--controls", help="controls.csv written by impact")
    r.add_argument("--top", type=int)
    return p


COMMANDS = {"lexicon": cmd_lexicon, "series": cmd_series, "impact": cmd_impact, "aggregate": cmd_aggregate,
            "calibrate": cmd_calibrate, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except EventImpactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
