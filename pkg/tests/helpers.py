"""Builders for on-disk fixtures shared by the CLI and acceptance tests."""

import json
from pathlib import Path

from eventimpact.cli import slug
from eventimpact.series import write_series_csv
from eventimpact.simulate import SimConfig, simulate_pair

TERMS = ("ban islam", "#stopislam", "refugees welcome")
DATA = Path(__file__).parent / "data"


def write_impact_fixture(root: Path, low_term: bool = True) -> dict:
    """Series store, exogenous files, events and lexicon for ``impact``.

    ``ban islam`` carries a +50% lift at the first event; the others are
    null. With ``low_term`` a fourth term peaks below the prefilter floor.
    """
    store = root / "store"
    index = {"platform": "twitter_like", "first": "2016-01-01", "last": "", "series": []}
    terms = list(TERMS) + (["quiet term"] if low_term else [])
    pair = None
    for k, term in enumerate(terms):
        for j, variant in enumerate(("messages", "users")):
            base = 5.0 if term == "quiet term" else (200.0 if j == 0 else 80.0)
            cfg = SimConfig(seed=10 * k + j, effect=0.5 if k == 0 else 0.0, base_rate=base)
            pair = simulate_pair(cfg)
            name = slug(term, variant) + ".csv"
            write_series_csv(pair.treated, store / name)
            index["series"].append({"term": term, "variant": variant, "file": name})
        if k == 0:
            for ex_id, s in pair.exogenous.items():
                write_series_csv(s, root / f"{ex_id}.csv")
    index["last"] = pair.treated.end.isoformat()
    (store / "index.json").write_text(json.dumps(index, indent=1) + "\n")
    (root / "events.csv").write_text(
        "id,date,name,type,country,victims\n"
        f"sim-attack,{pair.event.date},simulated attack,islamist_terrorism,US,10\n"
        "sim-late,2017-03-01,no lag window,islamophobic,US,1\n")
    (root / "lexicon.csv").write_text(
        "term,source,status,stance,target,severity,frame\n"
        "ban islam,bootstrap,accepted,unfavorable,muslims_islam,promotes_violence,solutions\n"
        "#stopislam,bootstrap,accepted,unfavorable,muslims_islam,offends_discriminates,causes\n"
        "refugees welcome,external,accepted,favorable,immigrants,not_applicable,none\n"
        "quiet term,expanded,accepted,neutral,ethnic_other,not_applicable,none\n")
    return {"store": store, "events": root / "events.csv", "lexicon": root / "lexicon.csv",
            "exogenous": [f"exo{j}={root / f'exo{j}.csv'}" for j in range(3)], "event_date": pair.event.date}


def impact_argv(fx: dict, out: Path, jobs: int, seed: int = 0) -> list[str]:
    argv = ["--out", str(out), "--jobs", str(jobs), "--seed", str(seed), "impact", "--series", str(fx["store"]),
            "--events", str(fx["events"])]
    for e in fx["exogenous"]:
        argv += ["--exogenous", e]
    return argv
