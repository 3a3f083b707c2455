"""End-to-end command-line pipeline on a simulated message corpus.

Three seed terms are tracked on a twitter-like platform for about 15
months. After a simulated attack, messages containing "ban islam" rise by
half and "#stopislam" by 30% for a week; "refugees welcome" carries on
unchanged, so any call on it is a false positive (expected in about one
null test in ten at the 90% level). The script drives every
``eventimpact`` subcommand in order:

1. ``lexicon normalize``  canonical lexicon from a plain term list
2. ``series``             daily messages / dedup / users counts per term
3. ``lexicon expand``     frequent n-grams from matched messages
4. ``lexicon annotate``   crowd votes resolved into taxonomy labels
5. ``impact``             counterfactual and effect per event and term
6. ``aggregate``          mean effect per taxonomy category
7. ``report``             ranking table and SVG plots

Run:  python3 demos/pipeline.py [output_dir]
"""

import csv
import sys
from pathlib import Path

from eventimpact.cli import main
from eventimpact.corpus import write_jsonl
from eventimpact.series import write_series_csv
from eventimpact.simulate import SimConfig, simulate_messages, simulate_pair

N_DAYS = 468  # event on day 460 plus the week after


def run(*argv: str) -> None:
    print("$ eventimpact", " ".join(argv))
    code = main(list(argv))
    if code:
        raise SystemExit(f"command failed with exit code {code}")


def show(path: Path, limit: int = 8) -> None:
    with path.open() as fh:
        for i, row in enumerate(csv.reader(fh)):
            if i > limit:
                print("    ...")
                break
            print("   ", ", ".join(row))


def build_inputs(root: Path) -> None:
    hate = simulate_pair(SimConfig(n_days=N_DAYS, base_rate=60.0, effect=0.5, seed=21))
    tag = simulate_pair(SimConfig(n_days=N_DAYS, base_rate=50.0, effect=0.3, seed=23))
    counter = simulate_pair(SimConfig(n_days=N_DAYS, base_rate=40.0, seed=22))
    counts = {"ban islam": hate.treated.values, "#stopislam": tag.treated.values,
              "refugees welcome": counter.treated.values}
    records = simulate_messages(counts, hate.treated.start, repost_prob=0.25, n_users=3000, seed=5)
    write_jsonl(records, root / "corpus.jsonl")
    print(f"simulated {len(records)} messages from {hate.treated.start} to {hate.treated.end}")

    for ex_id, s in hate.exogenous.items():
        write_series_csv(s, root / f"{ex_id}.csv")
    (root / "seed_terms.txt").write_text("Ban Islam\n#StopIslam\nrefugees  welcome\n")
    (root / "events.csv").write_text(
        "id,date,name,type,country,victims\n"
        f"{hate.event.id},{hate.event.date},simulated attack,islamist_terrorism,US,12\n")
    votes = [("ban islam", "stance", "unfavorable"), ("ban islam", "target", "muslims_islam"),
             ("ban islam", "severity", "promotes_violence"), ("ban islam", "frame", "solutions"),
             ("#stopislam", "stance", "unfavorable"), ("#stopislam", "target", "muslims_islam"),
             ("#stopislam", "severity", "offends_discriminates"), ("#stopislam", "frame", "causes"),
             ("refugees welcome", "stance", "favorable"), ("refugees welcome", "target", "immigrants"),
             ("refugees welcome", "severity", "not_applicable"), ("refugees welcome", "frame", "none")]
    with (root / "annotations.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("subject_id", "dimension", "label", "annotator"))
        for subject, dim, label in votes:
            for a in range(3):
                w.writerow((subject, dim, label, f"worker{a}"))


def main_demo(root: Path) -> None:
    root.mkdir(parents=True, exist_ok=True)
    build_inputs(root)
    out = root / "out"
    exo = [a for j in range(3) for a in ("--exogenous", f"exo{j}={root / f'exo{j}.csv'}")]

    run("--out", str(out / "lex"), "lexicon", "normalize", str(root / "seed_terms.txt"))
    show(out / "lex" / "lexicon.csv")

    run("--out", str(out), "series", "--corpus", str(root / "corpus.jsonl"), "--lexicon",
        str(out / "lex" / "lexicon.csv"), "--start", "2016-01-01", "--end", "2017-04-12")

    run("--out", str(out / "expand"), "lexicon", "expand", "--lexicon", str(out / "lex" / "lexicon.csv"),
        "--corpus", str(root / "corpus.jsonl"))
    print("  top expansion candidates (reviewers would accept or reject these):")
    show(out / "expand" / "candidates.csv", limit=5)

    run("--out", str(out / "labelled"), "lexicon", "annotate", "--lexicon", str(out / "lex" / "lexicon.csv"),
        "--annotations", str(root / "annotations.csv"))
    show(out / "labelled" / "distribution.csv", limit=20)

    run("--out", str(out / "impact"), "impact", "--series", str(out / "series"),
        "--events", str(root / "events.csv"), "--lexicon", str(out / "labelled" / "lexicon.csv"), *exo)
    show(out / "impact" / "impact.csv")

    run("--out", str(out / "aggregate"), "aggregate", "--impact", str(out / "impact" / "impact.csv"),
        "--lexicon", str(out / "labelled" / "lexicon.csv"), "--events", str(root / "events.csv"))
    show(out / "aggregate" / "aggregate.csv")

    run("--out", str(out / "report"), "report", "--impact", str(out / "impact" / "impact.csv"),
        "--controls", str(out / "impact" / "controls.csv"))
    print(f"plots in {out / 'report' / 'plots'}")


if __name__ == "__main__":
    main_demo(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output/pipeline"))
