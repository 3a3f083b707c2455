import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from eventimpact.cli import main
from eventimpact.impact import read_report_csv
from helpers import DATA, impact_argv, write_impact_fixture


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("fx")
    return root, write_impact_fixture(root)


@pytest.fixture(scope="module")
def impact_out(fixture_dir):
    root, fx = fixture_dir
    out = root / "out"
    assert main(impact_argv(fx, out, jobs=1)) == 0
    return out


def test_lexicon_normalize_merge(tmp_path):
    (tmp_path / "boot.txt").write_text("Ban A Mosque\nban islam\n\n")
    (tmp_path / "ext.txt").write_text("ban mosque\n#NoSharia\n")
    assert main(["--out", str(tmp_path / "n"), "lexicon", "normalize", str(tmp_path / "boot.txt")]) == 0
    text = (tmp_path / "n" / "lexicon.csv").read_text()
    assert text.splitlines() == ["term,source,status,stance,target,severity,frame",
                                 "ban islam,bootstrap,accepted,,,,", "ban mosque,bootstrap,accepted,,,,"]
    assert main(["--out", str(tmp_path / "m"), "lexicon", "merge", "--bootstrap", str(tmp_path / "boot.txt"),
                 "--external", str(tmp_path / "ext.txt")]) == 0
    rows = list(csv.DictReader((tmp_path / "m" / "lexicon.csv").open()))
    assert [(r["term"], r["source"]) for r in rows] == [
        ("#nosharia", "external"), ("ban islam", "bootstrap"), ("ban mosque", "bootstrap")]


def test_lexicon_expand_on_fixture(tmp_path):
    lex = tmp_path / "lex.csv"
    lex.write_text("term\nban islam\n")
    cfg = tmp_path / "c.toml"
    cfg.write_text("[lexicon]\ntwitter_thresholds = [50, 40, 30]\n")
    argv = ["--config", str(cfg), "--out", str(tmp_path), "lexicon", "expand", "--lexicon", str(lex),
            "--corpus", str(DATA / "fixture_corpus.jsonl")]
    assert main(argv) == 0
    rows = list(csv.reader((tmp_path / "candidates.csv").open()))
    assert rows[0] == ["term", "frequency"]
    got = {r[0]: int(r[1]) for r in rows[1:]}
    # 94 matched messages; "ban islam" itself is excluded as a lexicon term
    assert got == {"ban": 94, "islam": 94, "must": 84, "must ban": 84, "must ban islam": 84}


def test_lexicon_annotate(tmp_path):
    lex = tmp_path / "lex.csv"
    lex.write_text("term\nban islam\nrefugees welcome\n")
    ann = tmp_path / "ann.csv"
    rows = ["subject_id,dimension,label,annotator"]
    rows += [f"ban islam,stance,unfavorable,w{i}" for i in range(3)]
    rows += [f"refugees welcome,stance,{lab},w{i}" for i, lab in enumerate(["favorable", "favorable", "neutral"])]
    ann.write_text("\n".join(rows) + "\n")
    assert main(["--out", str(tmp_path / "o"), "lexicon", "annotate", "--lexicon", str(lex),
                 "--annotations", str(ann)]) == 0
    dist = (tmp_path / "o" / "distribution.csv").read_text()
    assert "stance,unfavorable,50.0" in dist and "stance,favorable,50.0" in dist


def test_series_command_matches_hand_counts(tmp_path):
    lex = tmp_path / "lex.csv"
    lex.write_text("term\nban islam\n#stopislam\nban mosque\n")
    exp = json.loads((DATA / "expected_counts.json").read_text())
    argv = ["--out", str(tmp_path), "--jobs", "2", "series", "--corpus", str(DATA / "fixture_corpus.jsonl"),
            "--lexicon", str(lex), "--start", "2016-06-10", "--end", "2016-06-19"]
    assert main(argv) == 0
    index = json.loads((tmp_path / "series" / "index.json").read_text())
    assert len(index["series"]) == 9
    for entry in index["series"]:
        rows = list(csv.DictReader((tmp_path / "series" / entry["file"]).open()))
        assert [int(r["value"]) for r in rows] == exp["series"]["twitter_like"][entry["term"]][entry["variant"]]


def test_impact_outputs(impact_out, fixture_dir):
    root, fx = fixture_dir
    ests = read_report_csv(impact_out / "impact.csv")
    # 3 terms pass the prefilter at the first event x 2 variants; the late
    # event has no usable lag window, the quiet term is filtered out
    assert len(ests) == 6
    assert {e.event_id for e in ests} == {"sim-attack"}
    assert {e.term for e in ests} == {"ban islam", "#stopislam", "refugees welcome"}
    lifted = [e for e in ests if e.term == "ban islam"]
    assert all(e.decision == "increase" for e in lifted)
    meta = json.loads((impact_out / "impact.meta.json").read_text())
    assert {s["term"] for s in meta["skipped"]} == {"quiet term"}
    assert len(meta["errors"]) == 6 and all(e["exit_code"] == 3 for e in meta["errors"])
    js = json.loads((impact_out / "impact.json").read_text())
    assert [r["term"] for r in js] == [e.term for e in ests]
    header = (impact_out / "controls.csv").read_text().splitlines()[0]
    assert header == "event_id,term,variant,date,window,observed,counterfactual,low90,high90"


def test_impact_data_availability_exit_code(fixture_dir, tmp_path):
    root, fx = fixture_dir
    ev = tmp_path / "ev.csv"
    ev.write_text("id,date,name,type,country,victims\nlate,2017-03-01,x,islamophobic,US,1\n")
    argv = impact_argv({**fx, "events": ev}, tmp_path, jobs=1)
    assert main(argv) == 3


def test_aggregate(impact_out, fixture_dir, tmp_path):
    root, fx = fixture_dir
    argv = ["--out", str(tmp_path), "aggregate", "--impact", str(impact_out / "impact.csv"),
            "--lexicon", str(fx["lexicon"]), "--events", str(fx["events"]),
            "--select", "muslims:target=muslims_islam", "--select", "violent:severity=promotes_violence"]
    assert main(argv) == 0
    rows = list(csv.DictReader((tmp_path / "aggregate.csv").open()))
    assert [r["category"] for r in rows] == ["muslims"]
    assert rows[0]["n"] == "2"
    ET.parse(tmp_path / "aggregate.svg")
    pts = list(csv.DictReader((tmp_path / "aggregate_points.csv").open()))
    assert len(pts) == 4


def test_aggregate_defaults_and_failure(impact_out, fixture_dir, tmp_path):
    root, fx = fixture_dir
    base = ["--out", str(tmp_path), "aggregate", "--impact", str(impact_out / "impact.csv"),
            "--lexicon", str(fx["lexicon"]), "--events", str(fx["events"])]
    assert main(base) == 0
    assert "islamist_terrorism/stance=unfavorable" in (tmp_path / "aggregate.csv").read_text()
    assert main(base + ["--select", "none:target=arabs_mena"]) == 3


def test_report(impact_out, tmp_path):
    argv = ["--out", str(tmp_path), "report", "--impact", str(impact_out / "impact.csv"),
            "--controls", str(impact_out / "controls.csv"), "--top", "2"]
    assert main(argv) == 0
    ranked = read_report_csv(tmp_path / "ranking.csv")
    assert [e.rel_effect_pct for e in ranked] == sorted((e.rel_effect_pct for e in ranked), reverse=True)
    svgs = sorted((tmp_path / "plots").glob("*.svg"))
    assert len(svgs) == 4
    for p in svgs:
        ET.parse(p)


def test_calibrate_small(tmp_path):
    argv = ["--out", str(tmp_path), "--seed", "3", "calibrate", "--trials", "3", "--effect", "0.5"]
    assert main(argv) == 0
    rep = json.loads((tmp_path / "calibration.json").read_text())
    assert rep["trials"] == 3 and rep["fpr"] is None and 0 <= rep["detection"] <= 1


def test_exit_codes(tmp_path):
    assert main(["--out", str(tmp_path), "--jobs", "0", "calibrate", "--trials", "1"]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[nope]\n")
    assert main(["--config", str(bad), "report", "--impact", "x.csv"]) == 2
    assert main(["--out", str(tmp_path), "report", "--impact", str(tmp_path / "missing.csv")]) == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "eventimpact.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("lexicon", "series", "impact", "aggregate", "calibrate", "report"):
        assert cmd in out.stdout
