import csv
import json
import subprocess
import sys

import pytest

from conftest import FIXTURES
from histent.cli import main
from histent.corpus import Concept, Document, Entity, read_corpus, write_corpus
from histent.synthetic import bme_predictive_corpus, separable_corpus


def run(argv, capsys):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.err


def test_convert_gpt_html(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    (src / "n1.html").write_text('complains of <span class="cc">left otalgia</span> and '
                                 '<span class="hpi.duration">2 days</span>')
    code, err = run(["convert", "--format", "gpt-html", "--role", "predicted", src, "--out", tmp_path / "o"], capsys)
    assert code == 0, err
    docs = read_corpus(tmp_path / "o" / "corpus.jsonl")
    assert len(docs) == 1 and len(docs[0].predicted) == 2
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["documents"] == 1 and list(manifest["inputs"]) == [str(src / "n1.html")]


def test_convert_corrupt_reports_location(tmp_path, capsys):
    bad = tmp_path / "bad.html"
    bad.write_text('ok\nthen <span class="cc">never closed')
    code, err = run(["convert", "--format", "gpt-html", bad, "--out", tmp_path / "o"], capsys)
    assert code != 0
    info = json.loads(err)
    assert info["error"] == "UnclosedTag" and info["line"] == 2 and info["column"] == 6


def test_convert_brat_and_round_trip(tmp_path, capsys):
    src = tmp_path / "brat"
    src.mkdir()
    (src / "a.txt").write_text("Migraine for 2 days")
    (src / "a.ann").write_text("T1\tCC 0 8\tMigraine\nT2\tHpiDuration 13 19\t2 days\n")
    assert run(["convert", "--format", "brat", src, "--out", tmp_path / "o1"], capsys)[0] == 0
    first = (tmp_path / "o1" / "corpus.jsonl").read_bytes()
    assert run(["convert", "--format", "standoff-json", tmp_path / "o1" / "corpus.jsonl",
                "--out", tmp_path / "o2"], capsys)[0] == 0
    assert (tmp_path / "o2" / "corpus.jsonl").read_bytes() == first


def test_evaluate_perfect_predictions(tmp_path, capsys):
    docs = separable_corpus(5, 1)
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    write_corpus(gold, docs)
    write_corpus(pred, [Document(d.doc_id, d.text, [], [Entity(e.concept, e.start, e.end, d.doc_id, "predicted")
                                                        for e in d.gold]) for d in docs])
    code, err = run(["evaluate", "--gold", gold, "--pred", pred, "--out", tmp_path / "ev"], capsys)
    assert code == 0, err
    rows = list(csv.DictReader(open(tmp_path / "ev" / "rates.csv")))
    total = rows[-1]
    assert total["entity"] == "Total" and total["em_pct"] == "100.0" and total["error_pct"] == "0.0"
    assert "| Total |" in (tmp_path / "ev" / "rates.md").read_text()


def test_evaluate_doc_id_mismatch(tmp_path, capsys):
    write_corpus(tmp_path / "g.jsonl", [Document.build("a", "x"), Document.build("b", "y")])
    write_corpus(tmp_path / "p.jsonl", [Document.build("a", "x"), Document.build("c", "y")])
    code, err = run(["evaluate", "--gold", tmp_path / "g.jsonl", "--pred", tmp_path / "p.jsonl",
                     "--out", tmp_path / "ev"], capsys)
    info = json.loads(err)
    assert code == 1 and info["error"] == "DocIdMismatch"
    assert "'b'" in info["message"] and "'c'" in info["message"]


def test_missing_file(tmp_path, capsys):
    code, err = run(["evaluate", "--gold", tmp_path / "nope.jsonl", "--out", tmp_path / "x"], capsys)
    assert code == 1 and json.loads(err)["error"] == "FileNotFound"


def test_analyze_sections_from_cells(tmp_path, capsys):
    code, err = run(["analyze", "sections", "--input", FIXTURES / "section_cells.csv", "--out", tmp_path], capsys)
    assert code == 0, err
    published = {(r["model"], r["group"]): float(r["published_p"])
                 for r in csv.DictReader(open(FIXTURES / "section_cells.csv"))}
    out = list(csv.DictReader(open(tmp_path / "sections.csv")))
    assert len(out) == 20
    for r in out:
        assert abs(float(r["p_value"]) - published[(r["model"], r["group"])]) <= 0.002


def test_analyze_notes_from_counts(tmp_path, capsys):
    code, err = run(["analyze", "notes", "--input", FIXTURES / "note_counts.csv", "--out", tmp_path], capsys)
    assert code == 0, err
    want = {(r["model"], r["on"], r["measure"]): r for r in csv.DictReader(open(FIXTURES / "note_correlations.csv"))}
    for r in csv.DictReader(open(tmp_path / "notes.csv")):
        w = want[(r["model"], r["on"], r["measure"])]
        assert abs(float(r["r"]) - float(w["r"])) <= 0.0005
        assert abs(float(r["p_value"]) - float(w["p_value"])) <= 0.001


def test_analyze_length_degenerate(tmp_path, capsys):
    path = tmp_path / "one.csv"
    path.write_text("category,n,mean,sd\nem,10,2.0,1.0\n")
    code, err = run(["analyze", "length", "--input", path, "--out", tmp_path / "o"], capsys)
    assert code == 0, err
    md = (tmp_path / "o" / "length.md").read_text()
    assert md.count("skipped") == 4


def test_analyze_bad_csv(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("group,em_rm_in\nCC,1\n")
    code, err = run(["analyze", "sections", "--input", path, "--out", tmp_path / "o"], capsys)
    assert code == 1 and json.loads(err)["error"] == "MalformedInput"


def test_analyze_corpus_with_env_lexicon(tmp_path, capsys, monkeypatch):
    text = "REASON: chest pain\nSOCIAL: smokes\n"
    doc = Document.build("d", text, [Entity(Concept.CC, 8, 18, "d"), Entity(Concept.SocialHistory, 27, 33, "d")],
                         [Entity(Concept.CC, 8, 18, "d", "predicted")])
    write_corpus(tmp_path / "c.jsonl", [doc])
    lex = tmp_path / "lex.json"
    lex.write_text(json.dumps({"CC": ["REASON"], "SocialHistory": ["SOCIAL"]}))
    monkeypatch.setenv("HISTENT_LEXICON", str(lex))
    code, err = run(["analyze", "sections", "--gold", tmp_path / "c.jsonl", "--lexicon", tmp_path / "missing.json",
                     "--out", tmp_path / "o"], capsys)
    assert code == 0, err
    rows = {r["group"]: r for r in csv.DictReader(open(tmp_path / "o" / "sections.csv"))}
    assert (rows["CC"]["em_rm_in"], rows["SocialHistory"]["mmud_in"]) == ("1", "1")
    assert str(lex) in json.loads((tmp_path / "o" / "manifest.json").read_text())["inputs"]


def test_svg_output(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    code, err = run(["analyze", "notes", "--input", FIXTURES / "note_counts.csv", "--out", tmp_path,
                     "--format", "csv,svg"], capsys)
    assert code == 0, err
    assert (tmp_path / "notes.svg").read_text().lstrip().startswith("<?xml")


def test_unknown_report_format(tmp_path, capsys):
    code, err = run(["analyze", "notes", "--input", FIXTURES / "note_counts.csv", "--out", tmp_path,
                     "--format", "pdf"], capsys)
    assert code == 1 and "pdf" in json.loads(err)["message"]


def test_train_separable_and_idempotent(tmp_path, capsys):
    gold = tmp_path / "sep.jsonl"
    write_corpus(gold, separable_corpus(30, 4))
    for name in ("r1", "r2"):
        code, err = run(["train", "--gold", gold, "--seed", 2, "--hash-bits", 14, "--out", tmp_path / name], capsys)
        assert code == 0, err
    files = sorted(p.relative_to(tmp_path / "r1") for p in (tmp_path / "r1").rglob("*") if p.is_file())
    assert len(files) >= 10
    for f in files:
        assert (tmp_path / "r1" / f).read_bytes() == (tmp_path / "r2" / f).read_bytes(), f
    total = list(csv.DictReader(open(tmp_path / "r1" / "rates.csv")))[-1]
    assert float(total["em_pct"]) >= 95.0
    manifest = json.loads((tmp_path / "r1" / "manifest.json").read_text())
    assert manifest["seed"] == 2 and "models/fold0.txt" in manifest["outputs"]


def test_train_with_bme_lowers_error(tmp_path, capsys):
    docs, bme = bme_predictive_corpus(30, 2)
    write_corpus(tmp_path / "g.jsonl", docs)
    write_corpus(tmp_path / "b.jsonl", [Document.build(d.doc_id, d.text, bme[d.doc_id]) for d in docs])
    errors = {}
    for mode in ("basic", "with_bme"):
        code, err = run(["train", "--gold", tmp_path / "g.jsonl", "--bme", tmp_path / "b.jsonl", "--mode", mode,
                         "--hash-bits", 14, "--out", tmp_path / mode], capsys)
        assert code == 0, err
        errors[mode] = float(list(csv.DictReader(open(tmp_path / mode / "rates.csv")))[-1]["error_pct"])
    assert errors["with_bme"] < errors["basic"]


def test_train_with_bme_without_file(tmp_path, capsys):
    write_corpus(tmp_path / "g.jsonl", separable_corpus(10, 0))
    code, err = run(["train", "--gold", tmp_path / "g.jsonl", "--mode", "with_bme", "--out", tmp_path / "o"], capsys)
    assert code == 1 and json.loads(err)["error"] == "MissingBme"


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "histent.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("histent ")
