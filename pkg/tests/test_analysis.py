import json
import random

import pytest

from conftest import FIGURE_NOTE, by_model, read_fixture
from histent.analysis import (
    DEFAULT_LEXICON,
    LengthRecord,
    NoteRecord,
    entity_length_analysis,
    format_p,
    group_of,
    length_analysis_from_summaries,
    length_records,
    load_lexicon,
    make_lexicon,
    note_length_analysis,
    note_records,
    place,
    segmentation_analysis,
    segmentation_from_tables,
    segmentation_markdown,
    segmentation_tables,
)
from histent.corpus import Concept, Document, Entity
from histent.errors import EmptyCategory, UnknownHeaderGroup, ZeroVariance
from histent.matcher import CATEGORIES, EM, MM, OD, RM, UD, classify_documents, percent
from histent.stats import ContingencyTable, SummarySample

CATS = {"em": EM, "rm": RM, "mm": MM, "ud": UD, "od": OD}


def test_flat_lengths_give_p_one():
    recs = [LengthRecord(c, 3) for c in CATEGORIES for _ in range(4)]
    res = entity_length_analysis(recs)
    assert set(res.tests) == set(CATEGORIES[1:])
    assert all(t.p_value == 1.0 for t in res.tests.values())


def test_relaxed_vs_exact_summary():
    res = length_analysis_from_summaries({EM: SummarySample(1.952, 1.512, 746),
                                          RM: SummarySample(4.670, 3.766, 229)})
    assert res.tests[RM].p_value < 0.001
    assert format_p(res.tests[RM].p_value) == "<0.001"
    assert MM in res.skipped


def test_length_means_recount():
    rng = random.Random(3)
    recs = [LengthRecord(rng.choice(CATEGORIES), rng.randint(1, 9)) for _ in range(500)]
    res = entity_length_analysis(recs)
    for cat in CATEGORIES:
        vals = [r.entity_token_length for r in recs if r.category is cat]
        assert res.summaries[cat].n == len(vals)
        assert res.summaries[cat].mean == pytest.approx(sum(vals) / len(vals), abs=1e-12)


def test_length_skips_and_strict():
    recs = [LengthRecord(EM, 1), LengthRecord(EM, 2), LengthRecord(RM, 4)]
    res = entity_length_analysis(recs)
    assert RM in res.skipped and not res.tests
    assert "skipped" in res.to_markdown()
    with pytest.raises(EmptyCategory):
        entity_length_analysis(recs, strict=True)
    with pytest.raises(ValueError):
        LengthRecord(EM, 0)


def test_length_records_use_prediction_for_od():
    doc = Document.build("d", "chest pain and shortness of breath",
                         [Entity(Concept.CC, 0, 10, "d")],
                         [Entity(Concept.CC, 0, 10, "d", "predicted"),
                          Entity(Concept.HpiAssocSignsSymptoms, 15, 34, "d", "predicted")])
    recs = length_records(classify_documents([doc]), {"d": doc})
    assert sorted((r.category.value, r.entity_token_length) for r in recs) == [("em", 2), ("od", 3)]


def test_published_entity_length_tests():
    for model, rows in by_model(read_fixture("length_summaries.csv")).items():
        summaries = {CATS[r["category"]]: SummarySample(float(r["mean"]), float(r["sd"]), int(r["n"])) for r in rows}
        res = length_analysis_from_summaries(summaries)
        for r in rows:
            if not r["published_p"]:
                continue
            p = res.tests[CATS[r["category"]]].p_value
            if r["published_p"] == "<0.001":
                assert p < 0.001, (model, r["category"])
            else:
                assert abs(p - float(r["published_p"])) <= 0.03, (model, r["category"], p)


def _notes(rows):
    return [NoteRecord(r["doc_id"], *(int(r[k]) for k in ("gold_count", "word_count", "em", "rm", "mm", "ud", "od")))
            for r in rows]


def test_published_note_correlations():
    notes = by_model(read_fixture("note_counts.csv"))
    footers = by_model(read_fixture("note_correlations.csv"))
    assert set(notes) == set(footers) and len(notes) == 4
    for model, rows in notes.items():
        assert len(rows) == 61
        res = note_length_analysis(_notes(rows))
        for f in footers[model]:
            t = (res.counts if f["on"] == "counts" else res.rates)[f["measure"]]
            assert abs(t.statistic - float(f["r"])) <= 0.0005, (model, f)
            assert abs(t.p_value - float(f["p_value"])) <= 0.001, (model, f)


def test_error_rate_arithmetic():
    rows = {r["doc_id"]: r for r in by_model(read_fixture("note_counts.csv"))["GatorTronS"]}
    note = _notes([rows["sample_2792"]])[0]
    assert (note.error_count, note.gold_count) == (30, 9)
    assert percent(note.error_count, note.gold_count) == "333.3"


def test_note_length_zero_variance():
    notes = [NoteRecord(f"n{i}", 5, 100, i, 0, 0, 0, 0) for i in range(4)]
    with pytest.raises(ZeroVariance):
        note_length_analysis(notes)


def test_note_records_from_report():
    doc = Document.build("d", "chest pain today", [Entity(Concept.CC, 0, 10, "d")], [])
    other = Document.build("e", "no complaints at all here", [Entity(Concept.CC, 0, 2, "e")],
                           [Entity(Concept.CC, 0, 2, "e", "predicted")])
    recs = note_records(classify_documents([other, doc]), [other, doc])
    assert [(r.doc_id, r.word_count, r.ud, r.em) for r in recs] == [("d", 3, 1, 0), ("e", 5, 0, 1)]


def test_group_of():
    assert {group_of(c) for c in Concept if c.is_hpi} == {"HPI"}
    assert group_of(Concept.CC) == "CC"
    assert group_of(Concept.SocialHistory) == "SocialHistory"


def test_placement_figure_note():
    start = FIGURE_NOTE.index("nonsmoker")
    doc = Document.build("f", FIGURE_NOTE)
    lex = make_lexicon()
    social = place(Entity(Concept.SocialHistory, start, start + 9, "f"), doc, lex)
    assert social.in_dedicated_section and social.group == "SocialHistory"
    mig = FIGURE_NOTE.index("migraine headaches")
    past = place(Entity(Concept.PastHistory, mig, mig + 18, "f"), doc, lex)
    assert not past.in_dedicated_section
    med = FIGURE_NOTE.index("Imitrex")
    assert place(Entity(Concept.PastHistory, med, med + 7, "f"), doc, lex).in_dedicated_section


def test_moving_a_header_flips_placement():
    before = Document.build("d", "SOCIAL HISTORY: smokes\nPLAN: rest")
    after = Document.build("d", "PLAN: smokes\nSOCIAL HISTORY: rest")
    e = Entity(Concept.SocialHistory, 16, 22, "d")
    e2 = Entity(Concept.SocialHistory, 6, 12, "d")
    lex = make_lexicon()
    assert place(e, before, lex).in_dedicated_section
    assert not place(e2, after, lex).in_dedicated_section


def test_lexicon_loading(tmp_path):
    path = tmp_path / "lex.json"
    path.write_text(json.dumps({"CC": ["chief  complaint", "REASON FOR VISIT"]}))
    lex = load_lexicon(path)
    assert lex["CC"] == {"CHIEF COMPLAINT", "REASON FOR VISIT"}
    assert lex["HPI"] == frozenset()
    with pytest.raises(UnknownHeaderGroup):
        make_lexicon({"Allergies": ["ALLERGIES"]})
    assert "CURRENT MEDICATION" in make_lexicon(DEFAULT_LEXICON)["PastHistory"]


def test_segmentation_tables_count_events():
    text = "CHIEF COMPLAINT: chest pain\nHPI: fever and cough\n"
    gold = [Entity(Concept.CC, 17, 27, "d"), Entity(Concept.CC, 33, 38, "d"), Entity(Concept.CC, 43, 48, "d")]
    pred = [Entity(Concept.CC, 17, 27, "d", "predicted"), Entity(Concept.PastHistory, 43, 48, "d", "predicted"),
            Entity(Concept.CC, 44, 48, "d", "predicted")]
    doc = Document.build("d", text, gold, pred)
    tables = segmentation_tables({"d": doc}, classify_documents([doc]))
    # in: one EM; out: fever UD, cough RM and MM (two events for one gold)
    assert tables["CC"] == ContingencyTable(1, 1, 0, 2)
    assert tables["HPI"] == ContingencyTable(0, 0, 0, 0)
    res = segmentation_analysis({"d": doc}, classify_documents([doc]))
    assert res["HPI"].test is None and "skipped" in res["HPI"].note


def test_published_section_p_values():
    for model, rows in by_model(read_fixture("section_cells.csv")).items():
        tables = {r["group"]: ContingencyTable(*(int(r[k]) for k in ("em_rm_in", "em_rm_out", "mmud_in", "mmud_out")))
                  for r in rows}
        res = segmentation_from_tables(tables)
        for r in rows:
            got = res[r["group"]]
            assert abs(got.test.p_value - float(r["published_p"])) <= 0.002, (model, r["group"])
            uses_fisher = min(got.table.expected()) < 5
            assert (got.test.method == "fisher exact") == uses_fisher
        md = segmentation_markdown(res, model)
        assert "Fam. H." in md
