"""Error-association pipelines: entity length, note length and sectionization."""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Concept, Document, Entity, normalize_header
from .errors import EmptyCategory, UnknownHeaderGroup, ZeroVariance
from .matcher import CATEGORIES, COLUMNS, EM, OD, RM, MatchCategory, MatchReport
from .stats import (
    ContingencyTable,
    SummarySample,
    TestResult,
    pearson,
    select_2x2_test,
    welch_t_test,
)

ALPHA = 0.05

CATEGORY_LABELS = {
    MatchCategory.ExactMatch: "Exact Match",
    MatchCategory.RelaxedMatch: "Relaxed Match",
    MatchCategory.Mismatch: "Mismatch",
    MatchCategory.UnderDetection: "Under Detection",
    MatchCategory.OverDetection: "Over Detection",
}


def format_p(p: float | None) -> str:
    if p is None:
        return "n/a"
    return "<0.001" if p < 0.001 else f"{p:.3f}"


def _mark(p):
    return "*" if p is not None and p < ALPHA else ""


# ---------------------------------------------------------------- entity length


@dataclass(frozen=True)
class LengthRecord:
    category: MatchCategory
    entity_token_length: int

    def __post_init__(self):
        if self.entity_token_length < 1:
            raise ValueError("entity length must be at least one token")


def length_records(report: MatchReport, docs: Mapping[str, Document]) -> list[LengthRecord]:
    """Token length of the gold span per event (the predicted span for OD)."""
    out = []
    for d in report.details:
        doc = docs[d.entity.doc_id]
        n = len(doc.covering_tokens(d.entity.start, d.entity.end))
        if n:
            out.append(LengthRecord(d.category, n))
    return out


@dataclass
class LengthAnalysis:
    summaries: dict[MatchCategory, SummarySample]
    tests: dict[MatchCategory, TestResult]
    skipped: dict[MatchCategory, str] = field(default_factory=dict)

    def rows(self):
        for cat in CATEGORIES:
            s = self.summaries.get(cat)
            if cat is EM:
                yield cat, s, "reference"
            elif cat in self.tests:
                yield cat, s, format_p(self.tests[cat].p_value)
            else:
                yield cat, s, f"skipped ({self.skipped.get(cat, 'no data')})"

    def to_markdown(self, title=None):
        lines = [f"### {title}", ""] if title else []
        lines += ["| Category | n | Avg | SD | p-value |", "|---|---|---|---|---|"]
        for cat, s, p in self.rows():
            if s is None:
                lines.append(f"| {CATEGORY_LABELS[cat]} | 0 | | | {p} |")
            else:
                sig = _mark(self.tests[cat].p_value) if cat in self.tests else ""
                lines.append(f"| {CATEGORY_LABELS[cat]} | {s.n} | {s.mean:.3f} | {s.sd:.3f} | {p}{sig} |")
        return "\n".join(lines) + "\n"

    def csv_rows(self, model=""):
        for cat, s, _ in self.rows():
            t = self.tests.get(cat)
            yield [model, cat.value,
                   s.n if s else 0, _fmt(s.mean if s else None), _fmt(s.sd if s else None),
                   _fmt(t.statistic if t else None), _fmt(t.df if t else None),
                   _fmt(t.p_value if t else None), self.skipped.get(cat, "")]


LENGTH_CSV_HEADER = ["model", "category", "n", "mean", "sd", "t", "df", "p_value", "note"]


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def length_analysis_from_summaries(summaries: Mapping[MatchCategory, SummarySample]) -> LengthAnalysis:
    """Welch test of every non-exact category against ExactMatch."""
    summaries = dict(summaries)
    tests, skipped = {}, {}
    ref = summaries.get(EM)
    for cat in CATEGORIES[1:]:
        s = summaries.get(cat)
        if ref is None or ref.n < 2:
            skipped[cat] = "reference category has fewer than 2 entities"
        elif s is None or s.n < 2:
            skipped[cat] = "fewer than 2 entities"
        else:
            tests[cat] = welch_t_test(s, ref)
    return LengthAnalysis(summaries, tests, skipped)


def entity_length_analysis(records: Iterable[LengthRecord], strict=False) -> LengthAnalysis:
    """Summaries per category and Welch tests against ExactMatch.

    Empty or singleton categories are skipped and reported; with
    ``strict`` they raise :class:`EmptyCategory` instead.
    """
    values = defaultdict(list)
    for r in records:
        values[r.category].append(r.entity_token_length)
    summaries = {cat: SummarySample.of(v) for cat, v in values.items() if v}
    result = length_analysis_from_summaries(summaries)
    if strict and result.skipped:
        cat, why = next(iter(result.skipped.items()))
        raise EmptyCategory(f"{cat.name}: {why}")
    return result


# ---------------------------------------------------------------- note length


@dataclass(frozen=True)
class NoteRecord:
    doc_id: str
    gold_count: int
    word_count: int
    em: int = 0
    rm: int = 0
    mm: int = 0
    ud: int = 0
    od: int = 0

    @property
    def error_count(self):
        return self.mm + self.ud + self.od

    @property
    def error_rate(self):
        return self.error_count / self.gold_count

    def count(self, column: str) -> int:
        return {
            "EM": self.em, "RM": self.rm, "MM": self.mm, "UD": self.ud, "OD": self.od,
            "MMUD": self.mm + self.ud, "Error": self.error_count,
            "RM+Error": self.rm + self.error_count,
        }[column]

    def rate(self, column: str) -> float:
        return self.count(column) / self.gold_count


def note_records(report: MatchReport, docs: Iterable[Document]) -> list[NoteRecord]:
    by_doc = report.by_doc()
    out = []
    for doc in sorted(docs, key=lambda d: d.doc_id):
        c = by_doc.get(doc.doc_id, {})
        gold = sum(1 for e in doc.gold if e.is_mhe)
        out.append(NoteRecord(doc.doc_id, gold, len(doc.tokens),
                              *(c.get(cat, 0) for cat in CATEGORIES)))
    return out


@dataclass
class NoteLengthAnalysis:
    counts: dict[str, TestResult | None]
    rates: dict[str, TestResult | None]
    n_notes: int
    notes: list[NoteRecord] = field(default_factory=list, repr=False)

    def to_markdown(self, title=None):
        lines = [f"### {title}", ""] if title else []
        lines.append("| | " + " | ".join(COLUMNS) + " |")
        lines.append("|---|" + "---|" * len(COLUMNS))
        for label, block in (("counts", self.counts), ("rates", self.rates)):
            lines.append(f"| Correlation on {label} | "
                         + " | ".join(f"{block[c].statistic:.5f}" if block[c] else "n/a" for c in COLUMNS) + " |")
            lines.append(f"| p-value on {label} | "
                         + " | ".join(f"{block[c].p_value:.5f}{_mark(block[c].p_value)}" if block[c] else "n/a"
                                      for c in COLUMNS) + " |")
        return "\n".join(lines) + "\n"

    def csv_rows(self, model=""):
        for label, block in (("counts", self.counts), ("rates", self.rates)):
            for c in COLUMNS:
                t = block[c]
                yield [model, label, c, _fmt(t.statistic if t else None), _fmt(t.p_value if t else None),
                       self.n_notes]


NOTES_CSV_HEADER = ["model", "on", "measure", "r", "p_value", "n"]


def note_length_analysis(notes: Sequence[NoteRecord]) -> NoteLengthAnalysis:
    """Pearson correlation of word count with each count and rate column.

    A constant measure column yields ``None`` for that cell; a constant
    word count raises :class:`ZeroVariance`.
    """
    notes = list(notes)
    if len(notes) < 3:
        raise ValueError("need at least 3 notes")
    words = [n.word_count for n in notes]
    if len(set(words)) == 1:
        raise ZeroVariance("every note has the same word count")
    rated = [n for n in notes if n.gold_count > 0]
    rated_words = [n.word_count for n in rated]
    counts, rates = {}, {}
    for col in COLUMNS:
        counts[col] = _maybe_pearson(words, [n.count(col) for n in notes])
        rates[col] = _maybe_pearson(rated_words, [n.rate(col) for n in rated]) if len(rated) >= 3 else None
    return NoteLengthAnalysis(counts, rates, len(notes), notes)


def _maybe_pearson(x, y):
    try:
        return pearson(x, y)
    except ZeroVariance:
        return None


# ---------------------------------------------------------------- sectionization

GROUPS = ("CC", "HPI", "PastHistory", "FamilyHistory", "SocialHistory")
GROUP_LABELS = {"CC": "CC", "HPI": "HPI", "PastHistory": "Past H.",
                "FamilyHistory": "Fam. H.", "SocialHistory": "Social H."}

DEFAULT_LEXICON = {
    "CC": ["CHIEF COMPLAINT"],
    "HPI": ["HISTORY OF PRESENT ILLNESS", "BRIEF HISTORY OF PRESENT ILLNESS", "SUBJECTIVE"],
    "PastHistory": ["PAST MEDICAL HISTORY", "PAST SURGICAL HISTORY", "MEDICATIONS",
                    "CURRENT MEDICATION", "CURRENT MEDICATIONS", "ALLERGIES"],
    "FamilyHistory": ["FAMILY HISTORY"],
    "SocialHistory": ["SOCIAL HISTORY"],
}


def group_of(concept: Concept) -> str:
    if concept.is_hpi:
        return "HPI"
    return concept.name


def make_lexicon(mapping: Mapping[str, Iterable[str]] | None = None) -> dict[str, frozenset[str]]:
    """Normalize a group -> headers mapping; groups left out get no headers."""
    mapping = DEFAULT_LEXICON if mapping is None else mapping
    unknown = [g for g in mapping if g not in GROUPS]
    if unknown:
        raise UnknownHeaderGroup(f"unknown header group(s) {unknown}; expected {list(GROUPS)}")
    return {g: frozenset(normalize_header(h) for h in mapping.get(g, ())) for g in GROUPS}


def load_lexicon(path) -> dict[str, frozenset[str]]:
    with open(path, encoding="utf-8") as fh:
        return make_lexicon(json.load(fh))


@dataclass(frozen=True)
class SectionPlacement:
    entity: Entity
    in_dedicated_section: bool
    group: str


def place(entity: Entity, doc: Document, lexicon: Mapping[str, frozenset[str]]) -> SectionPlacement:
    """Is the entity inside a section whose header belongs to its concept group?"""
    group = group_of(entity.concept)
    sec = doc.section_at(entity.start)
    inside = sec is not None and sec.header in lexicon[group]
    return SectionPlacement(entity, inside, group)


@dataclass
class SegmentationResult:
    group: str
    table: ContingencyTable
    test: TestResult | None
    note: str = ""


def segmentation_from_tables(tables: Mapping[str, ContingencyTable]) -> dict[str, SegmentationResult]:
    out = {}
    for group, table in tables.items():
        try:
            out[group] = SegmentationResult(group, table, select_2x2_test(table))
        except Exception as exc:  # EmptyMargin and friends end up in the report
            out[group] = SegmentationResult(group, table, None, f"skipped: {exc}")
    return out


def segmentation_tables(docs: Mapping[str, Document], report: MatchReport,
                        lexicon=None) -> dict[str, ContingencyTable]:
    """Count EM/RM and MM/UD events inside vs outside dedicated sections.

    OverDetections have no gold entity and are left out.
    """
    lexicon = make_lexicon() if lexicon is None else lexicon
    cells = {g: [0, 0, 0, 0] for g in GROUPS}
    for d in report.details:
        if d.category is OD or not d.entity.is_mhe:
            continue
        p = place(d.entity, docs[d.entity.doc_id], lexicon)
        row = 0 if d.category in (EM, RM) else 2
        cells[p.group][row + (0 if p.in_dedicated_section else 1)] += 1
    return {g: ContingencyTable(*c) for g, c in cells.items()}


def segmentation_analysis(docs: Mapping[str, Document], report: MatchReport,
                          lexicon=None) -> dict[str, SegmentationResult]:
    return segmentation_from_tables(segmentation_tables(docs, report, lexicon))


SECTIONS_CSV_HEADER = ["model", "group", "em_rm_in", "em_rm_out", "mmud_in", "mmud_out",
                       "method", "statistic", "p_value", "note"]


def segmentation_csv_rows(results: Mapping[str, SegmentationResult], model=""):
    for g, r in results.items():
        t = r.table
        yield [model, g, t.a, t.b, t.c, t.d, r.test.method if r.test else "",
               _fmt(r.test.statistic if r.test else None), _fmt(r.test.p_value if r.test else None), r.note]


def segmentation_markdown(results: Mapping[str, SegmentationResult], title=None) -> str:
    lines = [f"### {title}", ""] if title else []
    lines += ["| Entity | Match | In | Out | p-value | Test |", "|---|---|---|---|---|---|"]
    for g, r in results.items():
        t = r.table
        p = f"{r.test.p_value:.3f}{_mark(r.test.p_value)}" if r.test else r.note
        label = GROUP_LABELS.get(g, g)
        lines.append(f"| {label} | EM+RM | {t.a} | {t.b} | {p} | {r.test.method if r.test else ''} |")
        lines.append(f"| | MMUD | {t.c} | {t.d} | | |")
    return "\n".join(lines) + "\n"


def write_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()

