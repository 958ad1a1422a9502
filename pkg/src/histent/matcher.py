"""Five-way classification of gold/prediction span relationships.

Per gold entity exactly one of {ExactMatch, RelaxedMatch, UnderDetection}
is counted, except a gold whose only overlaps are wrong-concept predictions
(Mismatch only). A non-exact gold overlapped by any wrong-concept
prediction also counts one Mismatch, so RelaxedMatch and Mismatch can
co-occur and category sums may exceed the number of gold entities.
A prediction overlapping no gold at all is one OverDetection.
"""
from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .corpus import Entity
from .errors import CrossDocumentEntity, InstanceTooLarge, MissingTotal


class MatchCategory(Enum):
    ExactMatch = "em"
    RelaxedMatch = "rm"
    Mismatch = "mm"
    UnderDetection = "ud"
    OverDetection = "od"


EM, RM, MM, UD, OD = MatchCategory
CATEGORIES = (EM, RM, MM, UD, OD)
ERROR = frozenset([MM, UD, OD])
MMUD = frozenset([MM, UD])

# columns in the order rate tables print them
COLUMNS = ("EM", "RM", "MM", "UD", "OD", "MMUD", "Error", "RM+Error")


@dataclass(frozen=True)
class MatchDetail:
    """One counted event. ``entity`` is the gold span, or the prediction for OD."""

    category: MatchCategory
    entity: Entity

    @property
    def concept(self):
        return self.entity.concept


@dataclass
class MatchReport:
    details: list[MatchDetail] = field(default_factory=list)
    duplicates: int = 0

    def counts(self) -> dict[tuple[str, object], Counter]:
        out: dict[tuple[str, object], Counter] = defaultdict(Counter)
        for d in self.details:
            out[(d.entity.doc_id, d.concept)][d.category] += 1
        return dict(out)

    def totals(self) -> Counter:
        return Counter(d.category for d in self.details)

    def by_concept(self) -> dict[object, Counter]:
        out: dict[object, Counter] = defaultdict(Counter)
        for d in self.details:
            out[d.concept][d.category] += 1
        return dict(out)

    def by_doc(self) -> dict[str, Counter]:
        out: dict[str, Counter] = defaultdict(Counter)
        for d in self.details:
            out[d.entity.doc_id][d.category] += 1
        return dict(out)

    @classmethod
    def merge(cls, reports: Iterable["MatchReport"]) -> "MatchReport":
        merged = cls()
        for r in reports:
            merged.details.extend(r.details)
            merged.duplicates += r.duplicates
        return merged

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["doc_id", "concept", "em", "rm", "mm", "ud", "od"])
        counts = self.counts()
        for (doc_id, concept) in sorted(counts, key=lambda k: (k[0], k[1].value)):
            c = counts[(doc_id, concept)]
            w.writerow([doc_id, concept.value, *(c[cat] for cat in CATEGORIES)])
        return buf.getvalue()


def _doc_id_of(gold, pred):
    ids = {e.doc_id for e in gold} | {e.doc_id for e in pred}
    if len(ids) > 1:
        raise CrossDocumentEntity(f"entities from several documents: {sorted(ids)}")
    return ids.pop() if ids else ""


def _dedupe(pred):
    seen = {}
    for p in pred:
        seen.setdefault(p.key, p)
    return list(seen.values()), len(pred) - len(seen)


def _overlap_pairs(gold: Sequence[Entity], pred: Sequence[Entity]):
    """Sweep over start offsets; yields (gold index, pred index) for each overlap."""
    events = sorted(
        [(g.start, 0, i) for i, g in enumerate(gold)] + [(p.start, 1, j) for j, p in enumerate(pred)]
    )
    active = ([], [])
    spans = (gold, pred)
    for start, kind, idx in events:
        for k in (0, 1):
            active[k][:] = [i for i in active[k] if spans[k][i].end > start]
        for other in active[1 - kind]:
            yield (idx, other) if kind == 0 else (other, idx)
        active[kind].append(idx)


def _categorize(gold, pred, pairs) -> list[MatchDetail]:
    gold_hits = defaultdict(list)
    pred_hit = [False] * len(pred)
    for gi, pj in pairs:
        gold_hits[gi].append(pred[pj])
        pred_hit[pj] = True
    details = []
    for gi, g in enumerate(gold):
        hits = gold_hits.get(gi, [])
        if not hits:
            details.append(MatchDetail(UD, g))
            continue
        same = [p for p in hits if p.concept == g.concept]
        if any(p.start == g.start and p.end == g.end for p in same):
            details.append(MatchDetail(EM, g))
            continue
        if same:
            details.append(MatchDetail(RM, g))
        if len(same) < len(hits):
            details.append(MatchDetail(MM, g))
    for pj, p in enumerate(pred):
        if not pred_hit[pj]:
            details.append(MatchDetail(OD, p))
    return details


def classify(gold: Sequence[Entity], pred: Sequence[Entity]) -> MatchReport:
    """Classify one document's predictions against its gold entities."""
    _doc_id_of(gold, pred)
    pred, dups = _dedupe(list(pred))
    gold = list(gold)
    details = _categorize(gold, pred, _overlap_pairs(gold, pred))
    return MatchReport(details, dups)


def classify_documents(docs) -> MatchReport:
    """Merged report over documents; BME entities mixed into gold are ignored."""
    return MatchReport.merge(
        classify([e for e in d.gold if e.is_mhe], [e for e in d.predicted if e.is_mhe])
        for d in docs
    )


MAX_ORACLE_ENTITIES = 8
MAX_ORACLE_LENGTH = 64


def brute_force_oracle(gold, pred, doc_length=None) -> MatchReport:
    """Same rule as :func:`classify`, by character-set double loops. Test use only."""
    gold, pred = list(gold), list(pred)
    if len(gold) > MAX_ORACLE_ENTITIES or len(pred) > MAX_ORACLE_ENTITIES:
        raise InstanceTooLarge("oracle takes at most 8 gold and 8 predicted entities")
    length = doc_length if doc_length is not None else max([e.end for e in gold + pred], default=0)
    if length > MAX_ORACLE_LENGTH or any(e.end > length for e in gold + pred):
        raise InstanceTooLarge("oracle documents are at most 64 characters")
    ids = set()
    for e in gold + pred:
        ids.add(e.doc_id)
    if len(ids) > 1:
        raise CrossDocumentEntity("entities from several documents")

    unique = []
    for p in pred:
        dup = False
        for q in unique:
            if q.concept == p.concept and q.start == p.start and q.end == p.end:
                dup = True
        if not dup:
            unique.append(p)

    def chars(e):
        return set(range(e.start, e.end))

    details = []
    for g in gold:
        exact = relaxed = wrong = 0
        for p in unique:
            if chars(g) & chars(p):
                if p.concept == g.concept:
                    if p.start == g.start and p.end == g.end:
                        exact += 1
                    else:
                        relaxed += 1
                else:
                    wrong += 1
        if exact:
            details.append(MatchDetail(EM, g))
        else:
            if relaxed:
                details.append(MatchDetail(RM, g))
            if wrong:
                details.append(MatchDetail(MM, g))
            if not relaxed and not wrong:
                details.append(MatchDetail(UD, g))
    for p in unique:
        touched = False
        for g in gold:
            if chars(g) & chars(p):
                touched = True
        if not touched:
            details.append(MatchDetail(OD, p))
    return MatchReport(details, len(pred) - len(unique))


# ---------------------------------------------------------------- rate tables


def percent(count: int, total: int) -> str:
    """count/total as a percentage, rounded half-up to one decimal."""
    if total <= 0:
        raise ValueError("total must be positive")
    tenths = Fraction(count * 1000, total) + Fraction(1, 2)
    n = tenths.numerator // tenths.denominator
    return f"{n // 10}.{n % 10}"


@dataclass(frozen=True)
class RateRow:
    label: str
    total: int
    em: int
    rm: int
    mm: int
    ud: int
    od: int

    @property
    def mmud(self):
        return self.mm + self.ud

    @property
    def error(self):
        return self.mm + self.ud + self.od

    @property
    def rm_plus_error(self):
        return self.rm + self.error

    def count(self, column: str) -> int:
        return {
            "EM": self.em, "RM": self.rm, "MM": self.mm, "UD": self.ud, "OD": self.od,
            "MMUD": self.mmud, "Error": self.error, "RM+Error": self.rm_plus_error,
        }[column]

    def rate(self, column: str) -> Fraction:
        return Fraction(self.count(column), self.total)

    def cell(self, column: str) -> str:
        return f"{self.count(column)} ({percent(self.count(column), self.total)}%)"


@dataclass
class RateTable:
    rows: list[RateRow]
    total: RateRow

    @classmethod
    def from_rows(cls, rows: Sequence[RateRow], total_label="Total"):
        rows = list(rows)
        total = RateRow(
            total_label,
            sum(r.total for r in rows),
            *(sum(getattr(r, f) for r in rows) for f in ("em", "rm", "mm", "ud", "od")),
        )
        return cls(rows, total)

    def all_rows(self):
        return [*self.rows, self.total]

    def to_markdown(self) -> str:
        head = "| Entity | Count | " + " | ".join(COLUMNS) + " |"
        sep = "|" + "---|" * (len(COLUMNS) + 2)
        lines = [head, sep]
        for r in self.all_rows():
            lines.append(f"| {r.label} | {r.total} | " + " | ".join(r.cell(c) for c in COLUMNS) + " |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["entity", "count"]
        for c in COLUMNS:
            header += [c.lower().replace("+", "_plus_"), f"{c.lower().replace('+', '_plus_')}_pct"]
        w.writerow(header)
        for r in self.all_rows():
            row = [r.label, r.total]
            for c in COLUMNS:
                row += [r.count(c), percent(r.count(c), r.total)]
            w.writerow(row)
        return buf.getvalue()


def aggregate(reports: Iterable[MatchReport], gold_totals: Mapping) -> RateTable:
    """Per-concept and Total rows; rates are counts over gold annotations."""
    merged = MatchReport.merge(reports)
    by_concept = merged.by_concept()
    missing = [c for c in by_concept if c not in gold_totals]
    if missing:
        raise MissingTotal(f"no gold total for {sorted(c.name for c in missing)}")
    concepts = sorted(gold_totals, key=lambda c: list(type(c)).index(c))
    rows = []
    for c in concepts:
        counts = by_concept.get(c, Counter())
        rows.append(RateRow(c.name, gold_totals[c], *(counts[cat] for cat in CATEGORIES)))
    return RateTable.from_rows(rows)


def gold_totals(docs) -> Counter:
    return Counter(e.concept for d in docs for e in d.gold if e.is_mhe)
