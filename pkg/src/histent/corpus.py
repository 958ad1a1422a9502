"""Notes, entities, tokens and sections, plus the interchange-format parsers.

Character offsets are the source of truth everywhere: ``start`` is inclusive,
``end`` exclusive, both 0-based into ``Document.text``.

Three formats are read:

* standoff JSON (canonical; one object per document, JSON-Lines for a corpus)
* brat ``.txt``/``.ann`` pairs
* HTML produced by a generative model, with ``<span class="...">`` markup
"""
from __future__ import annotations

import bisect
import html
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .errors import (
    MalformedInput,
    NestedTag,
    OffsetOutOfRange,
    SurfaceMismatch,
    UnclosedTag,
    UnknownClass,
    UnknownConcept,
)


class Concept(Enum):
    """The 12 medical history entity (MHE) labels."""

    CC = "cc"
    HpiLocation = "hpi_location"
    HpiQuality = "hpi_quality"
    HpiSeverity = "hpi_severity"
    HpiDuration = "hpi_duration"
    HpiTiming = "hpi_timing"
    HpiContext = "hpi_context"
    HpiModifyingFactor = "hpi_modifying_factor"
    HpiAssocSignsSymptoms = "hpi_assoc_signs_symptoms"
    PastHistory = "past_history"
    FamilyHistory = "family_history"
    SocialHistory = "social_history"

    @property
    def is_hpi(self):
        return self.name.startswith("Hpi")


class BmeConcept(Enum):
    """Basic medical entity labels from an external extractor, in feature order."""

    Problem = "problem"
    Test = "test"
    Treatment = "treatment"
    Drug = "drug"
    BodyLocation = "body_location"
    Severity = "severity"
    Temporal = "temporal"

    @property
    def group(self):
        return 1 if self in _BME_GROUP_1 else 2


_BME_GROUP_1 = frozenset(
    [BmeConcept.Problem, BmeConcept.Test, BmeConcept.Treatment, BmeConcept.Drug]
)

MHE_CONCEPTS: tuple[Concept, ...] = tuple(Concept)
BME_CONCEPTS: tuple[BmeConcept, ...] = tuple(BmeConcept)

_BY_WIRE_NAME = {c.value: c for c in MHE_CONCEPTS}
_BY_WIRE_NAME.update({c.value: c for c in BME_CONCEPTS})

# class names used in the markup prompt
GPT_CLASSES = {
    "cc": Concept.CC,
    "hpi.location": Concept.HpiLocation,
    "hpi.quality": Concept.HpiQuality,
    "hpi.severity": Concept.HpiSeverity,
    "hpi.duration": Concept.HpiDuration,
    "hpi.timing": Concept.HpiTiming,
    "hpi.context": Concept.HpiContext,
    "hpi.modifyingFactors": Concept.HpiModifyingFactor,
    "hpi.assocSignsAndSymptoms": Concept.HpiAssocSignsSymptoms,
    "pastHistory": Concept.PastHistory,
    "familyHistory": Concept.FamilyHistory,
    "socialHistory": Concept.SocialHistory,
}
_GPT_CLASS_OF = {v: k for k, v in GPT_CLASSES.items()}


def concept_from_name(name: str):
    """Resolve a wire name (``past_history``) or member name (``PastHistory``)."""
    if name in _BY_WIRE_NAME:
        return _BY_WIRE_NAME[name]
    for enum in (Concept, BmeConcept):
        if name in enum.__members__:
            return enum[name]
    raise UnknownConcept(f"unknown concept {name!r}")


@dataclass(frozen=True)
class Entity:
    concept: Concept | BmeConcept
    start: int
    end: int
    doc_id: str = ""
    source: str = "gold"

    @property
    def key(self):
        return (self.concept, self.start, self.end)

    @property
    def is_mhe(self):
        return isinstance(self.concept, Concept)

    def overlaps(self, other: "Entity") -> bool:
        return self.start < other.end and other.start < self.end

    def surface(self, text: str) -> str:
        return text[self.start : self.end]


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    index: int


@dataclass(frozen=True)
class Section:
    header: str
    header_start: int
    body_start: int
    body_end: int

    def contains(self, offset: int) -> bool:
        return self.header_start <= offset < self.body_end


@dataclass
class Document:
    doc_id: str
    text: str
    gold: list[Entity] = field(default_factory=list)
    predicted: list[Entity] = field(default_factory=list)
    tokens: list[Token] = field(default_factory=list)
    sections: list[Section] = field(default_factory=list)

    @classmethod
    def build(cls, doc_id, text, gold=(), predicted=(), header_pattern=None):
        doc = cls(doc_id, text, list(gold), list(predicted))
        doc.tokens = tokenize(text)
        doc.sections = sectionize(text, header_pattern)
        doc.validate()
        return doc

    def validate(self):
        n = len(self.text)
        for ent in (*self.gold, *self.predicted):
            if not 0 <= ent.start < ent.end <= n:
                raise OffsetOutOfRange(
                    f"{self.doc_id}: span [{ent.start},{ent.end}) outside text of length {n}"
                )

    def covering_tokens(self, start: int, end: int) -> range:
        """Indices of every token overlapping [start, end)."""
        ends = [t.end for t in self.tokens]
        lo = bisect.bisect_right(ends, start)
        hi = lo
        while hi < len(self.tokens) and self.tokens[hi].start < end:
            hi += 1
        return range(lo, hi)

    def section_at(self, offset: int) -> Section | None:
        for sec in self.sections:
            if sec.contains(offset):
                return sec
        return None

    def sentences(self) -> list[range]:
        return sentence_spans(self.text, self.tokens)


# ---------------------------------------------------------------- tokens

_TOKEN_RE = re.compile(r"[^\W_]+|\S")


def tokenize(text: str) -> list[Token]:
    """Runs of letters/digits are one token, any other non-space char is its own."""
    return [
        Token(m.group(), m.start(), m.end(), i)
        for i, m in enumerate(_TOKEN_RE.finditer(text))
    ]


def sentence_spans(text: str, tokens: Sequence[Token]) -> list[range]:
    """Token index ranges split at newlines and at '.' followed by whitespace."""
    spans = []
    first = 0
    for i, tok in enumerate(tokens):
        nxt = tokens[i + 1].start if i + 1 < len(tokens) else len(text)
        gap = text[tok.end : nxt]
        at_end = i + 1 == len(tokens)
        if at_end or "\n" in gap or (tok.text == "." and (gap or at_end)):
            spans.append(range(first, i + 1))
            first = i + 1
    return spans


# ---------------------------------------------------------------- sections

HEADER_PATTERN = re.compile(r"^(?=[A-Z0-9 &/,\-]*[A-Z])([A-Z0-9&/,\-][A-Z0-9 &/,\-]+):", re.M)


def normalize_header(header: str) -> str:
    return " ".join(header.upper().split())


def sectionize(text: str, header_pattern=None) -> list[Section]:
    """Split a note at line-initial ALL-CAPS headers that end in a colon.

    Text before the first header becomes a section with an empty header.
    """
    pattern = header_pattern or HEADER_PATTERN
    if isinstance(pattern, str):
        pattern = re.compile(pattern, re.M)
    heads = [(m.start(), m.end(), normalize_header(m.group(1))) for m in pattern.finditer(text)]
    sections = []
    if not heads:
        return [Section("", 0, 0, len(text))] if text else []
    if heads[0][0] > 0:
        sections.append(Section("", 0, 0, heads[0][0]))
    for i, (hs, be, name) in enumerate(heads):
        body_end = heads[i + 1][0] if i + 1 < len(heads) else len(text)
        sections.append(Section(name, hs, be, body_end))
    return sections


# ---------------------------------------------------------------- standoff JSON


def _line_col(data: str, offset: int):
    line = data.count("\n", 0, offset) + 1
    col = offset - (data.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _entities_from_json(items, doc_id, source, text_len):
    if not isinstance(items, list):
        raise MalformedInput(f"{doc_id}: '{source}' must be an array")
    out = []
    for item in items:
        try:
            concept = concept_from_name(item["concept"])
            start, end = item["start"], item["end"]
        except (KeyError, TypeError) as exc:
            raise MalformedInput(f"{doc_id}: bad entity {item!r}") from exc
        if not (isinstance(start, int) and isinstance(end, int)):
            raise MalformedInput(f"{doc_id}: offsets must be integers in {item!r}")
        if not 0 <= start < end <= text_len:
            raise OffsetOutOfRange(
                f"{doc_id}: span [{start},{end}) outside text of length {text_len}"
            )
        out.append(Entity(concept, start, end, doc_id, source))
    return out


def document_from_obj(obj, header_pattern=None) -> Document:
    if not isinstance(obj, dict):
        raise MalformedInput("document must be a JSON object")
    try:
        doc_id, text = obj["doc_id"], obj["text"]
    except KeyError as exc:
        raise MalformedInput(f"missing field {exc.args[0]!r}") from exc
    if not isinstance(doc_id, str) or not isinstance(text, str):
        raise MalformedInput("'doc_id' and 'text' must be strings")
    gold = _entities_from_json(obj.get("gold", []), doc_id, "gold", len(text))
    pred = _entities_from_json(obj.get("predicted", []), doc_id, "predicted", len(text))
    return Document.build(doc_id, text, gold, pred, header_pattern)


def parse_standoff_json(data: bytes | str, header_pattern=None) -> Document:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedInput(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return document_from_obj(obj, header_pattern)


def _entity_obj(ent: Entity):
    return {"concept": ent.concept.value, "start": ent.start, "end": ent.end}


def _sorted(ents: Iterable[Entity]):
    return sorted(ents, key=lambda e: (e.start, e.end, e.concept.value))


def document_to_obj(doc: Document):
    return {
        "doc_id": doc.doc_id,
        "text": doc.text,
        "gold": [_entity_obj(e) for e in _sorted(doc.gold)],
        "predicted": [_entity_obj(e) for e in _sorted(doc.predicted)],
    }


def serialize_standoff_json(doc: Document) -> bytes:
    return json.dumps(document_to_obj(doc), ensure_ascii=False).encode("utf-8")


def canonicalize(data: bytes | str) -> bytes:
    """Fixed key order, entities sorted by (start, end, concept), compact UTF-8."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    obj = json.loads(data)
    out = {"doc_id": obj["doc_id"], "text": obj["text"]}
    for key in ("gold", "predicted"):
        items = [
            {"concept": it["concept"], "start": it["start"], "end": it["end"]}
            for it in obj.get(key, [])
        ]
        out[key] = sorted(items, key=lambda it: (it["start"], it["end"], it["concept"]))
    return json.dumps(out, ensure_ascii=False).encode("utf-8")


def iter_corpus(path, header_pattern=None) -> Iterator[Document]:
    """Read a JSON-Lines corpus; errors carry the 1-based line number."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedInput(exc.msg, line=lineno, column=exc.colno, source=path) from exc
            try:
                yield document_from_obj(obj, header_pattern)
            except (MalformedInput, OffsetOutOfRange, UnknownConcept) as exc:
                exc.line, exc.source = lineno, path
                raise


def read_corpus(path, header_pattern=None) -> list[Document]:
    return list(iter_corpus(path, header_pattern))


def write_corpus(path, docs: Iterable[Document]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in sorted(docs, key=lambda d: d.doc_id):
            fh.write(serialize_standoff_json(doc).decode("utf-8"))
            fh.write("\n")


# ---------------------------------------------------------------- brat

_BRAT_SPAN = re.compile(r"^(\S+) (\d+ \d+(?:;\d+ \d+)*)$")


def default_label_map():
    labels = {}
    for enum in (Concept, BmeConcept):
        for c in enum:
            labels[c.name] = c
            labels[c.value] = c
            labels[c.name.lower()] = c
    return labels


def parse_brat(text: str, ann: str, label_map=None, doc_id="", source="gold") -> list[Entity]:
    """Read text-bound (``T``) annotations; other record kinds are skipped.

    Discontinuous spans are coalesced to their outer bounds; their surface
    text is checked fragment by fragment.
    """
    labels = label_map if label_map is not None else default_label_map()
    out = []
    for lineno, line in enumerate(ann.splitlines(), 1):
        if not line.startswith("T"):
            continue
        parts = line.split("\t")
        if len(parts) < 3:
            raise MalformedInput(f"expected 3 tab-separated fields, got {len(parts)}", line=lineno)
        m = _BRAT_SPAN.match(parts[1])
        if m is None:
            raise MalformedInput(f"bad span field {parts[1]!r}", line=lineno)
        label = m.group(1)
        if label not in labels:
            raise UnknownConcept(f"unknown label {label!r}", line=lineno)
        frags = [tuple(map(int, f.split())) for f in m.group(2).split(";")]
        surface = parts[2]
        for s, e in frags:
            if not 0 <= s < e <= len(text):
                raise OffsetOutOfRange(f"span [{s},{e}) outside text", line=lineno)
        got = " ".join(text[s:e] for s, e in frags)
        if got != surface:
            raise SurfaceMismatch(f"offsets give {got!r} but annotation says {surface!r}", line=lineno)
        out.append(Entity(labels[label], frags[0][0], frags[-1][1], doc_id, source))
    return out


def emit_brat(entities: Iterable[Entity], text: str) -> str:
    lines = []
    for i, ent in enumerate(_sorted(entities), 1):
        lines.append(f"T{i}\t{ent.concept.name} {ent.start} {ent.end}\t{ent.surface(text)}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------- GPT html

_SPAN_TAG = re.compile(r"<\s*(/?)\s*span\b([^>]*)>", re.I)
_CLASS_ATTR = re.compile(r"""\bclass\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s"'>]+))""", re.I)


def parse_gpt_html(marked: str, doc_id="", source="predicted") -> tuple[str, list[Entity]]:
    """Strip span tags and return (plain_text, entities with offsets into it)."""
    pieces = []
    entities = []
    plain_len = 0
    pos = 0
    open_at = None  # (plain offset, concept, raw offset)
    for m in _SPAN_TAG.finditer(marked):
        chunk = marked[pos : m.start()]
        pieces.append(chunk)
        plain_len += len(chunk)
        pos = m.end()
        closing = m.group(1) == "/"
        line, col = _line_col(marked, m.start())
        if not closing:
            if open_at is not None:
                raise NestedTag("span opened inside another span", line=line, column=col)
            cm = _CLASS_ATTR.search(m.group(2))
            cls = next((g for g in cm.groups() if g is not None), None) if cm else None
            if cls not in GPT_CLASSES:
                raise UnknownClass(f"unknown entity class {cls!r}", line=line, column=col)
            open_at = (plain_len, GPT_CLASSES[cls], m.start())
        else:
            if open_at is None:
                raise MalformedInput("closing </span> without an opening tag", line=line, column=col)
            start, concept, _ = open_at
            if plain_len > start:
                entities.append(Entity(concept, start, plain_len, doc_id, source))
            open_at = None
    if open_at is not None:
        line, col = _line_col(marked, open_at[2])
        raise UnclosedTag("span is never closed", line=line, column=col)
    pieces.append(marked[pos:])
    return "".join(pieces), entities


def render_gpt_html(text: str, entities: Iterable[Entity]) -> str:
    """Inverse of :func:`parse_gpt_html` for non-overlapping MHE entities."""
    out = []
    pos = 0
    for ent in _sorted(entities):
        out.append(text[pos : ent.start])
        cls = html.escape(_GPT_CLASS_OF[ent.concept], quote=True)
        out.append(f'<span class="{cls}">{text[ent.start:ent.end]}</span>')
        pos = ent.end
    out.append(text[pos:])
    return "".join(out)
