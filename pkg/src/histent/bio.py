"""BIO (IOB2) encoding of MHE spans and the BME multi-hot feature rows."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import BME_CONCEPTS, MHE_CONCEPTS, BmeConcept, Concept, Document, Entity
from .errors import LengthMismatch, OverlappingEntities

log = logging.getLogger(__name__)

OUTSIDE = "O"

# index 0 is O so that argmax ties resolve to "outside"
MHE_TAGS: tuple[str, ...] = (OUTSIDE,) + tuple(
    f"{p}-{c.name}" for c in MHE_CONCEPTS for p in ("B", "I")
)
BME_TAGS: tuple[str, ...] = (OUTSIDE,) + tuple(
    f"{p}-{c.name}" for c in BME_CONCEPTS for p in ("B", "I")
)
MHE_TAG_INDEX = {t: i for i, t in enumerate(MHE_TAGS)}
N_MHE_TAGS = len(MHE_TAGS)
N_BME_FEATURES = 2 * len(BME_CONCEPTS)


def split_tag(tag: str):
    """'B-CC' -> ('B', Concept.CC); 'O' -> ('O', None)."""
    if tag == OUTSIDE:
        return OUTSIDE, None
    prefix, _, name = tag.partition("-")
    if prefix not in ("B", "I") or name not in Concept.__members__:
        raise ValueError(f"not an MHE tag: {tag!r}")
    return prefix, Concept[name]


@dataclass(frozen=True)
class TagSequence:
    doc_id: str
    tags: tuple[str, ...]

    def __len__(self):
        return len(self.tags)

    def indices(self) -> np.ndarray:
        return np.array([MHE_TAG_INDEX[t] for t in self.tags], dtype=np.int64)

    def is_valid(self) -> bool:
        prev = OUTSIDE
        for tag in self.tags:
            if tag.startswith("I-") and prev[2:] != tag[2:]:
                return False
            prev = tag
        return True


def _token_runs(doc: Document, entities: Iterable[Entity]):
    runs = []
    for ent in entities:
        toks = doc.covering_tokens(ent.start, ent.end)
        if len(toks):
            runs.append((toks.start, toks.stop, ent))
    return sorted(runs, key=lambda r: (r[0], r[1]))


def encode_bio(doc: Document, entities: Iterable[Entity]) -> TagSequence:
    """Tag every token an entity overlaps: B on the first, I on the rest.

    Spans are snapped outward to whole tokens. Entities covering no token
    (pure whitespace) are dropped.
    """
    entities = [e for e in entities if e.is_mhe]
    tags = [OUTSIDE] * len(doc.tokens)
    last_stop = -1
    last_ent = None
    for lo, hi, ent in _token_runs(doc, entities):
        if lo < last_stop:
            raise OverlappingEntities(
                f"{doc.doc_id}: {last_ent.concept.name}[{last_ent.start},{last_ent.end}) "
                f"and {ent.concept.name}[{ent.start},{ent.end}) share tokens"
            )
        tags[lo] = f"B-{ent.concept.name}"
        for i in range(lo + 1, hi):
            tags[i] = f"I-{ent.concept.name}"
        last_stop, last_ent = hi, ent
    return TagSequence(doc.doc_id, tuple(tags))


def decode_bio(tags: TagSequence | Sequence[str], doc: Document, *, source="predicted",
               repairs: list | None = None) -> list[Entity]:
    """Turn maximal B, I, I... runs back into character spans.

    An I- tag that does not continue a run of the same concept opens a new
    entity; each such repair is appended to ``repairs`` when given.
    """
    seq = tags.tags if isinstance(tags, TagSequence) else tuple(tags)
    if len(seq) != len(doc.tokens):
        raise LengthMismatch(f"{doc.doc_id}: {len(seq)} tags for {len(doc.tokens)} tokens")
    out = []
    cur = None  # (concept, first token, last token)

    def close():
        if cur is not None:
            concept, lo, hi = cur
            out.append(Entity(concept, doc.tokens[lo].start, doc.tokens[hi].end, doc.doc_id, source))

    for i, tag in enumerate(seq):
        prefix, concept = split_tag(tag)
        if prefix == OUTSIDE:
            close()
            cur = None
        elif prefix == "B" or cur is None or cur[0] is not concept:
            if prefix == "I":
                msg = f"{doc.doc_id}: token {i} {tag} does not continue a run; starting a new entity"
                log.debug(msg)
                if repairs is not None:
                    repairs.append(msg)
            close()
            cur = (concept, i, i)
        else:
            cur = (concept, cur[1], i)
    close()
    return out


def encode_bme_features(doc: Document, bme: Iterable[Entity]) -> np.ndarray:
    """(n_tokens, 14) uint8 matrix; column 2*k is B-, 2*k+1 is I- of BME concept k.

    Each BME concept is tagged independently, so a token can carry bits
    from several concepts. Within one concept a B wins over an I.
    """
    rows = np.zeros((len(doc.tokens), N_BME_FEATURES), dtype=np.uint8)
    order = {c: k for k, c in enumerate(BME_CONCEPTS)}
    for lo, hi, ent in _token_runs(doc, (e for e in bme if isinstance(e.concept, BmeConcept))):
        k = order[ent.concept]
        rows[lo, 2 * k] = 1
        rows[lo, 2 * k + 1] = 0
        for i in range(lo + 1, hi):
            if not rows[i, 2 * k]:
                rows[i, 2 * k + 1] = 1
    return rows


def bme_tag_sets(features: np.ndarray) -> list[frozenset[str]]:
    """Per-token set of BME tags represented by a feature matrix (empty = O)."""
    out = []
    for row in features:
        tags = set()
        for k, c in enumerate(BME_CONCEPTS):
            if row[2 * k]:
                tags.add(f"B-{c.name}")
            elif row[2 * k + 1]:
                tags.add(f"I-{c.name}")
        out.append(frozenset(tags))
    return out


def to_conll(doc: Document, tags: TagSequence) -> str:
    """Two-column token<TAB>tag text with a blank line after each sentence."""
    if len(tags) != len(doc.tokens):
        raise LengthMismatch(f"{doc.doc_id}: {len(tags)} tags for {len(doc.tokens)} tokens")
    blocks = []
    for sent in doc.sentences():
        blocks.append("".join(f"{doc.tokens[i].text}\t{tags.tags[i]}\n" for i in sent))
    return "\n".join(blocks)


def from_conll(data: str) -> list[tuple[str, str]]:
    """Parse two-column text back to (token, tag) pairs; sentence breaks dropped."""
    pairs = []
    for line in data.splitlines():
        if not line.strip():
            continue
        token, _, tag = line.rpartition("\t")
        pairs.append((token, tag))
    return pairs
